"""
Bounded FIFO replay buffer with uniform minibatch sampling
"""

import numpy as np

from src.errors import ContractError


class ReplayBuffer:
    """Ring buffer; once full, every insertion evicts the oldest item"""

    def __init__(self, capacity):
        capacity = int(capacity)
        if capacity < 1:
            raise ContractError(f"replay capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._items = []
        self._next = 0

    def __len__(self):
        return len(self._items)

    def add(self, item):
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def items(self):
        """Contents from oldest to newest"""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._next:] + self._items[:self._next]

    def sample(self, rng, batch_size):
        """batch_size items drawn uniformly with replacement"""
        if not self._items:
            raise ContractError("cannot sample from an empty replay buffer")
        indices = rng.integers(0, len(self._items), size=int(batch_size))
        return [self._items[i] for i in indices]


def stack_transitions(transitions):
    """Column arrays (states, actions, rewards, next_states, dones, truncated) for a batch"""
    return (
        np.stack([t.state for t in transitions]),
        np.stack([t.action for t in transitions]),
        np.array([t.reward for t in transitions], dtype=np.float64),
        np.stack([t.next_state for t in transitions]),
        np.array([t.done for t in transitions], dtype=bool),
        np.array([t.truncated for t in transitions], dtype=bool)
    )
