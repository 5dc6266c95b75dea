import numpy as np
import pytest

from src.errors import InvalidSpecError, InvariantError, ShapeError
from src.models.mdp import (
    ACTIONS, ActionPrior, ConditionalPolicy, GridWorldSpec, StateDistribution, TabularMdp, ValueTable,
    build_grid_world, cell_to_state, checked_probabilities, export_mdp, load_mdp,
    manhattan_distance_to_goal, permute_mdp, uniform_state_distribution
)
from tests.conftest import random_mdp


class TestProbabilityTables:

    def test_small_deviation_is_renormalized(self):
        probs = checked_probabilities([0.5, 0.5 + 5e-10], 'prior')
        assert probs.sum() == pytest.approx(1.0, abs=1e-15)

    def test_large_deviation_raises(self):
        with pytest.raises(InvariantError):
            ActionPrior([0.5, 0.6])

    def test_negative_entry_raises(self):
        with pytest.raises(InvariantError):
            ConditionalPolicy([[1.2, -0.2]])

    def test_tables_are_read_only(self):
        prior = ActionPrior([0.25, 0.75])
        with pytest.raises(ValueError):
            prior.probs[0] = 1.0

    def test_policy_must_be_a_matrix(self):
        with pytest.raises(ShapeError):
            ConditionalPolicy([0.5, 0.5])

    def test_value_table_rejects_nan(self):
        with pytest.raises(InvariantError):
            ValueTable([0.0, np.nan])


class TestTabularMdp:

    def test_discount_must_be_inside_unit_interval(self, rng):
        mdp = random_mdp(rng, 2, 2)
        with pytest.raises(InvariantError):
            TabularMdp(mdp.transition, mdp.reward, 1.0)

    def test_reward_shape_is_checked(self, rng):
        mdp = random_mdp(rng, 2, 2)
        with pytest.raises(ShapeError):
            TabularMdp(mdp.transition, np.zeros((2, 3)), 0.9)

    def test_terminal_state_must_self_loop_with_zero_reward(self):
        transition = np.zeros((2, 1, 2))
        transition[0, 0, 1] = 1.0
        transition[1, 0, 0] = 1.0
        with pytest.raises(InvariantError):
            TabularMdp(transition, np.zeros((2, 1)), 0.9, terminal_mask=[False, True])

    def test_permutation_relabels_consistently(self, rng):
        mdp = random_mdp(rng, 3, 2)
        order = [2, 0, 1]
        permuted = permute_mdp(mdp, order, [1, 0])
        assert permuted.reward[0, 0] == mdp.reward[2, 1]
        assert permuted.transition[1, 1, 0] == mdp.transition[0, 0, 2]


class TestGridWorld:

    def test_default_layout(self, grid_world):
        mdp, p = grid_world
        assert mdp.n_states == 16 * 16 + 1
        assert mdp.n_actions == len(ACTIONS) == 5
        assert mdp.terminal_mask.sum() == 1 and mdp.terminal_mask[-1]
        assert p.probs[-1] == 0.0
        np.testing.assert_allclose(p.probs[:-1], 1.0 / 256)

    def test_goal_cell_pays_and_terminates(self, grid_world):
        mdp, _ = grid_world
        goal = cell_to_state(GridWorldSpec(), 0, 0)
        np.testing.assert_array_equal(mdp.reward[goal], 9.0)
        np.testing.assert_array_equal(mdp.transition[goal, :, -1], 1.0)

    def test_walls_keep_agent_in_place(self, grid_world):
        mdp, _ = grid_world
        grid = GridWorldSpec()
        corner = cell_to_state(grid, 15, 15)
        right, up = ACTIONS.index('right'), ACTIONS.index('up')
        assert mdp.transition[corner, right, corner] == 1.0
        assert mdp.transition[corner, up, corner] == 1.0
        assert mdp.reward[corner, right] == -1.0

    def test_moves_follow_coordinates(self):
        grid = GridWorldSpec(width=3, height=2)
        mdp = build_grid_world(grid)
        start = cell_to_state(grid, 1, 0)
        assert mdp.transition[start, ACTIONS.index('up'), cell_to_state(grid, 1, 1)] == 1.0
        assert mdp.transition[start, ACTIONS.index('left'), cell_to_state(grid, 0, 0)] == 1.0
        assert manhattan_distance_to_goal(grid, cell_to_state(grid, 2, 1)) == 3

    def test_goal_outside_grid_is_rejected(self):
        with pytest.raises(InvalidSpecError):
            build_grid_world(GridWorldSpec(width=4, height=4, goal=(4, 0)))

    def test_empty_grid_is_rejected(self):
        with pytest.raises(InvalidSpecError):
            build_grid_world(GridWorldSpec(width=0, height=3))

    def test_state_distribution_excludes_terminal(self):
        mdp = build_grid_world(GridWorldSpec(width=2, height=2))
        assert isinstance(uniform_state_distribution(mdp), StateDistribution)
        np.testing.assert_allclose(uniform_state_distribution(mdp).probs, [0.25, 0.25, 0.25, 0.25, 0.0])


class TestMdpFile:

    def test_export_and_load_preserve_tables(self, tmp_path):
        mdp = build_grid_world(GridWorldSpec(width=3, height=2))
        path = export_mdp(mdp, tmp_path / 'mdp.txt')
        loaded = load_mdp(path)
        np.testing.assert_array_equal(loaded.transition, mdp.transition)
        np.testing.assert_array_equal(loaded.reward, mdp.reward)
        np.testing.assert_array_equal(loaded.terminal_mask, mdp.terminal_mask)
        assert loaded.discount == mdp.discount

    def test_header_line(self, tmp_path):
        mdp = build_grid_world(GridWorldSpec(width=2, height=1))
        path = export_mdp(mdp, tmp_path / 'mdp.txt')
        first = open(path, encoding='utf-8').readline().split()
        assert first == ['3', '5', '0.90000000000000002']

    def test_truncated_file_raises(self, tmp_path):
        path = tmp_path / 'bad.txt'
        path.write_text("2 2 0.9\n1 0\n")
        with pytest.raises(ShapeError):
            load_mdp(path)
