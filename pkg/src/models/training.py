"""
MIRACLE training loop, the uniform-random baseline and the multi-seed runner
"""

import dataclasses
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.agents.miracle import MiracleAgent, spawn_streams
from src.envs.toy import Transition, episode_returns, make_env, rollout
from src.errors import ContractError, MirlError

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ['seed', 'step', 'episode', 'episode_reward', 'trailing_mean_reward', 'best_so_far']


@dataclass(frozen=True)
class BaselineResult:
    returns: np.ndarray
    mean: float
    std: float
    stderr: float = 0.0


def env_seed(seed):
    """Environment seed derived from the run seed's dedicated stream"""
    return int(spawn_streams(seed)['env'].integers(0, 2 ** 31 - 1))


def train(env, cfg, steps, trailing_window=100, checkpoint_interval=0, checkpoint_dir=None):
    """Run MIRACLE (or the fixed-uniform ablation) for the given number of environment steps.

    Every step acts, stores the transition, and after the warm-up performs one update of
    every network. Returns one learning-curve row per finished episode.
    """
    if steps < 1:
        raise ContractError(f"training needs at least one step, got {steps}")
    agent = MiracleAgent(env.state_dim, env.action_dim, cfg)
    observation = env.reset()
    episode_reward, episode = 0.0, 0
    finished, rows = [], []
    best = -np.inf

    for step in range(1, steps + 1):
        action = agent.act(observation, explore=step <= cfg.warmup_steps)
        next_observation, reward, done, truncated = env.step(action)
        agent.observe(Transition(observation, np.asarray(action), reward, next_observation, done, truncated))
        if step > cfg.warmup_steps:
            losses = agent.update()
            if step % 1000 == 0:
                logger.debug("seed %d step %d losses %s", cfg.seed, step,
                             {name: round(value, 4) for name, value in losses.items()})

        episode_reward += reward
        if done:
            episode += 1
            finished.append(episode_reward)
            trailing = float(np.mean(finished[-trailing_window:]))
            best = max(best, trailing)
            rows.append({
                'seed': cfg.seed,
                'step': step,
                'episode': episode,
                'episode_reward': episode_reward,
                'trailing_mean_reward': trailing,
                'best_so_far': best
            })
            if episode % 10 == 0:
                logger.info("seed %d episode %d step %d trailing mean %.2f", cfg.seed, episode, step, trailing)
            episode_reward = 0.0
            observation = env.reset()
        else:
            observation = next_observation

        if checkpoint_dir and checkpoint_interval and step % checkpoint_interval == 0:
            agent.save_checkpoint(checkpoint_dir, f"{cfg.prior_mode}_seed{cfg.seed}_step{step}")

    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def run_seed(env_name, cfg, steps, trailing_window=100, checkpoint_interval=0, checkpoint_dir=None,
             env_params=None):
    env = make_env(env_name, seed=env_seed(cfg.seed), params=env_params)
    return train(env, cfg, steps, trailing_window, checkpoint_interval, checkpoint_dir)


def _run_seed_job(job):
    env_name, cfg, kwargs = job
    try:
        return cfg.seed, run_seed(env_name, cfg, **kwargs), None
    except MirlError as exc:
        logger.error("seed %d aborted: %s", cfg.seed, exc)
        return cfg.seed, None, str(exc)


def run_seeds(env_name, cfg, seeds, steps, trailing_window=100, checkpoint_interval=0, checkpoint_dir=None,
              env_params=None, workers=1):
    """Train one agent per seed; returns (curves by seed, error message by failed seed) in seed order"""
    kwargs = dict(steps=steps, trailing_window=trailing_window, checkpoint_interval=checkpoint_interval,
                  checkpoint_dir=checkpoint_dir, env_params=env_params)
    jobs = [(env_name, dataclasses.replace(cfg, seed=int(seed)), kwargs) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed_job, jobs))
    else:
        results = [_run_seed_job(job) for job in jobs]
    curves = {seed: curve for seed, curve, error in results if error is None}
    failures = {seed: error for seed, curve, error in results if error is not None}
    return curves, failures


def random_policy_baseline(env_name, seeds, episodes=1, env_params=None):
    """Episodic rewards of the uniform-random policy, one generator per seed"""
    returns = []
    for seed in seeds:
        env = make_env(env_name, seed=env_seed(seed), params=env_params)
        rng = np.random.default_rng(seed)
        transitions = rollout(env, lambda _: rng.uniform(-1.0, 1.0, size=env.action_dim), env.horizon * episodes)
        returns.extend(episode_returns(transitions))
    returns = np.array(returns)
    std = float(np.std(returns, ddof=1)) if len(returns) > 1 else 0.0
    return BaselineResult(returns, float(np.mean(returns)), std, float(std / np.sqrt(len(returns))))


def evaluation_steps(steps, checkpoint_interval):
    """Steps at which seeds are compared: every checkpoint interval plus the final step"""
    grid = list(range(checkpoint_interval, steps + 1, checkpoint_interval)) if checkpoint_interval else []
    if not grid or grid[-1] != steps:
        grid.append(steps)
    return grid


def seed_summary(curves, eval_steps):
    """One row per (step, seed): the learning-curve state at the last episode finished by that step"""
    rows = []
    for step in eval_steps:
        for seed in sorted(curves):
            curve = curves[seed]
            reached = curve[curve['step'] <= step]
            last = reached.iloc[-1] if len(reached) else None
            rows.append({
                'step': step,
                'seed': seed,
                'episodes': int(last['episode']) if last is not None else 0,
                'trailing_mean_reward': float(last['trailing_mean_reward']) if last is not None else np.nan,
                'best_so_far': float(last['best_so_far']) if last is not None else np.nan
            })
    return pd.DataFrame(rows, columns=['step', 'seed', 'episodes', 'trailing_mean_reward', 'best_so_far'])


def _stderr(values):
    values = values.dropna()
    return float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0


def aggregate_summary(summary):
    """Mean and standard error across seeds per evaluation step"""
    rows = []
    for step, group in summary.groupby('step', sort=True):
        rows.append({
            'step': step,
            'n_seeds': int(group['trailing_mean_reward'].notna().sum()),
            'trailing_mean': float(group['trailing_mean_reward'].mean()),
            'trailing_stderr': _stderr(group['trailing_mean_reward']),
            'best_so_far_mean': float(group['best_so_far'].mean()),
            'best_so_far_stderr': _stderr(group['best_so_far'])
        })
    return pd.DataFrame(rows, columns=['step', 'n_seeds', 'trailing_mean', 'trailing_stderr',
                                       'best_so_far_mean', 'best_so_far_stderr'])


def baseline_separation(final_mean, baseline):
    """How far the final mean lies above the baseline mean, in standard errors of the baseline mean"""
    if baseline.stderr == 0:
        return np.inf if final_mean > baseline.mean else 0.0
    return (final_mean - baseline.mean) / baseline.stderr


def competes_with(finals, reference):
    """True when the mean of finals lies within or above the interquartile range of reference"""
    finals = np.asarray(finals, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if finals.size == 0 or reference.size == 0:
        raise ContractError("comparing prior modes needs at least one finished seed per mode")
    return bool(np.mean(finals) >= np.percentile(reference, 25))


def checkpoint_directory(out_dir):
    return os.path.join(out_dir, 'checkpoints')
