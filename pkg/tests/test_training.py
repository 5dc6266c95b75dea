import os

import numpy as np
import pandas as pd
import pytest

from config.loader import load_config
from src.agents.miracle import PRIOR_MODES, MiracleConfig
from src.envs.toy import make_env
from src.errors import ContractError, TrainingAbortedError
from src.models import training
from src.models.training import (
    CURVE_COLUMNS, BaselineResult, aggregate_summary, baseline_separation, competes_with, env_seed,
    evaluation_steps, random_policy_baseline, run_seed, run_seeds, seed_summary, train
)

SHORT_ENV = {'horizon': 10}


def tiny_config(**overrides):
    values = dict(hidden_width=8, minibatch=8, warmup_steps=20, buffer_capacity=500,
                  marginal_buffer_capacity=100, marginal_sample_count=4, reward_scale=1.0)
    values.update(overrides)
    return MiracleConfig(**values)


class TestTrain:

    def test_curve_has_one_row_per_episode(self):
        curve = run_seed('point_mass', tiny_config(), steps=40, trailing_window=2, env_params=SHORT_ENV)
        assert list(curve.columns) == CURVE_COLUMNS
        assert list(curve['step']) == [10, 20, 30, 40]
        assert list(curve['episode']) == [1, 2, 3, 4]
        expected = curve['episode_reward'].rolling(2, min_periods=1).mean()
        np.testing.assert_allclose(curve['trailing_mean_reward'], expected)
        assert (curve['best_so_far'] == curve['trailing_mean_reward'].cummax()).all()

    def test_runs_are_reproducible(self):
        first = run_seed('pendulum_like', tiny_config(seed=3), steps=30, env_params=SHORT_ENV)
        second = run_seed('pendulum_like', tiny_config(seed=3), steps=30, env_params=SHORT_ENV)
        pd.testing.assert_frame_equal(first, second)

    def test_prior_modes_agree_during_warmup(self):
        learned = run_seed('point_mass', tiny_config(prior_mode='learned_marginal'), steps=20, env_params=SHORT_ENV)
        uniform = run_seed('point_mass', tiny_config(prior_mode='fixed_uniform'), steps=20, env_params=SHORT_ENV)
        pd.testing.assert_frame_equal(learned, uniform)

    def test_checkpoints_are_written(self, tmp_path):
        run_seed('point_mass', tiny_config(seed=2), steps=30, checkpoint_interval=15,
                 checkpoint_dir=str(tmp_path), env_params=SHORT_ENV)
        names = sorted(os.listdir(tmp_path))
        assert 'learned_marginal_seed2_step15_policy.ckpt' in names
        assert 'learned_marginal_seed2_step30_marginal.ckpt' in names

    def test_steps_must_be_positive(self):
        with pytest.raises(ContractError):
            train(make_env('point_mass'), tiny_config(), steps=0)

    def test_env_seed_depends_on_the_run_seed(self):
        assert env_seed(0) == env_seed(0)
        assert env_seed(0) != env_seed(1)


class TestRunSeeds:

    def test_failed_seed_does_not_stop_the_others(self, monkeypatch):
        def fake_run_seed(env_name, cfg, steps, **kwargs):
            if cfg.seed == 1:
                raise TrainingAbortedError(5, 'q_loss', float('nan'))
            return pd.DataFrame({'seed': [cfg.seed]})

        monkeypatch.setattr(training, 'run_seed', fake_run_seed)
        curves, failures = run_seeds('point_mass', tiny_config(), [0, 1, 2], steps=10)
        assert sorted(curves) == [0, 2]
        assert list(failures) == [1]
        assert 'q_loss' in failures[1]


class TestSummaries:

    @pytest.fixture
    def curves(self):
        return {
            0: pd.DataFrame({'seed': 0, 'step': [10, 20, 30], 'episode': [1, 2, 3],
                             'episode_reward': [-5.0, -3.0, -1.0], 'trailing_mean_reward': [-5.0, -4.0, -3.0],
                             'best_so_far': [-5.0, -4.0, -3.0]}),
            1: pd.DataFrame({'seed': 1, 'step': [15, 30], 'episode': [1, 2],
                             'episode_reward': [-4.0, -2.0], 'trailing_mean_reward': [-4.0, -3.0],
                             'best_so_far': [-4.0, -3.0]})
        }

    def test_evaluation_steps(self):
        assert evaluation_steps(100, 30) == [30, 60, 90, 100]
        assert evaluation_steps(90, 30) == [30, 60, 90]
        assert evaluation_steps(100, 0) == [100]

    def test_seed_summary_takes_the_last_finished_episode(self, curves):
        summary = seed_summary(curves, [12, 30])
        first = summary[summary['step'] == 12].set_index('seed')
        assert first.loc[0, 'episodes'] == 1
        assert first.loc[1, 'episodes'] == 0 and np.isnan(first.loc[1, 'trailing_mean_reward'])
        last = summary[summary['step'] == 30].set_index('seed')
        assert list(last['trailing_mean_reward']) == [-3.0, -3.0]

    def test_aggregate_mean_and_stderr(self, curves):
        aggregate = aggregate_summary(seed_summary(curves, [20, 30]))
        row = aggregate.set_index('step').loc[20]
        assert row['n_seeds'] == 2
        assert row['trailing_mean'] == pytest.approx(-4.0)
        assert row['trailing_stderr'] == pytest.approx(0.0)
        assert aggregate.set_index('step').loc[30, 'best_so_far_mean'] == pytest.approx(-3.0)

    def test_baseline_separation_counts_standard_errors(self):
        baseline = BaselineResult(np.array([-10.0, -12.0]), -11.0, 1.4, 2.0)
        assert baseline_separation(-5.0, baseline) == pytest.approx(3.0)
        flat = BaselineResult(np.array([-1.0]), -1.0, 0.0, 0.0)
        assert baseline_separation(0.0, flat) == np.inf
        assert baseline_separation(-2.0, flat) == 0.0

    def test_competes_with_uses_the_lower_quartile(self):
        reference = [-40.0, -30.0, -20.0, -10.0]
        assert competes_with([-31.0, -29.0], reference)
        assert not competes_with([-36.0, -34.0], reference)
        assert competes_with([0.0], reference)
        with pytest.raises(ContractError):
            competes_with([], reference)


class TestBaseline:

    def test_one_return_per_seed_and_episode(self):
        baseline = random_policy_baseline('point_mass', range(4), episodes=2, env_params=SHORT_ENV)
        assert len(baseline.returns) == 8
        assert baseline.mean == pytest.approx(np.mean(baseline.returns))
        assert baseline.stderr == pytest.approx(np.std(baseline.returns, ddof=1) / np.sqrt(8))
        assert np.all(baseline.returns <= 0.0)

    def test_baseline_is_reproducible(self):
        first = random_policy_baseline('pendulum_like', [5], env_params=SHORT_ENV)
        second = random_policy_baseline('pendulum_like', [5], env_params=SHORT_ENV)
        np.testing.assert_array_equal(first.returns, second.returns)
        assert first.std == 0.0
        assert first.stderr == 0.0



DESK_SCALE_CONFIG = os.path.join(os.path.dirname(__file__), os.pardir, 'config', 'desk_scale.json')
DESK_SCALE_STEPS = {'point_mass': 8000, 'pendulum_like': 15000}
DESK_SCALE_SEEDS = [0, 1]


@pytest.fixture(scope='module')
def desk_scale_runs():
    """Random baseline and final trailing means per prior mode, for both environments"""
    config = load_config(DESK_SCALE_CONFIG)
    runs = {}
    for env_name, steps in DESK_SCALE_STEPS.items():
        env_params = config['environments'][env_name]
        baseline = random_policy_baseline(env_name, range(config['training']['baseline_seeds']),
                                          env_params=env_params)
        finals = {}
        for mode in PRIOR_MODES:
            cfg = MiracleConfig.from_config(config['miracle'], env_params, prior_mode=mode)
            curves, failures = run_seeds(env_name, cfg, DESK_SCALE_SEEDS, steps,
                                         config['training']['trailing_window'], env_params=env_params)
            assert failures == {}
            finals[mode] = np.array([curves[seed]['trailing_mean_reward'].iloc[-1] for seed in sorted(curves)])
        runs[env_name] = baseline, finals
    return runs


@pytest.mark.slow
class TestDeskScaleLearning:

    @pytest.mark.parametrize('env_name', sorted(DESK_SCALE_STEPS))
    @pytest.mark.parametrize('mode', PRIOR_MODES)
    def test_both_prior_modes_clear_the_random_baseline(self, desk_scale_runs, env_name, mode):
        baseline, finals = desk_scale_runs[env_name]
        assert baseline_separation(float(np.mean(finals[mode])), baseline) >= 5.0

    def test_learned_marginal_competes_with_the_uniform_prior(self, desk_scale_runs):
        assert any(competes_with(finals['learned_marginal'], finals['fixed_uniform'])
                   for _, finals in desk_scale_runs.values())
