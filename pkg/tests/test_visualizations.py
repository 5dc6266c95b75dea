import numpy as np
import pandas as pd

from src.models.training import BaselineResult
from src.reporting.visualizations import (
    create_learning_curve_chart,
    create_sweep_chart,
    create_value_map,
    mean_learning_curve
)


def test_sweep_chart_is_written(tmp_path):
    sweep = pd.DataFrame({
        'mode': ['soft_fixed_prior'] * 2 + ['mutual_information'] * 2,
        'beta': [0.1, 10.0, 0.1, 10.0],
        'expected_value': [-5.0, 1.0, -4.5, 2.0],
        'mutual_information': [0.0, 0.0, 0.01, 0.6]
    })
    path = create_sweep_chart(sweep, str(tmp_path / 'sweep.png'))
    assert (tmp_path / 'sweep.png').stat().st_size > 0
    assert path.endswith('sweep.png')


def test_value_map_ignores_terminal_state(tmp_path):
    values = np.arange(13, dtype=float)
    create_value_map(values, 4, 3, str(tmp_path / 'values.png'))
    assert (tmp_path / 'values.png').exists()


def test_learning_curve_chart_with_and_without_baseline(tmp_path):
    curve = pd.DataFrame({'step': [10, 20, 30], 'trailing_mean_reward': [-3.0, -2.0, -1.5]})
    curves = {'marginal': {0: curve, 1: curve}, 'fixed_uniform': {0: curve}}
    baseline = BaselineResult(np.array([-4.0, -3.0]), -3.5, 0.5)

    create_learning_curve_chart(curves, baseline, str(tmp_path / 'with.png'))
    create_learning_curve_chart(curves, None, str(tmp_path / 'without.png'))
    assert (tmp_path / 'with.png').exists()
    assert (tmp_path / 'without.png').exists()


def test_mean_learning_curve_averages_seeds_per_step():
    curves = {
        0: pd.DataFrame({'step': [10, 20], 'trailing_mean_reward': [-4.0, -2.0]}),
        1: pd.DataFrame({'step': [10, 20], 'trailing_mean_reward': [-2.0, np.nan]})
    }
    mean_curve = mean_learning_curve(curves)
    assert list(mean_curve.index) == [10, 20]
    np.testing.assert_allclose(mean_curve.values, [-3.0, -2.0])
