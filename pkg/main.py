#!/usr/bin/env python3
"""
MI-regularized decision making - experiment CLI
Grid-world beta sweeps, value iteration, Blahut-Arimoto runs, oracle audits and MIRACLE training
"""

import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

from config.loader import load_config
from config.settings import LOG_LEVEL_ENV
from src.calculations.bellman import BellmanConfig, apply_b_star, gap_bound
from src.calculations.information import mutual_information
from src.errors import EXIT_OK, AuditFailedError, ConfigError, MirlError, NumericalFailureError
from src.models.audit import run_audit
from src.models.mdp import (
    GridWorldSpec, StateDistribution, build_grid_world, export_mdp, state_to_cell,
    uniform_policy, uniform_prior, uniform_state_distribution
)
from src.models.training import (
    aggregate_summary, baseline_separation, checkpoint_directory, competes_with, evaluation_steps,
    random_policy_baseline, run_seeds, seed_summary
)
from src.models.value_iteration import BackupMode, beta_sweep, rate_distortion_solve, value_iteration
from src.agents.miracle import PRIOR_MODES, MiracleConfig
from src.reporting.csv_reports import ExperimentManifest, ensure_output_directory
from src.reporting.summaries import (
    print_audit_report, print_ba_summary, print_banner, print_sweep_summary,
    print_training_summary, print_vi_summary
)

logger = logging.getLogger('mirl')

COMMANDS = ('gridworld-sweep', 'vi', 'ba-solve', 'rate-distortion', 'audit', 'train')


def setup_logging():
    """Log level from the MIRL_LOG_LEVEL environment variable (default INFO)"""
    level_name = os.environ.get(LOG_LEVEL_ENV, 'INFO').upper()
    level = getattr(logging, level_name, None)
    known = isinstance(level, int)
    logging.basicConfig(level=level if known else logging.INFO,
                        format='%(asctime)s %(levelname)-7s %(name)s: %(message)s')
    if not known:
        logger.warning("unknown log level '%s' in %s, using INFO", level_name, LOG_LEVEL_ENV)


def parse_seeds(text):
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got '{text}'") from exc


def build_parser():
    parser = argparse.ArgumentParser(
        prog='main.py',
        description='Mutual-information regularized value iteration and MIRACLE experiments'
    )
    parser.add_argument('--config', help='JSON file with overrides of config/settings.py')
    parser.add_argument('--seed', type=int, help='seed for audit / single-seed training')
    parser.add_argument('--seeds', type=parse_seeds, help='comma-separated training seeds')
    parser.add_argument('--out-dir', help='directory for CSV/JSON artifacts')
    parser.add_argument('--mode', help='vi: standard | soft_fixed_prior | mutual_information; '
                                       'train: learned_marginal | fixed_uniform | both')
    parser.add_argument('--plot', action='store_true', help='also draw PNG charts (not hashed)')
    parser.add_argument('command', choices=COMMANDS)
    return parser


def grid_world_setup(config):
    grid = GridWorldSpec.from_config(config['grid_world'])
    mdp = build_grid_world(grid)
    return grid, mdp, uniform_state_distribution(mdp)


def cmd_gridworld_sweep(args, config, manifest):
    """Soft and MI-regularized value iteration for every beta of the sweep"""
    _, mdp, p = grid_world_setup(config)
    bellman = BellmanConfig.from_config(config['bellman'])
    sweep = beta_sweep(mdp, p, config['beta_sweep']['betas'], bellman)
    manifest.write_csv(sweep, 'gridworld_sweep.csv', {'grid_world': config['grid_world']})
    print_sweep_summary(sweep)
    if args.plot:
        from src.reporting.visualizations import create_sweep_chart
        create_sweep_chart(sweep, os.path.join(manifest.out_dir, 'gridworld_sweep.png'))
    failed = sweep[sweep['error'] != '']
    if len(failed):
        raise NumericalFailureError(f"{len(failed)} sweep row(s) failed")


def cmd_vi(args, config, manifest):
    grid, mdp, p = grid_world_setup(config)
    mode = BackupMode(args.mode or BackupMode.MUTUAL_INFORMATION.value)
    bellman = BellmanConfig.from_config(config['bellman'])
    prior = uniform_prior(mdp.n_actions) if mode is BackupMode.SOFT else None
    result = value_iteration(mdp, p, bellman, mode=mode, prior=prior)

    trace = pd.DataFrame({'sweep': np.arange(1, result.sweeps + 1), 'residual': result.residual_trace})
    manifest.write_csv(trace, 'vi_trace.csv', {'mode': mode.value, 'converged': result.converged})
    rows = []
    for state, value in enumerate(result.values.values):
        x, y = state_to_cell(grid, state) if state < grid.n_cells else (-1, -1)
        rows.append({'state': state, 'x': x, 'y': y, 'value': value})
    manifest.write_csv(pd.DataFrame(rows), 'vi_values.csv', {'mode': mode.value})
    manifest.write_file(export_mdp(mdp, os.path.join(manifest.out_dir, 'mdp.txt')))

    print_vi_summary(result, float(p.probs @ result.values.values))
    if args.plot:
        from src.reporting.visualizations import create_value_map
        create_value_map(result.values.values, grid.width, grid.height,
                         os.path.join(manifest.out_dir, 'vi_values.png'))


def _ba_trace(result, p, beta):
    init = uniform_policy(len(p.probs), result.policy.n_actions)
    return pd.DataFrame({
        'm': np.arange(1, result.iterations + 1),
        'objective': result.objective_trace,
        'gap_bound': [gap_bound(init, p, beta, m) for m in range(1, result.iterations + 1)]
    })


def cmd_ba_solve(args, config, manifest):
    """One application of B* to v = 0 on the grid world"""
    _, mdp, p = grid_world_setup(config)
    bellman = BellmanConfig.from_config(config['bellman'])
    values, result = apply_b_star(mdp, np.zeros(mdp.n_states), p, bellman)
    manifest.write_csv(_ba_trace(result, p, bellman.beta), 'ba_trace.csv',
                       {'beta': bellman.beta, 'converged': result.converged})
    print_ba_summary(result, float(p.probs @ values.values))


def cmd_rate_distortion(args, config, manifest):
    section = config['rate_distortion']
    reward = np.asarray(section['reward'], dtype=np.float64)
    if reward.ndim != 2:
        raise ConfigError("rate_distortion.reward must be a matrix")
    weights = section['state_distribution'] or [1.0 / reward.shape[0]] * reward.shape[0]
    p = StateDistribution(weights)
    bellman = BellmanConfig.from_config(config['bellman'])
    result = rate_distortion_solve(reward, p, section['beta'], bellman)

    manifest.write_csv(_ba_trace(result, p, section['beta']), 'rate_distortion.csv', {'beta': section['beta']})
    rows = [dict({'row': f'state_{s}'}, **{f'action_{a}': prob for a, prob in enumerate(result.policy.probs[s])})
            for s in range(result.policy.n_states)]
    rows.append(dict({'row': 'prior'}, **{f'action_{a}': prob for a, prob in enumerate(result.prior.probs)}))
    information = mutual_information(result.policy, p)
    manifest.write_csv(pd.DataFrame(rows), 'rate_distortion_policy.csv', {'mutual_information': information})

    print_ba_summary(result, float(result.objective_trace[-1]))
    print(f"I(S;A): {information:.6f} nats")


def cmd_audit(args, config, manifest):
    report = run_audit(config['audit'], seed=args.seed)
    manifest.write_json(report.to_dict(), 'audit_report.json')
    print_audit_report(report)
    if not report.passed:
        raise AuditFailedError(report.failed_checks)


def _train_modes(args, config):
    mode = args.mode or config['miracle']['prior_mode']
    if mode == 'both':
        return list(PRIOR_MODES)
    if mode not in PRIOR_MODES:
        raise ConfigError(f"train mode must be one of {PRIOR_MODES + ('both',)}, got '{mode}'")
    return [mode]


def cmd_train(args, config, manifest):
    training = config['training']
    env_name = training['env']
    if env_name not in config['environments']:
        raise ConfigError(f"unknown environment '{env_name}'")
    env_params = config['environments'][env_name]
    seeds = manifest.seeds
    steps = int(training['steps'])
    eval_steps = evaluation_steps(steps, int(training['checkpoint_interval']))
    checkpoint_dir = checkpoint_directory(manifest.out_dir) if training['checkpoint_interval'] else None

    baseline = random_policy_baseline(env_name, range(int(training['baseline_seeds'])), env_params=env_params)
    manifest.write_csv(pd.DataFrame({'episode': np.arange(len(baseline.returns)), 'reward': baseline.returns}),
                       'baseline.csv', {'env': env_name, 'mean': baseline.mean,
                                       'std': baseline.std, 'stderr': baseline.stderr})

    all_failures, curves_by_mode, finals_by_mode = {}, {}, {}
    for mode in _train_modes(args, config):
        cfg = MiracleConfig.from_config(config['miracle'], env_params, prior_mode=mode)
        print_banner(f"🚀 Training {mode} on {env_name}: {len(seeds)} seed(s), {steps} steps")
        curves, failures = run_seeds(env_name, cfg, seeds, steps, int(training['trailing_window']),
                                     int(training['checkpoint_interval']), checkpoint_dir, env_params,
                                     int(training['workers']))
        for seed in sorted(curves):
            manifest.write_csv(curves[seed], f'curve_{mode}_seed{seed}.csv', {'mode': mode, 'seed': seed})
        if curves:
            summary = seed_summary(curves, eval_steps)
            aggregate = aggregate_summary(summary)
            separation = baseline_separation(aggregate['trailing_mean'].iloc[-1], baseline)
            manifest.write_csv(summary, f'summary_{mode}.csv', {'mode': mode})
            manifest.write_csv(aggregate, f'final_{mode}.csv',
                               {'mode': mode, 'baseline_separation': separation})
            print_training_summary(mode, aggregate, baseline, separation, failures)
            finals_by_mode[mode] = summary.loc[summary['step'] == steps, 'trailing_mean_reward'].dropna().to_numpy()
        curves_by_mode[mode] = curves
        all_failures.update({f'{mode}/seed{seed}': error for seed, error in failures.items()})

    if all(len(finals_by_mode.get(mode, ())) for mode in PRIOR_MODES):
        competitive = competes_with(finals_by_mode['learned_marginal'], finals_by_mode['fixed_uniform'])
        print(f"{'✅' if competitive else '❌'} learned_marginal mean within or above the fixed_uniform "
              f"interquartile range on {env_name}")

    if checkpoint_dir and os.path.isdir(checkpoint_dir):
        for name in sorted(os.listdir(checkpoint_dir)):
            manifest.write_file(os.path.join(checkpoint_dir, name))
    if args.plot:
        from src.reporting.visualizations import create_learning_curve_chart
        create_learning_curve_chart(curves_by_mode, baseline, os.path.join(manifest.out_dir, 'learning_curves.png'))
    if all_failures:
        raise NumericalFailureError(f"{len(all_failures)} training run(s) aborted: {sorted(all_failures)}")


HANDLERS = {
    'gridworld-sweep': cmd_gridworld_sweep,
    'vi': cmd_vi,
    'ba-solve': cmd_ba_solve,
    'rate-distortion': cmd_rate_distortion,
    'audit': cmd_audit,
    'train': cmd_train
}


def resolve_seeds(args, config):
    if args.seeds:
        return args.seeds
    if args.seed is not None:
        return [args.seed]
    if args.command == 'train':
        return list(config['training']['seeds'])
    if args.command == 'audit':
        return [config['audit']['seed']]
    return []


def main(argv=None):
    """Run one subcommand; returns the process exit code"""
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.mode and args.command not in ('vi', 'train'):
            raise ConfigError(f"--mode is not used by '{args.command}'")
        if args.command == 'vi' and args.mode and args.mode not in [m.value for m in BackupMode]:
            raise ConfigError(f"vi mode must be one of {[m.value for m in BackupMode]}, got '{args.mode}'")
        out_dir = ensure_output_directory(args.out_dir or config['output']['out_dir'])
        manifest = ExperimentManifest(args.command, args.config, resolve_seeds(args, config), out_dir, config)
        try:
            HANDLERS[args.command](args, config, manifest)
        finally:
            if manifest.files:
                manifest.save()
    except MirlError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"❌ {args.command} failed: {exc}")
        return exc.exit_code
    print(f"\n💾 Artifacts written to '{out_dir}/'")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
