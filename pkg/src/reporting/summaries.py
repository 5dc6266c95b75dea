import math


def print_banner(title, width=60):
    print("=" * width)
    print(title)
    print("=" * width)


def print_sweep_summary(sweep):
    """Print the beta sweep table and the ordering checks"""
    print_banner("BETA SWEEP - STATE VALUES (GRID WORLD)")
    print(f"{'beta':>10} {'mode':>20} {'E_p[V]':>10} {'I(S;A)':>8} {'sweeps':>7}")
    for _, row in sweep.iterrows():
        flag = '' if row['converged'] else '  (not converged)'
        print(f"{row['beta']:>10g} {row['mode']:>20} {row['expected_value']:>10.4f} "
              f"{row['mutual_information']:>8.4f} {row['sweeps']:>7}{flag}")
    print()

    pivot = sweep.pivot(index='beta', columns='mode', values='expected_value')
    if {'soft_fixed_prior', 'mutual_information'} <= set(pivot.columns):
        dominated = (pivot['mutual_information'] >= pivot['soft_fixed_prior'] - 1e-6).all()
        print(f"{'✅' if dominated else '❌'} MI-regularized values >= soft values for every beta")
    errors = sweep[sweep['error'] != '']
    if len(errors):
        print(f"❌ {len(errors)} sweep row(s) failed")
    else:
        print("✅ every sweep row finished")
    print()


def print_vi_summary(result, expected_value):
    print_banner(f"VALUE ITERATION ({result.mode.value.upper()})")
    print(f"Sweeps: {result.sweeps}")
    print(f"Final residual: {result.residual_trace[-1]:.3e}")
    print(f"Converged: {'Yes' if result.converged else 'No'}")
    print(f"E_p[V]: {expected_value:.6f}")
    print(f"Max value: {result.values.values.max():.6f}")
    print()


def print_ba_summary(result, expected_value):
    print_banner("BLAHUT-ARIMOTO APPLICATION OF B*")
    print(f"Iterations: {result.iterations} ({'converged' if result.converged else 'iteration limit'})")
    print(f"Objective: {result.objective_trace[0]:.6f} -> {result.objective_trace[-1]:.6f}")
    print(f"Gap bound after {result.iterations} iterations: {result.gap_bound:.3e}")
    print(f"E_p[B* V]: {expected_value:.6f}")
    print(f"Prior: {', '.join(f'{p:.3f}' for p in result.prior.probs)}")
    print()


def print_audit_report(report):
    """Check lines in the validation style, one per audit check"""
    print_banner("🔍 ORACLE AUDIT")
    print(f"Instances: {report.instances} (seed {report.seed})")
    if report.fault_injection != 'none':
        print(f"⚠️  Fault injection active: {report.fault_injection}")
    for check in report.checks:
        icon = '✅' if check.passed else '❌'
        print(f"{icon} {check.check}: discrepancy {check.discrepancy:.3e} (tolerance {check.tolerance:.1e})")
    if report.passed:
        print("\n🎉 ALL AUDIT CHECKS PASSED!")
    else:
        print(f"\n❗ {len(report.failed_checks)} audit check(s) failed: {', '.join(report.failed_checks)}")
    print()


def print_training_summary(mode, aggregate, baseline, separation, failures):
    print_banner(f"TRAINING SUMMARY - {mode.upper()}")
    final = aggregate.iloc[-1]
    print(f"Seeds finished: {int(final['n_seeds'])}")
    print(f"Final trailing mean reward: {final['trailing_mean']:.2f} ± {final['trailing_stderr']:.2f}")
    print(f"Best-so-far trailing mean: {final['best_so_far_mean']:.2f} ± {final['best_so_far_stderr']:.2f}")
    print(f"Random baseline: {baseline.mean:.2f} (std {baseline.std:.2f}, standard error {baseline.stderr:.2f}, "
          f"{len(baseline.returns)} episodes)")
    if math.isfinite(separation):
        print(f"Separation from baseline: {separation:.1f} standard errors of the baseline mean")
    for seed, error in sorted(failures.items()):
        print(f"❌ seed {seed} aborted: {error}")
    print()
