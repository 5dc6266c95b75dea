"""
Oracle audit: closed forms and the Blahut-Arimoto scheme checked against brute force
on small random instances
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.calculations.bellman import (
    BellmanConfig, advantage_matrix, apply_b_star, concise_bellman, evaluate_operator,
    gap_bound, optimal_policy_step, run_blahut_arimoto, tilted_policy
)
from src.calculations.information import expected_conditional_kl, kl_divergence, marginalize_policy
from src.calculations.oracles import averaged_gap, best_policy_row, brute_force_b_star, row_objective
from src.errors import ContractError
from src.models.mdp import (
    ActionPrior, StateDistribution, TabularMdp, ValueTable, permute_mdp, uniform_policy, uniform_prior
)
from src.models.value_iteration import BackupMode, value_iteration

logger = logging.getLogger(__name__)

MONOTONICITY_SLACK = 1e-10
FAULTS = ('none', 'sign_flip')


@dataclass(frozen=True)
class AuditInstance:
    mdp: TabularMdp
    values: ValueTable
    p: StateDistribution
    beta: float


@dataclass(frozen=True)
class AuditCheck:
    check: str
    discrepancy: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'check': self.check,
            'discrepancy': self.discrepancy,
            'tolerance': self.tolerance,
            'passed': self.passed,
            **self.detail
        }


@dataclass
class AuditReport:
    checks: list = field(default_factory=list)
    instances: int = 0
    seed: int = 0
    fault_injection: str = 'none'

    def add(self, name, discrepancy, tolerance, **detail):
        passed = bool(discrepancy <= tolerance)
        self.checks.append(AuditCheck(name, float(discrepancy), float(tolerance), passed, detail))
        log = logger.info if passed else logger.error
        log("audit %-28s discrepancy=%.3e tolerance=%.1e %s", name, discrepancy, tolerance,
            'pass' if passed else 'FAIL')

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self):
        return [check.check for check in self.checks if not check.passed]

    def to_dict(self):
        return {
            'seed': self.seed,
            'instances': self.instances,
            'fault_injection': self.fault_injection,
            'passed': self.passed,
            'checks': [check.to_dict() for check in self.checks]
        }


def random_instance(rng, n_states, n_actions, beta_range, discount):
    """Random MDP, value table, state distribution and inverse temperature"""
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    mdp = TabularMdp(transition, reward, discount)
    values = ValueTable(rng.uniform(-1.0, 1.0, size=n_states))
    p = StateDistribution(rng.dirichlet(np.ones(n_states)))
    beta = float(rng.uniform(*beta_range))
    return AuditInstance(mdp, values, p, beta)


def _closed_form_mdp(mdp, fault):
    # negative control: the closed-form side sees negated rewards, the oracles do not
    if fault == 'sign_flip':
        return TabularMdp(mdp.transition, -mdp.reward, mdp.discount, mdp.terminal_mask)
    return mdp


def _oracle_resolution(section, n_actions):
    return section['oracle_resolution_2'] if n_actions <= 2 else section['oracle_resolution_3']


def _check_oracle_and_bounds(report, instances, section, fault):
    oracle_errors, violations, gap_excess, scaled_gaps = [], 0, [], []
    horizon = int(section['gap_horizon'])
    for instance in instances:
        cfg = BellmanConfig(beta=instance.beta, inner_tolerance=section['inner_tolerance'],
                            max_inner_iters=int(section['max_inner_iters']))
        resolution = _oracle_resolution(section, instance.mdp.n_actions)
        oracle_value, _ = brute_force_b_star(instance.mdp, instance.values.values, instance.p, instance.beta,
                                             resolution)

        closed = _closed_form_mdp(instance.mdp, fault)
        values, result = apply_b_star(closed, instance.values, instance.p, cfg)
        oracle_errors.append(abs(float(instance.p.probs @ values.values) - oracle_value))
        violations += int(np.sum(np.diff(result.objective_trace) < -MONOTONICITY_SLACK))

        # fixed-length run from the uniform init for the averaged gap
        init = uniform_policy(closed.n_states, closed.n_actions).probs
        _, _, trace, _ = run_blahut_arimoto(advantage_matrix(closed, instance.values), instance.p.probs,
                                            instance.beta, init, 0.0, horizon)
        for M in range(1, horizon + 1):
            gap = averaged_gap(trace, oracle_value, M)
            gap_excess.append(gap - gap_bound(init, instance.p, instance.beta, M))
            scaled_gaps.append(gap * M * instance.beta)

    report.add('ba_matches_oracle', max(oracle_errors), section['oracle_tolerance'],
               oracle_resolution=_oracle_resolution(section, section['n_actions']))
    report.add('ba_monotone', violations, 0, monotonicity_violations=violations)
    report.add('averaged_gap_bound', max(gap_excess), 1e-9,
               max_scaled_gap=max(scaled_gaps),
               log_n_actions=math.log(instances[0].mdp.n_actions),
               oracle_resolution=_oracle_resolution(section, section['n_actions']))


def _check_concise_identity(report, rng, section, fault):
    worst = 0.0
    for _ in range(int(section['identity_instances'])):
        instance = random_instance(rng, section['n_states'], section['n_actions'],
                                   section['beta_range'], section['discount'])
        prior = ActionPrior(rng.dirichlet(np.ones(instance.mdp.n_actions)))
        concise = concise_bellman(_closed_form_mdp(instance.mdp, fault), instance.values, prior, instance.beta)
        policy = optimal_policy_step(instance.mdp, instance.values, prior, instance.beta)
        evaluated = evaluate_operator(instance.mdp, instance.values, prior, policy, instance.beta)
        worst = max(worst, float(np.max(np.abs(concise.values - evaluated.values))))
    report.add('concise_form_identity', worst, 1e-9)


def _check_prior_optimality(report, rng, instances, section):
    worst = -math.inf
    for instance in instances:
        cfg = BellmanConfig(beta=instance.beta)
        _, result = apply_b_star(instance.mdp, instance.values, instance.p, cfg)
        marginal = marginalize_policy(result.policy, instance.p)
        baseline = float(instance.p.probs @ evaluate_operator(
            instance.mdp, instance.values, marginal, result.policy, instance.beta).values)
        for _ in range(int(section['prior_perturbations'])):
            noise = np.exp(rng.normal(scale=0.5, size=marginal.n_actions))
            perturbed = ActionPrior(marginal.probs * noise / np.sum(marginal.probs * noise))
            value = float(instance.p.probs @ evaluate_operator(
                instance.mdp, instance.values, perturbed, result.policy, instance.beta).values)
            worst = max(worst, value - baseline)
    report.add('marginal_prior_optimal', worst, 1e-12)


def _check_policy_optimality(report, rng, instances, section):
    worst = -math.inf
    for instance in instances:
        prior = rng.dirichlet(np.ones(instance.mdp.n_actions))
        advantage = advantage_matrix(instance.mdp, instance.values)
        closed = tilted_policy(advantage, prior, instance.beta)
        for state in range(instance.mdp.n_states):
            _, grid_best = best_policy_row(advantage[state], prior, instance.beta, section['oracle_resolution_3'])
            closed_value = row_objective(closed[state], advantage[state], prior, instance.beta)
            worst = max(worst, grid_best - closed_value)
    report.add('tilted_policy_optimal', worst, 1e-12)


def _check_conditioning(report, rng, instances):
    worst = -math.inf
    for instance in instances:
        n_states, n_actions = instance.mdp.n_states, instance.mdp.n_actions
        policy_a = rng.dirichlet(np.ones(n_actions), size=n_states)
        policy_b = rng.dirichlet(np.ones(n_actions), size=n_states)
        conditional = expected_conditional_kl(policy_a, policy_b, instance.p)
        marginal = kl_divergence(marginalize_policy(policy_a, instance.p), marginalize_policy(policy_b, instance.p))
        worst = max(worst, marginal - conditional)
    report.add('conditioning_increases_kl', worst, 1e-12)


def _check_frozen_prior(report, instances):
    worst = 0.0
    for instance in instances[:10]:
        cfg = BellmanConfig(beta=instance.beta)
        prior = uniform_prior(instance.mdp.n_actions)
        soft = value_iteration(instance.mdp, instance.p, cfg, BackupMode.SOFT, prior=prior)
        frozen = value_iteration(instance.mdp, instance.p, cfg, BackupMode.MUTUAL_INFORMATION, freeze_prior=prior)
        worst = max(worst, float(np.max(np.abs(soft.values.values - frozen.values.values))))
    report.add('frozen_prior_matches_soft', worst, 0.0)


def _check_permutation(report, rng, instances):
    worst = 0.0
    for instance in instances:
        n_states, n_actions = instance.mdp.n_states, instance.mdp.n_actions
        states = rng.permutation(n_states)
        actions = rng.permutation(n_actions)
        prior = rng.dirichlet(np.ones(n_actions))
        permuted = permute_mdp(instance.mdp, states, actions)
        original = concise_bellman(instance.mdp, instance.values, prior, instance.beta).values
        relabeled = concise_bellman(permuted, instance.values.values[states], prior[actions], instance.beta).values
        worst = max(worst, float(np.max(np.abs(original[states] - relabeled))))
    report.add('permutation_equivariance', worst, 1e-12)


def run_audit(section, seed=None):
    """Run every oracle check on seeded random instances and return the report"""
    fault = section['fault_injection']
    if fault not in FAULTS:
        raise ContractError(f"unknown fault injection '{fault}', expected one of {FAULTS}")
    if section['n_states'] > 3 or section['n_actions'] > 3:
        raise ContractError("audit instances are limited to |S|, |A| <= 3")
    seed = section['seed'] if seed is None else seed
    rng = np.random.default_rng(seed)
    if fault != 'none':
        logger.warning("fault injection '%s' is active, the audit is expected to fail", fault)

    instances = [
        random_instance(rng, section['n_states'], section['n_actions'], section['beta_range'], section['discount'])
        for _ in range(int(section['instances']))
    ]
    report = AuditReport(instances=len(instances), seed=seed, fault_injection=fault)
    _check_oracle_and_bounds(report, instances, section, fault)
    _check_concise_identity(report, rng, section, fault)
    _check_prior_optimality(report, rng, instances, section)
    _check_policy_optimality(report, rng, instances, section)
    _check_conditioning(report, rng, instances)
    _check_frozen_prior(report, instances)
    _check_permutation(report, rng, instances)
    return report
