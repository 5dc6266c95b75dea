import decimal
import math
from decimal import Decimal

import numpy as np
import pytest

from src.calculations.information import (
    expected_conditional_kl, expected_kl, kl_divergence, marginalize_policy, mutual_information
)
from src.errors import ShapeError
from src.models.mdp import StateDistribution


class TestKlDivergence:

    def test_identical_distributions(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_zero_mass_terms_are_skipped(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))

    def test_support_violation_is_infinite(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            kl_divergence([0.5, 0.5], [1.0, 0.0, 0.0])


class TestMarginalAndMutualInformation:

    def test_marginal_weights_rows(self):
        policy = np.array([[1.0, 0.0], [0.0, 1.0]])
        marginal = marginalize_policy(policy, StateDistribution([0.25, 0.75]))
        np.testing.assert_allclose(marginal.probs, [0.25, 0.75])

    def test_state_independent_policy_has_zero_information(self):
        policy = np.tile([0.2, 0.5, 0.3], (4, 1))
        assert mutual_information(policy, StateDistribution(np.full(4, 0.25))) == pytest.approx(0.0, abs=1e-15)

    def test_deterministic_diagonal_policy(self):
        p = StateDistribution([0.5, 0.5])
        assert mutual_information(np.eye(2), p) == pytest.approx(math.log(2.0))

    def test_information_is_kl_to_the_marginal(self, rng):
        policy = rng.dirichlet(np.ones(3), size=4)
        p = StateDistribution(rng.dirichlet(np.ones(4)))
        marginal = marginalize_policy(policy, p)
        assert mutual_information(policy, p) == pytest.approx(expected_kl(policy, marginal, p))

    def test_conditioning_increases_divergence(self, rng):
        for _ in range(200):
            policy_a = rng.dirichlet(np.ones(3), size=3)
            policy_b = rng.dirichlet(np.ones(3), size=3)
            p = StateDistribution(rng.dirichlet(np.ones(3)))
            marginal_kl = kl_divergence(marginalize_policy(policy_a, p), marginalize_policy(policy_b, p))
            assert expected_conditional_kl(policy_a, policy_b, p) >= marginal_kl - 1e-12

    def test_any_other_prior_costs_more_than_the_marginal(self, rng):
        policy = rng.dirichlet(np.ones(3), size=5)
        p = StateDistribution(rng.dirichlet(np.ones(5)))
        information = mutual_information(policy, p)
        for _ in range(100):
            other = rng.dirichlet(np.ones(3))
            assert expected_kl(policy, other, p) >= information - 1e-12


class TestHandComputedValues:

    def test_two_state_marginal(self):
        marginal = marginalize_policy([[0.9, 0.1], [0.2, 0.8]], StateDistribution([0.5, 0.5]))
        np.testing.assert_allclose(marginal.probs, [0.55, 0.45], rtol=1e-15)

    def test_kl_against_high_precision_reference(self):
        with decimal.localcontext() as ctx:
            ctx.prec = 50
            p = [Decimal('0.55'), Decimal('0.45')]
            q = [Decimal('0.5'), Decimal('0.5')]
            reference = sum(pi * (pi / qi).ln() for pi, qi in zip(p, q))
        assert kl_divergence([0.55, 0.45], [0.5, 0.5]) == pytest.approx(float(reference), rel=1e-12)

    def test_information_against_a_double_loop(self, rng):
        policy = rng.dirichlet(np.ones(4), size=6)
        weights = rng.dirichlet(np.ones(6))
        marginal = [math.fsum(weights[s] * policy[s, a] for s in range(6)) for a in range(4)]
        reference = math.fsum(
            weights[s] * policy[s, a] * math.log(policy[s, a] / marginal[a])
            for s in range(6) for a in range(4)
        )
        assert mutual_information(policy, StateDistribution(weights)) == pytest.approx(reference, rel=1e-10)
