# tests/test_public_goods.py
#
# Tests for public-goods Pareto analysis: utility families, the benefits
# matrix, classification, improvement checks and essential agents.

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.errors import InvalidInputError, ModelViolationError, PreconditionError
from core.matrix_core import SquareMatrix, spectral_radius
from economics.public_goods import (
    UtilityModel,
    benefits_matrix,
    classify_benefits,
    component_spectral_radius,
    essential_agents,
    find_efficient_point,
    jacobian,
    linear_benefit_family,
    log_benefit_family,
    pareto_classify,
    planner_stationarity,
    utility_model_from_dict,
    verify_improvement,
)


def _costless_model(n: int = 2) -> UtilityModel:
    """u_i(x) = x_i: raising your own action helps you."""
    def gradient(i, x):
        grad = np.zeros(n)
        grad[i] = 1.0
        return grad

    return UtilityModel(n, lambda i, x: float(x[i]), gradient)


# ============================================================================
# UTILITY FAMILIES
# ============================================================================

class TestFamilies:

    def test_linear_status_quo_is_g(self, four_agent):
        u = linear_benefit_family(four_agent)
        assert np.array_equal(benefits_matrix(u, np.zeros(4)).b.entries, four_agent.entries)

    def test_log_status_quo_is_g(self, four_agent):
        u = log_benefit_family(four_agent)
        assert benefits_matrix(u, np.zeros(4)).b.entries == pytest.approx(four_agent.entries)

    def test_linear_at_ones_divides_rows(self):
        g = np.array([[0.0, 1.0, 2.0], [3.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
        c = np.array([1.0, 2.0, 4.0])
        b = benefits_matrix(linear_benefit_family(g, c), np.ones(3)).b.entries
        assert b == pytest.approx(g / (1.0 + c)[:, None])

    def test_log_at_ones(self, four_agent):
        b = benefits_matrix(log_benefit_family(four_agent), np.ones(4)).b.entries
        assert b == pytest.approx(four_agent.entries / 4.0)

    def test_gradients_match_finite_differences(self, four_agent):
        for family in (linear_benefit_family, log_benefit_family):
            assert family(four_agent).check_gradient(np.full(4, 0.3)).ok

    def test_jacobian_at_status_quo(self, four_agent):
        d = jacobian(linear_benefit_family(four_agent), np.zeros(4))
        assert d == pytest.approx(four_agent.entries - np.eye(4))

    def test_wrong_gradient_detected(self):
        u = UtilityModel(2, lambda i, x: float(x[i] ** 2), lambda i, x: np.zeros(2))
        assert not u.check_gradient(np.ones(2)).ok

    def test_negative_weights_rejected(self):
        with pytest.raises(InvalidInputError):
            linear_benefit_family([[0.0, -1.0], [1.0, 0.0]])

    def test_nonpositive_shift_rejected(self):
        with pytest.raises(InvalidInputError):
            linear_benefit_family([[0.0, 1.0], [1.0, 0.0]], [1.0, 0.0])

    def test_from_dict(self, data_dir, four_agent):
        u = utility_model_from_dict(json.loads((data_dir / "fig2.json").read_text()))
        assert u.family == "linear"
        assert np.array_equal(benefits_matrix(u, np.zeros(4)).b.entries, four_agent.entries)

    def test_from_dict_unknown_family(self):
        with pytest.raises(InvalidInputError, match="family"):
            utility_model_from_dict({"family": "cubic", "g": [[0.0]]})


# ============================================================================
# BENEFITS MATRIX
# ============================================================================

class TestBenefitsMatrix:

    def test_zero_diagonal(self, rng):
        g = rng.uniform(size=(5, 5))
        np.fill_diagonal(g, 0.0)
        b = benefits_matrix(log_benefit_family(g, rng.uniform(0.5, 2.0, size=5)), rng.uniform(size=5)).b
        assert not np.diag(b.entries).any()

    def test_rescaling_payoffs_leaves_b_unchanged(self, four_agent):
        u = linear_benefit_family(four_agent)
        x = np.array([0.2, 0.4, 0.1, 0.3])
        scaled = u.rescaled([2.0, 0.5, 3.0, 7.0])
        assert benefits_matrix(scaled, x).b.entries == pytest.approx(benefits_matrix(u, x).b.entries)

    def test_costless_action_is_a_model_violation(self):
        with pytest.raises(ModelViolationError, match="not costly"):
            benefits_matrix(_costless_model(), np.zeros(2))

    def test_negative_action_rejected(self, four_agent):
        with pytest.raises(InvalidInputError):
            benefits_matrix(linear_benefit_family(four_agent), [-1.0, 0.0, 0.0, 0.0])


# ============================================================================
# CLASSIFICATION
# ============================================================================

class TestClassify:

    def test_four_agent_status_quo_is_improvable_up(self, four_agent):
        verdict = pareto_classify(linear_benefit_family(four_agent), np.zeros(4))
        assert verdict.classification == "improvable_up"
        assert verdict.rho >= 1.75 ** (1 / 3)
        assert np.all(verdict.direction > 0)

    def test_half_two_cycle_is_improvable_down(self, two_cycle):
        verdict = classify_benefits(two_cycle.scaled(0.5))
        assert verdict.classification == "improvable_down"
        assert verdict.rho == pytest.approx(0.5)
        assert np.all(verdict.direction < 0)

    def test_unit_radius_is_efficient(self):
        verdict = classify_benefits(SquareMatrix([[0.0, 2.0], [0.5, 0.0]]))
        assert verdict.classification == "efficient"
        assert verdict.weights == pytest.approx([1 / 3, 2 / 3])

    def test_reducible_is_a_precondition_error(self):
        with pytest.raises(PreconditionError, match="reducible"):
            classify_benefits(SquareMatrix([[0.0, 1.0], [0.0, 0.0]]))

    def test_direction_is_a_pareto_improvement(self, four_agent):
        u = linear_benefit_family(four_agent)
        verdict = pareto_classify(u, np.zeros(4))
        check = verify_improvement(u, np.zeros(4), verdict.direction)
        assert check.is_improvement
        assert check.normalized_gains == pytest.approx((verdict.rho - 1.0) * verdict.direction)
        assert np.all(check.actual_gains > 0)

    def test_down_direction_is_an_improvement(self):
        g = np.array([[0.0, 0.5], [0.5, 0.0]])
        u = linear_benefit_family(g)
        x = np.array([1.0, 1.0])
        verdict = pareto_classify(u, x)
        assert verdict.classification == "improvable_down"
        assert verify_improvement(u, x, verdict.direction).is_improvement

    def test_bad_eta(self, four_agent):
        with pytest.raises(InvalidInputError):
            verify_improvement(linear_benefit_family(four_agent), np.zeros(4), np.ones(4), eta=0.0)


class TestEfficientPoint:

    def test_uniform_ray_hits_rho_minus_one(self, four_agent):
        u = linear_benefit_family(four_agent)
        point = find_efficient_point(u, np.ones(4))
        assert point.s == pytest.approx(spectral_radius(four_agent) - 1.0, rel=1e-9)
        assert point.verdict.classification == "efficient"

    def test_planner_weights_are_stationary(self, four_agent):
        u = linear_benefit_family(four_agent)
        point = find_efficient_point(u, np.ones(4))
        theta = point.verdict.weights
        assert np.all(theta > 0)
        assert planner_stationarity(u, point.x, theta) <= 1e-8

    def test_no_room_at_status_quo(self):
        u = linear_benefit_family([[0.0, 0.5], [0.5, 0.0]])
        with pytest.raises(PreconditionError, match="status quo"):
            find_efficient_point(u, np.ones(2))

    def test_direction_must_be_nonnegative(self, four_agent):
        with pytest.raises(InvalidInputError):
            find_efficient_point(linear_benefit_family(four_agent), [1.0, -1.0, 1.0, 1.0])


# ============================================================================
# ESSENTIAL AGENTS
# ============================================================================

class TestComponentSpectralRadius:

    def test_irreducible_matches_eigensolver(self, four_agent):
        assert component_spectral_radius(four_agent) == pytest.approx(spectral_radius(four_agent))

    def test_acyclic_is_exactly_zero(self):
        m = SquareMatrix([[0.0, 5.0, 0.0], [0.0, 0.0, 6.0], [0.0, 0.0, 0.0]])
        assert component_spectral_radius(m) == 0.0

    def test_takes_largest_component(self):
        m = SquareMatrix([[0.0, 2.0, 1.0, 0.0], [2.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.5], [0.0, 0.0, 0.5, 0.0]])
        assert component_spectral_radius(m) == pytest.approx(2.0)


class TestEssentialAgents:

    def test_four_agent_hub_is_essential(self, four_agent):
        report = essential_agents(linear_benefit_family(four_agent))
        assert report.cooperation_possible
        assert report.essential == [3]
        assert report.agents[3].rho_without == 0.0

    @pytest.mark.parametrize("removed, surviving_cycle", [(0, 1.5), (1, 1.75), (2, 1.25)])
    def test_removing_a_non_hub_leaves_a_cycle(self, four_agent, removed, surviving_cycle):
        report = essential_agents(linear_benefit_family(four_agent))
        assert report.agents[removed].rho_without >= surviving_cycle ** (1 / 3)
        assert report.agents[removed].rho_without > 1.0
        assert not report.agents[removed].essential

    def test_removing_the_hub_leaves_no_cycles(self, four_agent):
        b = four_agent.entries.copy()
        b[3, :] = 0.0
        b[:, 3] = 0.0
        assert not np.linalg.matrix_power(b, 4).any()

    def test_symmetric_pair_both_essential(self):
        report = essential_agents(linear_benefit_family([[0.0, 2.0], [2.0, 0.0]]))
        assert report.essential == [0, 1]

    def test_no_cooperation_to_lose(self):
        report = essential_agents(linear_benefit_family([[0.0, 0.5], [0.5, 0.0]]))
        assert not report.cooperation_possible
        assert report.essential == []
        assert report.note

    def test_independent_of_thread_count(self, four_agent):
        u = linear_benefit_family(four_agent)
        one = [a.rho_without for a in essential_agents(u, threads=1).agents]
        four = [a.rho_without for a in essential_agents(u, threads=4).agents]
        assert one == four
