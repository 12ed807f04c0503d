# tests/test_matrix_core.py
#
# Tests for the matrix foundation: structure tests (irreducible, period,
# primitive), spectral radius, Perron pairs, the trace sequence and the
# resolvent solve.

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.errors import DivergenceError, InvalidInputError, PreconditionError
from core.matrix_core import (
    SquareMatrix,
    cycle_lower_bounds,
    gelfand_estimate,
    gelfand_trace_sequence,
    is_aperiodic,
    is_irreducible,
    is_primitive,
    neumann_partial_sum,
    perron_pair,
    period,
    power_iteration,
    resolvent_solve,
    spectral_radius,
    strongly_connected_components,
)
from tools.fixtures import block_pattern


# ============================================================================
# SQUARE MATRIX
# ============================================================================

class TestSquareMatrix:

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            SquareMatrix(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            SquareMatrix([[0.0, np.nan], [1.0, 0.0]])

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            SquareMatrix(np.eye(2), labels=["a"])

    def test_entries_are_read_only(self):
        m = SquareMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0

    def test_digraph_has_positive_entries_only(self):
        m = SquareMatrix([[0.0, 2.0], [-1.0, 1e-15]])
        assert set(m.digraph().edges()) == {(0, 1)}

    def test_node_names_default_to_one_based(self):
        assert SquareMatrix(np.eye(3)).node_names == ("1", "2", "3")

    def test_zero_node_clears_row_and_column(self, four_agent):
        cleared = four_agent.zero_node(3)
        assert not cleared.entries[3].any()
        assert not cleared.entries[:, 3].any()
        assert cleared.n == 4


# ============================================================================
# STRUCTURE
# ============================================================================

class TestIrreducible:

    def test_two_cycle(self, two_cycle):
        assert is_irreducible(two_cycle)

    def test_upper_triangular_is_reducible(self):
        assert not is_irreducible(SquareMatrix([[1.0, 1.0], [0.0, 1.0]]))

    def test_four_agent_benefits(self, four_agent):
        assert is_irreducible(four_agent)

    def test_single_node(self):
        assert is_irreducible(SquareMatrix([[0.0]]))

    def test_negative_entry_is_invalid(self):
        with pytest.raises(InvalidInputError):
            is_irreducible(SquareMatrix([[0.0, -1.0], [1.0, 0.0]]))

    def test_components_reported(self):
        m = SquareMatrix([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        assert strongly_connected_components(m) == [[0, 1], [2]]


class TestPeriod:

    def test_two_cycle_is_periodic(self, two_cycle):
        assert period(two_cycle) == 2
        assert not is_aperiodic(two_cycle)

    def test_self_loop_makes_aperiodic(self):
        assert is_aperiodic(SquareMatrix([[1.0, 1.0], [1.0, 0.0]]))

    def test_three_cycle_with_self_loop(self):
        m = np.roll(np.eye(3), 1, axis=1)
        assert period(SquareMatrix(m)) == 3
        m[0, 0] = 1.0
        assert is_aperiodic(SquareMatrix(m))

    def test_reducible_input_is_a_precondition_error(self):
        with pytest.raises(PreconditionError):
            is_aperiodic(SquareMatrix([[1.0, 1.0], [0.0, 1.0]]))

    def test_primitive_methods_agree(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            m = SquareMatrix((rng.uniform(size=(n, n)) < 0.35).astype(float))
            if not is_irreducible(m):
                continue
            assert is_primitive(m, "structure") == is_primitive(m, "power")


# ============================================================================
# SPECTRAL RADIUS AND PERRON PAIRS
# ============================================================================

class TestSpectralRadius:

    def test_two_cycle(self, two_cycle):
        assert spectral_radius(two_cycle) == pytest.approx(1.0, abs=1e-12)

    def test_scaled_two_cycle(self):
        assert spectral_radius(SquareMatrix([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx(2.0, abs=1e-12)

    def test_block_market_top_eigenvalue(self):
        """C kron J_100 has eigenvalues 100 * eig(C): -185.12, -114.81, -0.07, zeros."""
        m = SquareMatrix(np.kron(block_pattern(), np.ones((100, 100))))
        rho = spectral_radius(m)
        assert rho == pytest.approx(185.116, abs=0.01)
        assert 180.0 <= rho <= 225.0

    def test_transpose_symmetry(self, rng):
        for n in (3, 8, 20):
            a = rng.uniform(size=(n, n))
            m = SquareMatrix(a)
            assert spectral_radius(m) == pytest.approx(spectral_radius(m.transpose()), abs=1e-10)

    def test_power_iteration_matches(self, four_agent):
        rho, vec = power_iteration(four_agent)
        assert rho == pytest.approx(spectral_radius(four_agent), rel=1e-9)
        assert vec.sum() == pytest.approx(1.0)


class TestPerronPair:

    def test_doubly_stochastic_is_uniform(self):
        m = SquareMatrix([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        pair = perron_pair(m)
        assert pair.rho == pytest.approx(1.0)
        assert pair.left == pytest.approx(np.full(3, 1 / 3))
        assert pair.right == pytest.approx(np.full(3, 1 / 3))

    def test_two_state_chain(self, two_state_chain):
        pair = perron_pair(two_state_chain)
        assert pair.rho == pytest.approx(1.0)
        assert pair.left == pytest.approx([3 / 7, 4 / 7])

    def test_periodic_two_cycle(self, two_cycle):
        pair = perron_pair(two_cycle)
        assert pair.rho == pytest.approx(1.0)
        assert pair.left == pytest.approx([0.5, 0.5])
        assert pair.right == pytest.approx([0.5, 0.5])

    @staticmethod
    def _dense_perron_vector(a: np.ndarray) -> np.ndarray:
        values, vectors = np.linalg.eig(a)
        return np.abs(np.real(vectors[:, np.argmax(np.real(values))]))

    @staticmethod
    def _cosine(u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))

    def test_residuals_on_random_irreducible(self, rng):
        # the n-cycle keeps every draw strongly connected
        for _ in range(200):
            n = int(rng.integers(2, 51))
            a = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.4)
            a += np.roll(np.eye(n), 1, axis=1)
            m = SquareMatrix(a)
            pair = perron_pair(m)
            assert pair.residual(m) <= 1e-10 * max(1.0, pair.rho)
            assert np.all(pair.left > 0) and np.all(pair.right > 0)
            assert self._cosine(pair.right, self._dense_perron_vector(a)) >= 1 - 1e-10
            assert self._cosine(pair.left, self._dense_perron_vector(a.T)) >= 1 - 1e-10

    def test_reducible_input_raises(self):
        with pytest.raises(PreconditionError):
            perron_pair(SquareMatrix([[1.0, 1.0], [0.0, 1.0]]))


# ============================================================================
# TRACE SEQUENCE
# ============================================================================

class TestGelfandTrace:

    def test_identity(self):
        seq = gelfand_trace_sequence(SquareMatrix(np.eye(3)), 6)
        for t, value in seq:
            assert value == pytest.approx(3 ** (1 / t))

    def test_two_cycle_alternates(self, two_cycle):
        seq = dict(gelfand_trace_sequence(two_cycle, 8))
        assert seq[1] is None and seq[3] is None
        assert seq[4] == pytest.approx(2 ** (1 / 4))

    def test_four_agent_estimate_near_rho(self, four_agent):
        estimate = gelfand_estimate(gelfand_trace_sequence(four_agent, 30))
        rho = spectral_radius(four_agent)
        assert abs(estimate - rho) <= 0.1 * rho

    def test_primitive_convergence_at_64(self, rng, primitive_stochastic):
        w = 3.0 * primitive_stochastic(rng, 8)
        seq = gelfand_trace_sequence(SquareMatrix(w), 64)
        assert seq[-1][1] == pytest.approx(3.0, rel=0.05)

    def test_large_radius_does_not_overflow(self):
        m = SquareMatrix(np.full((3, 3), 1e100))
        value = gelfand_trace_sequence(m, 50)[-1][1]
        assert math.isfinite(value)

    def test_rejects_zero_t_max(self, two_cycle):
        with pytest.raises(InvalidInputError):
            gelfand_trace_sequence(two_cycle, 0)


class TestCycleLowerBounds:

    def test_four_agent_three_cycles(self, four_agent):
        cycles = {frozenset(c): product for c, product, _ in cycle_lower_bounds(four_agent, 3)}
        assert cycles[frozenset({0, 1, 3})] == pytest.approx(1.25)
        assert cycles[frozenset({2, 0, 3})] == pytest.approx(1.75)
        assert cycles[frozenset({2, 1, 3})] == pytest.approx(1.5)

    def test_bounds_never_exceed_rho(self, four_agent):
        rho = spectral_radius(four_agent)
        for _, _, bound in cycle_lower_bounds(four_agent, 4):
            assert bound <= rho + 1e-12


# ============================================================================
# RESOLVENT
# ============================================================================

class TestResolventSolve:

    def test_zero_delta_returns_z(self, four_agent):
        z = np.array([1.0, 2.0, 3.0, 4.0])
        assert resolvent_solve(four_agent, z, 0.0) == pytest.approx(z)

    def test_two_cycle_half(self, two_cycle):
        assert resolvent_solve(two_cycle, np.ones(2), 0.5) == pytest.approx([2.0, 2.0])

    def test_seven_node_graph(self, seven_node):
        k = resolvent_solve(seven_node, np.ones(7), 1 / 3)
        expected = [33 / 8, 33 / 8, 21 / 4, 9 / 2, 21 / 4, 33 / 8, 33 / 8]
        assert k == pytest.approx(expected, abs=1e-12)

    def test_diverges_at_one_over_rho(self, two_cycle):
        with pytest.raises(DivergenceError):
            resolvent_solve(two_cycle, np.ones(2), 1.0)

    def test_left_and_right_sides(self):
        m = SquareMatrix([[0.0, 0.5], [0.1, 0.0]])
        z = np.array([1.0, 0.0])
        left = resolvent_solve(m, z, 1.0, "left")
        right = resolvent_solve(m, z, 1.0, "right")
        assert left == pytest.approx(left @ m.entries + z)
        assert right == pytest.approx(m.entries @ right + z)

    def test_agrees_with_neumann_sum(self, rng):
        a = rng.uniform(size=(6, 6))
        m = SquareMatrix(a)
        rho = spectral_radius(m)
        delta = 0.8 / rho
        z = rng.uniform(size=6)
        exact = resolvent_solve(m, z, delta)
        partial = neumann_partial_sum(m, z, delta, 200)
        assert np.max(np.abs(exact - partial)) <= 1e-9 * np.linalg.norm(exact)

    def test_bad_side(self, two_cycle):
        with pytest.raises(InvalidInputError):
            resolvent_solve(two_cycle, np.ones(2), 0.1, side="up")
