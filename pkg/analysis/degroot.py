# analysis/degroot.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# The DeGroot model of opinion formation. Each agent repeatedly replaces its
# opinion with a weighted average of the opinions it listens to:
#
#     x(t+1) = M x(t),    M row-stochastic,   x(t) an n-by-d matrix
#
# This module:
#   - simulates trajectories until the opinion range collapses (consensus)
#   - predicts the consensus without simulating: a = c^T x(0), where c is
#     the left Perron vector of M (requires strongly connected + aperiodic)
#   - reports influence weights c, tests whether a group of agents is
#     "prominent", and tracks how the largest influence behaves as the
#     society grows (the wisdom-of-crowds question)
#   - runs seeded wisdom-of-crowds experiments with noisy initial opinions
#
# Opinions are finite-dimensional real vectors; d = 1 for scalar opinions.
# ============================================================================

from dataclasses import dataclass, field
from typing import Callable, Optional

import networkx as nx
import numpy as np

from analysis.centrality import CentralityResult, eigenvector_centrality
from config import settings
from core.errors import InvalidInputError, PreconditionError
from core.matrix_core import (
    SquareMatrix,
    as_matrix,
    is_irreducible,
    perron_pair,
    period,
)
from tools.experiments import parallel_map, replicate_rng


# ============================================================================
# DOMAIN TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """A nonnegative matrix whose rows each sum to 1."""

    base: SquareMatrix

    def __post_init__(self):
        base = as_matrix(self.base)
        if not base.is_nonnegative():
            raise InvalidInputError("a stochastic matrix cannot have negative entries")
        row_sums = base.entries.sum(axis=1)
        worst = float(np.max(np.abs(row_sums - 1.0)))
        if worst > settings.STOCHASTIC_TOL:
            raise InvalidInputError(
                f"rows must sum to 1 (largest deviation {worst:.3g})"
            )
        object.__setattr__(self, "base", base)

    @classmethod
    def from_weights(cls, weights, labels=None) -> "StochasticMatrix":
        """Row-normalize a nonnegative weight matrix; every row needs some weight."""
        w = np.asarray(as_matrix(weights).entries, dtype=float)
        if np.any(w < 0):
            raise InvalidInputError("listening weights must be nonnegative")
        sums = w.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise InvalidInputError("every agent must listen to someone (zero row)")
        return cls(SquareMatrix(w / sums, labels))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def entries(self) -> np.ndarray:
        return self.base.entries


@dataclass(frozen=True, eq=False)
class OpinionTrajectory:
    """Stored states x(t) at the recorded times, and whether consensus was reached."""

    states: list
    times: list
    converged: bool
    consensus: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def steps(self) -> int:
        return self.times[-1]


@dataclass(frozen=True, eq=False)
class MatrixSequence:
    """Stochastic matrices of growing size, modelling ever larger societies."""

    matrices: list
    description: str = ""

    def __post_init__(self):
        for m in self.matrices:
            if not is_irreducible(m.base):
                raise InvalidInputError(f"sequence member of size {m.n} is not irreducible")

    @property
    def sizes(self) -> list:
        return [m.n for m in self.matrices]


@dataclass(frozen=True)
class CrowdWisdomResult:
    consensus_sd: float
    theoretical_sd: float
    replicates: int


def _stochastic(m) -> StochasticMatrix:
    return m if isinstance(m, StochasticMatrix) else StochasticMatrix(as_matrix(m))


def _opinions(x0, n: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[0] != n:
        raise InvalidInputError(f"initial opinions must have {n} rows, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("initial opinions must be finite")
    return x


# ============================================================================
# SIMULATION
# ============================================================================

def opinion_spread(x: np.ndarray) -> float:
    """max_i ||x_i - mean||_inf across agents."""
    return float(np.max(np.abs(x - x.mean(axis=0)), initial=0.0))


def simulate(m, x0, t_max: int = None, tol: float = None, stride: int = None) -> OpinionTrajectory:
    """
    Iterate x(t+1) = M x(t) until every agent is within tol of the average
    opinion, or t_max steps have been taken.

    Non-convergence is not an error: periodic listening structures
    legitimately oscillate, and the result just says converged=False.

    Args:
        m:      Row-stochastic matrix.
        x0:     n-vector or n-by-d matrix of initial opinions.
        t_max:  Iteration cap (default settings.DEGROOT_T_MAX).
        tol:    Consensus tolerance (default settings.DEGROOT_TOL).
        stride: Keep every stride-th state; first and last are always kept.
    """
    m = _stochastic(m)
    t_max = settings.DEGROOT_T_MAX if t_max is None else int(t_max)
    tol = settings.DEGROOT_TOL if tol is None else float(tol)
    stride = settings.TRAJECTORY_STRIDE if stride is None else int(stride)
    if t_max < 0:
        raise InvalidInputError("t_max must be nonnegative")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if stride < 1:
        raise InvalidInputError("stride must be at least 1")

    a = m.entries
    x = _opinions(x0, m.n)
    states, times = [x.copy()], [0]
    t = 0
    converged = opinion_spread(x) <= tol
    while not converged and t < t_max:
        x = a @ x
        t += 1
        converged = opinion_spread(x) <= tol
        if t % stride == 0 or converged or t == t_max:
            states.append(x.copy())
            times.append(t)

    consensus = x.mean(axis=0) if converged else None
    return OpinionTrajectory(states, times, converged, consensus)


def opinion_range(trajectory: OpinionTrajectory) -> list:
    """max - min of the opinions at every stored time (over agents and dimensions)."""
    return [float(x.max() - x.min()) for x in trajectory.states]


def trajectory_rows(trajectory: OpinionTrajectory) -> list:
    """Long-format rows (t, node, dim, value) for CSV export; node is 1-based."""
    rows = []
    for t, x in zip(trajectory.times, trajectory.states):
        for i in range(x.shape[0]):
            for k in range(x.shape[1]):
                rows.append((t, i + 1, k, float(x[i, k])))
    return rows


# ============================================================================
# CONSENSUS AND INFLUENCE
# ============================================================================

def _require_primitive(m: StochasticMatrix, operation: str):
    if m.n == 1:
        return
    if not is_irreducible(m.base):
        raise PreconditionError(
            f"{operation}: the listening digraph is not strongly connected, so "
            "opinions need not reach a single consensus"
        )
    d = period(m.base)
    if d > 1:
        raise PreconditionError(
            f"{operation}: the listening digraph is periodic (period {d}), so opinions can "
            "oscillate forever instead of converging"
        )


def consensus_value(m, x0) -> np.ndarray:
    """
    The limit opinion a = c^T x(0), computed from the Perron vector alone.

    Raises:
        PreconditionError: the digraph is reducible or periodic; the message
            names which.
    """
    m = _stochastic(m)
    _require_primitive(m, "consensus_value")
    x = _opinions(x0, m.n)
    if m.n == 1:
        return x[0].copy()
    return perron_pair(m.base).left @ x


def influence_weights(m) -> CentralityResult:
    """Each agent's weight in the long-run consensus (eigenvector centrality, sum 1)."""
    return eigenvector_centrality(_stochastic(m).base)


def limit_matrix(m) -> np.ndarray:
    """lim M^t = 1 c^T for a primitive stochastic matrix."""
    m = _stochastic(m)
    _require_primitive(m, "limit_matrix")
    if m.n == 1:
        return np.ones((1, 1))
    c = perron_pair(m.base).left
    return np.outer(np.ones(m.n), c)


def distance_to_limit(m, t: int) -> float:
    """||M^t - 1 c^T||_inf (max absolute entry)."""
    m = _stochastic(m)
    power = np.linalg.matrix_power(m.entries, int(t))
    return float(np.max(np.abs(power - limit_matrix(m))))


# ============================================================================
# PROMINENCE AND WISDOM
# ============================================================================

def prominence_check(m, p, epsilon: float, t_max: int, convention: str = "listening") -> Optional[int]:
    """
    Smallest t <= t_max at which the group p is prominent, or None.

    With convention="listening" the group is prominent at t when every
    outsider j puts weight at least epsilon on the group after t rounds:
    sum_{i in p} (M^t)_{ji} >= epsilon. convention="as_printed" uses the
    transposed index order sum_{i in p} (M^t)_{ij}.

    Prominence is a property of an infinite sequence; on one finite matrix
    it can only be checked up to t_max, and epsilon is the caller's choice.
    """
    m = _stochastic(m)
    members = sorted({int(i) for i in p})
    if not members or len(members) >= m.n:
        raise InvalidInputError("p must be a nonempty proper subset of the agents")
    if any(i < 0 or i >= m.n for i in members):
        raise InvalidInputError(f"p contains an index outside 0..{m.n - 1}")
    if not 0.0 < float(epsilon) <= 1.0:
        raise InvalidInputError("epsilon must lie in (0, 1]")
    if int(t_max) < 1:
        raise InvalidInputError("t_max must be at least 1")
    if convention not in ("listening", "as_printed"):
        raise InvalidInputError(f"unknown prominence convention {convention!r}")

    outsiders = [j for j in range(m.n) if j not in members]
    a = m.entries
    power = np.eye(m.n)
    for t in range(1, int(t_max) + 1):
        power = power @ a
        if convention == "listening":
            weight_on_group = power[np.ix_(outsiders, members)].sum(axis=1)
        else:
            weight_on_group = power[np.ix_(members, outsiders)].sum(axis=0)
        if np.all(weight_on_group >= epsilon):
            return t
    return None


def wisdom_trend(seq: MatrixSequence) -> list:
    """(n, largest influence weight) along the sequence; wise sequences drive it to 0."""
    return [(m.n, float(influence_weights(m).scores.max())) for m in seq.matrices]


def uniform_sequence(sizes) -> MatrixSequence:
    """Everybody listens to everybody equally."""
    matrices = [StochasticMatrix(SquareMatrix(np.full((n, n), 1.0 / n))) for n in sizes]
    return MatrixSequence(matrices, "uniform listening")


def celebrity_sequence(sizes, weight: float = 0.5) -> MatrixSequence:
    """
    Every agent puts `weight` on agent 0 and spreads the rest uniformly.

    The influence of agent 0 is weight + (1 - weight)/n, bounded away from 0.
    """
    if not 0.0 < weight < 1.0:
        raise InvalidInputError("celebrity weight must lie in (0, 1)")
    matrices = []
    for n in sizes:
        w = np.full((n, n), (1.0 - weight) / n)
        w[:, 0] += weight
        matrices.append(StochasticMatrix(SquareMatrix(w)))
    return MatrixSequence(matrices, f"celebrity followed with weight {weight}")


def erdos_renyi_sequence(sizes, p_factor: float = 3.0, seed: int = 0, max_attempts: int = 100) -> MatrixSequence:
    """
    Undirected G(n, p) graphs with p = p_factor * log(n) / n, self-loops
    added, rows normalized. Disconnected draws are redrawn.
    """
    matrices = []
    for n in sizes:
        p = min(1.0, p_factor * np.log(n) / n)
        for attempt in range(max_attempts):
            rng = replicate_rng(seed, n * max_attempts + attempt)
            graph = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31 - 1)))
            if nx.is_connected(graph):
                break
        else:
            raise PreconditionError(f"no connected G({n}, {p:.3g}) draw in {max_attempts} attempts")
        w = nx.to_numpy_array(graph, nodelist=range(n)) + np.eye(n)
        matrices.append(StochasticMatrix.from_weights(w))
    return MatrixSequence(matrices, f"Erdos-Renyi p={p_factor}*log(n)/n, seed {seed}")


# ============================================================================
# WISDOM-OF-CROWDS EXPERIMENT
# ============================================================================

def _normal_draw(rng: np.random.Generator, n: int, mu: float, sd: float) -> np.ndarray:
    return rng.normal(mu, sd, size=n)


def crowd_wisdom_experiment(m, mu: float, noise_sd: float, replicates: int, seed: int,
                            threads: int = None, draw: Callable = None) -> CrowdWisdomResult:
    """
    Draw independent noisy initial opinions around mu, record the consensus
    c^T x(0) each time, and compare its spread with the exact value
    noise_sd * ||c||_2.

    Replicate r always uses the generator derived from (seed, r), so the
    answer does not depend on `threads`. `draw(rng, n, mu, sd)` replaces
    the normal distribution when given.
    """
    m = _stochastic(m)
    if int(replicates) < 1:
        raise InvalidInputError("replicates must be at least 1")
    if float(noise_sd) <= 0.0:
        raise InvalidInputError("noise_sd must be positive")
    _require_primitive(m, "crowd_wisdom_experiment")

    c = perron_pair(m.base).left if m.n > 1 else np.ones(1)
    draw = draw or _normal_draw

    def one(r: int) -> float:
        x0 = draw(replicate_rng(seed, r), m.n, float(mu), float(noise_sd))
        return float(c @ x0)

    outcomes = np.array(parallel_map(one, range(int(replicates)), threads))
    spread = float(outcomes.std(ddof=1)) if outcomes.size > 1 else 0.0
    return CrowdWisdomResult(spread, float(noise_sd) * float(np.linalg.norm(c)), int(replicates))
