# core/matrix_core.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# This is the foundation every other module stands on: a dense square
# matrix type with a weighted-digraph view, plus the spectral questions we
# keep asking of such matrices:
#
#   - Is the digraph strongly connected (irreducible)? Aperiodic? Primitive?
#   - What is the spectral radius rho(M)?
#   - What are the positive left/right Perron vectors at rho(M)?
#   - How does trace(M^t)^(1/t) approach rho(M) (the trace formula)?
#   - Solve k = z + delta * k M  (or its right-hand twin) when delta*rho < 1.
#
# Everything here is a pure function of its inputs. Matrices are stored as
# read-only numpy arrays, so a SquareMatrix can be shared across threads.
# ============================================================================

# ── IMPORTS ────────────────────────────────────────────────────────────

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import networkx as nx
import numpy as np
import scipy.linalg

from config import settings
from core.errors import (
    DivergenceError,
    InvalidInputError,
    NumericFailureError,
    PreconditionError,
    SingularSystemError,
)


# ============================================================================
# DOMAIN TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class SquareMatrix:
    """
    A dense n-by-n real matrix with optional node labels.

    Row i, column j holds the weight of the edge (i, j). The digraph view
    has an edge (i, j) exactly when that weight is positive (above the
    structural tolerance).
    """

    entries: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"matrix must be square, got shape {arr.shape}")
        if arr.shape[0] == 0:
            raise InvalidInputError("matrix must have at least one node")
        if arr.shape[0] > settings.MAX_DIMENSION:
            raise InvalidInputError(
                f"n={arr.shape[0]} exceeds the dense limit of {settings.MAX_DIMENSION}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("matrix entries must all be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != arr.shape[0]:
                raise InvalidInputError(
                    f"{len(labels)} labels given for a {arr.shape[0]}-node matrix"
                )
            object.__setattr__(self, "labels", labels)

    # ── Basic views ───────────────────────────────────────────────

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def node_names(self) -> tuple:
        """Labels if present, otherwise 1-based node numbers as strings."""
        if self.labels is not None:
            return self.labels
        return tuple(str(i + 1) for i in range(self.n))

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.entries >= 0.0))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.T), initial=0.0) <= tol)

    def transpose(self) -> "SquareMatrix":
        return SquareMatrix(self.entries.T, self.labels)

    def scaled(self, factor: float) -> "SquareMatrix":
        return SquareMatrix(factor * self.entries, self.labels)

    def zero_node(self, i: int) -> "SquareMatrix":
        """Copy with row i and column i set to zero; indexing is unchanged."""
        arr = np.array(self.entries)
        arr[i, :] = 0.0
        arr[:, i] = 0.0
        return SquareMatrix(arr, self.labels)

    def digraph(self) -> nx.DiGraph:
        """Positive-entry digraph, edge attribute `weight` = the entry."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        rows, cols = np.nonzero(self.entries > settings.STRUCTURAL_TOL)
        graph.add_weighted_edges_from(
            (int(i), int(j), float(self.entries[i, j])) for i, j in zip(rows, cols)
        )
        return graph


@dataclass(frozen=True, eq=False)
class PerronPair:
    """Spectral radius with its left (c) and right (r) Perron vectors, each summing to 1."""

    rho: float
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    def residual(self, m: "SquareMatrix") -> float:
        """max(||c^T M - rho c^T||_inf, ||M r - rho r||_inf)."""
        a = m.entries
        left_res = np.max(np.abs(self.left @ a - self.rho * self.left))
        right_res = np.max(np.abs(a @ self.right - self.rho * self.right))
        return float(max(left_res, right_res))


# ============================================================================
# INPUT HELPERS
# ============================================================================

def as_matrix(m) -> SquareMatrix:
    """Accept a SquareMatrix or anything numpy can turn into a square array."""
    if isinstance(m, SquareMatrix):
        return m
    return SquareMatrix(np.asarray(m, dtype=float))


def _require_nonnegative(m: SquareMatrix, operation: str):
    if not m.is_nonnegative():
        raise InvalidInputError(f"{operation} needs a nonnegative matrix; found a negative entry")


def as_vector(v, n: int, name: str) -> np.ndarray:
    vec = np.asarray(v, dtype=float).reshape(-1)
    if vec.shape[0] != n:
        raise InvalidInputError(f"{name} has length {vec.shape[0]}, expected {n}")
    if not np.all(np.isfinite(vec)):
        raise InvalidInputError(f"{name} must be finite")
    return vec


# ============================================================================
# STRUCTURE: IRREDUCIBILITY, PERIOD, PRIMITIVITY
# ============================================================================

def strongly_connected_components(m) -> list:
    """Strongly connected components of the positive-entry digraph, sorted by smallest node."""
    m = as_matrix(m)
    _require_nonnegative(m, "strongly_connected_components")
    components = [sorted(c) for c in nx.strongly_connected_components(m.digraph())]
    return sorted(components, key=lambda c: c[0])


def is_irreducible(m) -> bool:
    """
    True iff the positive-entry digraph is strongly connected.

    A single node is irreducible by convention, whatever its self-weight.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "is_irreducible")
    if m.n == 1:
        return True
    return nx.is_strongly_connected(m.digraph())


def _require_irreducible(m: SquareMatrix, operation: str):
    if not is_irreducible(m):
        components = strongly_connected_components(m)
        raise PreconditionError(
            f"{operation} needs an irreducible matrix; the digraph splits into "
            f"{len(components)} strongly connected components {components}. "
            "Analyse each component separately."
        )


def period(m) -> int:
    """
    The gcd of all directed cycle lengths of an irreducible matrix.

    Breadth-first levels from node 0; every edge (u, v) contributes
    level[u] + 1 - level[v] to the gcd.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "period")
    _require_irreducible(m, "period")

    adjacency = m.entries > settings.STRUCTURAL_TOL
    level = [-1] * m.n
    level[0] = 0
    queue = deque([0])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.nonzero(adjacency[u])[0]:
            v = int(v)
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, abs(level[u] + 1 - level[v]))
    # A lone node with no self-loop has no cycles at all.
    return g if g > 0 else 0


def is_aperiodic(m) -> bool:
    """True iff the gcd of the directed cycle lengths is 1 (irreducible input required)."""
    return period(m) == 1


def is_primitive(m, method: str = "structure") -> bool:
    """
    Irreducible and aperiodic.

    method="structure" uses the two graph tests; method="power" checks
    whether some boolean power of the pattern is entrywise positive, up to
    Wielandt's exponent (n-1)^2 + 1.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "is_primitive")
    if method == "structure":
        return is_irreducible(m) and is_aperiodic(m)
    if method != "power":
        raise InvalidInputError(f"unknown primitivity method {method!r}")

    pattern = (m.entries > settings.STRUCTURAL_TOL).astype(float)
    power = pattern.copy()
    for _ in range((m.n - 1) ** 2 + 1):
        if np.all(power > 0):
            return True
        power = np.minimum(power @ pattern, 1.0)
    return bool(np.all(power > 0))


# ============================================================================
# SPECTRAL RADIUS AND PERRON VECTORS
# ============================================================================

def _eigvals(a: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.eigvals(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError(
            "dense eigensolver did not converge", {"n": a.shape[0], "reason": str(exc)}
        ) from exc


def power_iteration(m, tol: float = None, max_iter: int = None):
    """
    Perron root and right vector of a nonnegative irreducible matrix.

    Iterates on M + I, which is primitive whenever M is irreducible, so
    periodic inputs converge too. Stops when the Collatz-Wielandt bracket
    min (Ax)_i/x_i <= rho(A) <= max (Ax)_i/x_i is narrower than tol.

    Returns:
        (rho, right_vector) with the vector summing to 1.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "power_iteration")
    _require_irreducible(m, "power_iteration")
    tol = settings.POWER_ITERATION_TOL if tol is None else tol
    max_iter = settings.POWER_ITERATION_MAX_ITER if max_iter is None else max_iter

    lower, upper, x = _collatz_wielandt(m.entries, tol, max_iter)
    if upper - lower > tol * max(1.0, upper):
        raise NumericFailureError(
            "power iteration did not converge",
            {"lower": lower, "upper": upper, "iterations": max_iter},
        )
    return 0.5 * (lower + upper), x


def _collatz_wielandt(a: np.ndarray, tol: float, max_iter: int):
    """Bracket rho(a) for nonnegative irreducible a; returns (lower, upper, x)."""
    shifted = a + np.eye(a.shape[0])
    x = np.full(a.shape[0], 1.0 / a.shape[0])
    lower, upper = 0.0, math.inf
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lower = max(lower, float(ratios.min()) - 1.0)
        upper = min(upper, float(ratios.max()) - 1.0)
        x = y / y.sum()
        if upper - lower <= tol * max(1.0, upper):
            break
    return lower, upper, x


def spectral_radius(m, cross_check: bool = True) -> float:
    """
    Maximum modulus over all eigenvalues, from a full dense eigensolver.

    For nonnegative irreducible inputs the answer is cross-checked against
    the Collatz-Wielandt bracket from power iteration; a disagreement is a
    numeric failure.
    """
    m = as_matrix(m)
    rho = float(np.max(np.abs(_eigvals(m.entries))))

    if cross_check and m.n > 1 and m.is_nonnegative() and is_irreducible(m):
        lower, upper, _ = _collatz_wielandt(
            m.entries, settings.SPECTRAL_CROSSCHECK_TOL, settings.POWER_ITERATION_MAX_ITER
        )
        slack = settings.SPECTRAL_CROSSCHECK_TOL * max(1.0, rho)
        if not (lower - slack <= rho <= upper + slack):
            raise NumericFailureError(
                "eigensolver and power iteration disagree on the spectral radius",
                {"eigensolver": rho, "lower": lower, "upper": upper},
            )
    return rho


def _positive_unit_sum(vec: np.ndarray, side: str) -> np.ndarray:
    vec = np.real_if_close(vec, tol=1e6).real
    total = vec.sum()
    if total == 0.0:
        raise NumericFailureError(f"{side} Perron vector sums to zero", {"vector": vec.tolist()})
    vec = vec / total
    if vec.min() < -settings.PERRON_POSITIVITY_TOL:
        raise NumericFailureError(
            f"computed {side} Perron vector has negative entries",
            {"min_entry": float(vec.min())},
        )
    vec = np.clip(vec, 0.0, None)
    return vec / vec.sum()


def perron_pair(m) -> PerronPair:
    """
    The Perron root of a nonnegative irreducible matrix with its positive
    left and right eigenvectors, both normalized to sum 1.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "perron_pair")
    if m.n < 2:
        raise PreconditionError("perron_pair needs at least two nodes")
    _require_irreducible(m, "perron_pair")

    try:
        values, left, right = scipy.linalg.eig(m.entries, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError("dense eigensolver did not converge", {"reason": str(exc)}) from exc

    # The Perron root is real and has the largest real part of the spectrum.
    k = int(np.argmax(values.real))
    pair = PerronPair(
        rho=float(values[k].real),
        left=_positive_unit_sum(left[:, k], "left"),
        right=_positive_unit_sum(right[:, k], "right"),
    )
    residual = pair.residual(m)
    budget = settings.PERRON_RESIDUAL_TOL * max(1.0, pair.rho)
    if residual > budget:
        pair = _refine_perron(m, pair)
        residual = pair.residual(m)
        if residual > budget:
            raise NumericFailureError(
                "Perron residual above tolerance", {"residual": residual, "budget": budget}
            )
    return pair


def _refine_perron(m: SquareMatrix, pair: PerronPair, steps: int = 3) -> PerronPair:
    """A few shifted inverse-iteration steps on both sides."""
    a = m.entries
    shift = pair.rho * (1.0 + 1e-10) + 1e-14
    system = shift * np.eye(m.n) - a
    left, right = pair.left, pair.right
    try:
        lu = scipy.linalg.lu_factor(system)
        for _ in range(steps):
            right = scipy.linalg.lu_solve(lu, right)
            right = right / right.sum()
            left = scipy.linalg.lu_solve(lu, left, trans=1)
            left = left / left.sum()
    except (np.linalg.LinAlgError, ValueError):
        return pair
    rho = float(left @ a @ right / (left @ right))
    return PerronPair(rho=rho, left=np.clip(left, 0.0, None), right=np.clip(right, 0.0, None))


# ============================================================================
# TRACE FORMULA
# ============================================================================

def gelfand_trace_sequence(m, t_max: int) -> list:
    """
    The sequence (t, trace(M^t)^(1/t)) for t = 1..t_max.

    Powers are formed by repeated multiplication, rescaled by their running
    maximum with the scale kept as a logarithm, so large radii do not
    overflow. Where trace(M^t) = 0 the value is None; the spectral radius
    is the limsup, so consumers take the max over a tail window.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "gelfand_trace_sequence")
    if int(t_max) < 1:
        raise InvalidInputError("t_max must be at least 1")

    a = m.entries
    power = np.array(a)
    log_scale = 0.0
    sequence = []
    for t in range(1, int(t_max) + 1):
        if t > 1:
            power = power @ a
        peak = float(power.max(initial=0.0))
        if peak > 0.0:
            power /= peak
            log_scale += math.log(peak)
        if not (np.all(np.isfinite(power)) and math.isfinite(log_scale)):
            raise NumericFailureError("matrix power overflowed despite rescaling", {"t": t})

        trace = float(np.trace(power))
        if trace <= 0.0 or peak == 0.0:
            sequence.append((t, None))
        else:
            sequence.append((t, math.exp((math.log(trace) + log_scale) / t)))
    return sequence


def gelfand_estimate(sequence: Sequence, window: int = 8) -> Optional[float]:
    """Max of the defined values in the last `window` terms (a finite limsup)."""
    tail = [value for _, value in list(sequence)[-window:] if value is not None]
    return max(tail) if tail else None


def cycle_lower_bounds(m, max_length: int = 5) -> list:
    """
    Every simple directed cycle up to max_length with its weight product
    and the implied lower bound product^(1/length) on the spectral radius.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "cycle_lower_bounds")
    graph = m.digraph()
    results = []
    for cycle in nx.simple_cycles(graph, length_bound=max_length):
        edges = zip(cycle, cycle[1:] + cycle[:1])
        product = float(np.prod([m.entries[i, j] for i, j in edges]))
        results.append((tuple(cycle), product, product ** (1.0 / len(cycle))))
    return results


# ============================================================================
# RESOLVENT SOLVES (NEUMANN SERIES)
# ============================================================================

def _check_side(side: str):
    if side not in ("left", "right"):
        raise InvalidInputError(f"side must be 'left' or 'right', got {side!r}")


def resolvent_solve(m, z, delta: float, side: str = "left") -> np.ndarray:
    """
    Solve k^T = delta k^T M + z^T (side="left") or k = delta M k + z
    (side="right"), the sum of the Neumann series  z^T sum_t delta^t M^t.

    Raises:
        DivergenceError: delta * rho(M) >= 1, where the series has no finite sum.
    """
    m = as_matrix(m)
    _check_side(side)
    z = as_vector(z, m.n, "z")
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0.0:
        raise InvalidInputError(f"delta must be a finite nonnegative number, got {delta}")
    if delta == 0.0:
        return z.copy()

    rho = spectral_radius(m, cross_check=False)
    if delta * rho >= 1.0:
        raise DivergenceError(
            f"delta * rho(M) = {delta * rho:.6g} >= 1: the walk sums blow up and "
            "there is no finite solution (need delta < 1/rho(M))"
        )

    a = m.entries.T if side == "left" else m.entries
    system = np.eye(m.n) - delta * a
    try:
        return scipy.linalg.solve(system, z)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError("I - delta*M is singular", {"delta": delta}) from exc


def neumann_partial_sum(m, z, delta: float, terms: int, side: str = "left") -> np.ndarray:
    """sum_{t < terms} delta^t (M^T)^t z  (left) or delta^t M^t z (right)."""
    m = as_matrix(m)
    _check_side(side)
    z = as_vector(z, m.n, "z")
    a = m.entries.T if side == "left" else m.entries
    term = z.copy()
    total = z.copy()
    for _ in range(1, int(terms)):
        term = delta * (a @ term)
        total += term
    return total
