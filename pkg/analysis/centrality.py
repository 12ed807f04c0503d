# analysis/centrality.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Node scores for a weighted digraph:
#
#   degree_centrality      row sums, column sums, or undirected edge counts
#   eigenvector_centrality the left Perron vector c:  rho c_i = sum_j c_j m_ji
#   katz_bonacich          k^T = delta k^T M + z^T   (walks weighted by delta^t)
#   kb_eigenvector_limit   (1 - delta) k(delta) approaching c as delta*rho -> 1
#
# Katz-Bonacich uses the left-hand convention: node i collects the weight of
# walks arriving at i, weighted by z at the walk's start. orientation="right"
# applies the same formula to M^T, which is what the network game needs.
# ============================================================================

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config import settings
from core.errors import InvalidInputError, PreconditionError
from core.matrix_core import (
    as_vector,
    as_matrix,
    is_irreducible,
    perron_pair,
    resolvent_solve,
    spectral_radius,
    strongly_connected_components,
)


KINDS = ("degree", "eigenvector", "katz_bonacich")


# ============================================================================
# RESULT TYPE
# ============================================================================

@dataclass(frozen=True, eq=False)
class CentralityResult:
    """Scores per node plus how they were produced."""

    scores: np.ndarray
    kind: str
    normalization: str
    labels: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown centrality kind {self.kind!r}")
        scores = np.array(self.scores, dtype=float)
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i + 1) for i in range(len(scores))))

    def ranking(self) -> list:
        """Labels sorted by decreasing score (stable for ties)."""
        order = np.argsort(-self.scores, kind="stable")
        return [self.labels[i] for i in order]

    def argmax_set(self, rtol: float = 1e-9) -> set:
        """Every label whose score ties the maximum."""
        top = self.scores.max()
        return {
            label for label, s in zip(self.labels, self.scores)
            if abs(s - top) <= rtol * max(1.0, abs(top))
        }

    def to_rows(self) -> list:
        return [(label, float(s)) for label, s in zip(self.labels, self.scores)]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "normalization": self.normalization,
            "params": self.params,
            "scores": dict(self.to_rows()),
        }


def _require_nonnegative(m, operation: str):
    if not m.is_nonnegative():
        raise InvalidInputError(f"{operation} needs a nonnegative matrix")


# ============================================================================
# DEGREE
# ============================================================================

def degree_centrality(m, direction: str = "out") -> CentralityResult:
    """
    Row sums (out), column sums (in), or the number of neighbours in the
    symmetrized 0/1 pattern (undirected).
    """
    m = as_matrix(m)
    _require_nonnegative(m, "degree_centrality")
    a = m.entries
    if direction == "out":
        scores = a.sum(axis=1)
    elif direction == "in":
        scores = a.sum(axis=0)
    elif direction == "undirected":
        pattern = (a > settings.STRUCTURAL_TOL) | (a.T > settings.STRUCTURAL_TOL)
        np.fill_diagonal(pattern, False)
        scores = pattern.sum(axis=1).astype(float)
    else:
        raise InvalidInputError(f"direction must be in, out or undirected, got {direction!r}")
    return CentralityResult(
        scores, "degree", "raw", m.node_names, {"direction": direction}
    )


# ============================================================================
# EIGENVECTOR CENTRALITY
# ============================================================================

def eigenvector_centrality(m) -> CentralityResult:
    """
    The left Perron vector of M, summing to 1.

    Raises:
        PreconditionError: M is reducible. Uniqueness only holds inside a
            strongly connected component, so no silent answer is given.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "eigenvector_centrality")
    if m.n < 2:
        raise PreconditionError("eigenvector centrality needs at least two nodes")
    if not is_irreducible(m):
        components = strongly_connected_components(m)
        raise PreconditionError(
            "eigenvector centrality is only uniquely determined within a strongly "
            f"connected component; this matrix has components {components}. "
            "Run the analysis on each component's submatrix."
        )
    pair = perron_pair(m)
    return CentralityResult(
        pair.left, "eigenvector", "sum-1", m.node_names, {"eigenvalue": pair.rho}
    )


# ============================================================================
# KATZ-BONACICH
# ============================================================================

def katz_bonacich(m, delta: float, z=None, orientation: str = "left") -> CentralityResult:
    """
    (delta, z)-Katz-Bonacich centralities: k^T = delta k^T M + z^T.

    Args:
        m:           Nonnegative matrix.
        delta:       Decay, 0 < delta < 1/rho(M).
        z:           Exogenous scores; all ones when omitted.
        orientation: "left" for the formula as written, "right" to apply it
                     to M^T (k = delta M k + z).
    """
    m = as_matrix(m)
    _require_nonnegative(m, "katz_bonacich")
    z = np.ones(m.n) if z is None else as_vector(z, m.n, "z")
    if orientation not in ("left", "right"):
        raise InvalidInputError(f"orientation must be left or right, got {orientation!r}")
    if float(delta) <= 0.0:
        raise InvalidInputError(f"delta must be positive, got {delta}")

    k = resolvent_solve(m, z, delta, side=orientation)
    return CentralityResult(
        k, "katz_bonacich", "raw", m.node_names,
        {"delta": float(delta), "z": z.tolist(), "orientation": orientation},
    )


def walk_sum_centrality(m, delta: float, z=None, max_length: int = None) -> np.ndarray:
    """
    Brute-force sum over walks: sum_{t <= T} delta^t z^T M^t, built one
    walk length at a time from explicit matrix powers.
    """
    m = as_matrix(m)
    z = np.ones(m.n) if z is None else as_vector(z, m.n, "z")
    max_length = settings.WALK_SUM_TERMS if max_length is None else int(max_length)
    total = z.copy()
    power = np.eye(m.n)
    for t in range(1, max_length + 1):
        power = power @ m.entries
        total += (delta ** t) * (z @ power)
    return total


# ============================================================================
# THE LIMIT delta * rho -> 1
# ============================================================================

@dataclass(frozen=True, eq=False)
class LimitPoint:
    delta: float
    rescaled: np.ndarray
    cosine_to_c: float


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


def kb_eigenvector_limit(m, z=None, deltas=()) -> list:
    """
    For each delta, (1 - delta) k(delta) rescaled to sum 1 and its cosine
    similarity with the eigenvector centrality c. As delta * rho(M) -> 1 the
    cosine rises to 1.
    """
    m = as_matrix(m)
    _require_nonnegative(m, "kb_eigenvector_limit")
    z = np.ones(m.n) if z is None else as_vector(z, m.n, "z")
    if np.any(z < 0) or not np.any(z > 0):
        raise InvalidInputError("z must be nonnegative and nonzero")

    c = eigenvector_centrality(m).scores
    points = []
    for delta in deltas:
        k = katz_bonacich(m, delta, z).scores
        rescaled = (1.0 - delta) * k
        rescaled = rescaled / rescaled.sum()
        points.append(LimitPoint(float(delta), rescaled, _cosine(rescaled, c)))
    return points


def deltas_for_fractions(m, fractions) -> list:
    """delta values with delta * rho(M) equal to each given fraction."""
    rho = spectral_radius(m)
    if rho <= 0.0:
        raise PreconditionError("the spectral radius is zero; every delta is admissible")
    return [float(f) / rho for f in fractions]


def centrality(m, kind: str, delta: Optional[float] = None, z=None,
               direction: str = "out") -> CentralityResult:
    """Dispatch by kind name (used by the command line)."""
    if kind == "degree":
        return degree_centrality(m, direction)
    if kind == "eigenvector":
        return eigenvector_centrality(m)
    if kind in ("katz", "katz_bonacich"):
        if delta is None:
            raise InvalidInputError("Katz-Bonacich centrality needs --delta")
        return katz_bonacich(m, delta, z)
    raise InvalidInputError(f"unknown centrality kind {kind!r}")
