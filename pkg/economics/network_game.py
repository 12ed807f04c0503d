# economics/network_game.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Linear-quadratic games played on a network. Agent i picks an effort
# x_i >= 0 and earns
#
#     u_i(x) = -1/2 gamma_i x_i^2 + (beta_i + sum_{j != i} g_ij x_j) x_i
#
# Dividing u_i by gamma_i does not change anyone's best response, so every
# game is first NORMALIZED to b_i = beta_i/gamma_i, m_ij = g_ij/gamma_i.
# After that the whole analysis is linear algebra on (I - M):
#
#   nash_equilibrium        x* = (I - M)^-1 b            (needs rho(M) < 1)
#   best_response_dynamics  x(t+1) = b + M x(t)
#   keyness                 kappa^T = 1^T (I - M)^-1     (slope of 1^T x* in b)
#   total_welfare           V(x) = sum_i u_i(x)          (gamma uniform)
#   efficient_profile       x_eff = (I - 2M)^-1 b        (M symmetric, 2 rho < 1)
#   price_of_anarchy        sup_b V(x_eff) / V(x*)
#
# Price of anarchy conventions:
#   "welfare"     the ratio of summed utilities; sup = (1-rho)^2 / (1-2rho)
#   "as_printed"  the ratio of squared effort norms ||x_eff||^2 / ||x*||^2;
#                 sup = ((1-rho) / (1-2rho))^2
# Both suprema sit on the top eigenvector of M.
# ============================================================================

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from config import settings
from core.errors import (
    DivergenceError,
    InvalidInputError,
    NumericFailureError,
    PreconditionError,
    SingularSystemError,
    SpectralEconWarning,
)
from core.matrix_core import SquareMatrix, as_matrix, as_vector, resolvent_solve, spectral_radius
from core.matrix_io import parse_json_matrix
from tools.experiments import parallel_map, replicate_rng


POA_MODES = ("closed_form", "empirical")
POA_CONVENTIONS = ("welfare", "as_printed")


# ============================================================================
# DOMAIN TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class GameSpec:
    """Raw game primitives (gamma, beta, G)."""

    gamma: np.ndarray
    beta: np.ndarray
    g: SquareMatrix

    def __post_init__(self):
        g = as_matrix(self.g)
        gamma = as_vector(self.gamma, g.n, "gamma")
        beta = as_vector(self.beta, g.n, "beta")
        if np.any(gamma <= 0):
            raise InvalidInputError("every cost curvature gamma_i must be positive")
        if np.any(beta <= 0):
            raise InvalidInputError("every standalone productivity beta_i must be positive")
        if np.any(np.diag(g.entries) != 0.0):
            raise InvalidInputError("spillover matrix g must have a zero diagonal")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.g.n

    @classmethod
    def from_dict(cls, document: dict) -> "GameSpec":
        """{"gamma": [...], "beta": [...], "g": {matrix JSON}}"""
        if not isinstance(document, dict):
            raise InvalidInputError("a game must be a JSON object")
        missing = {"gamma", "beta", "g"} - set(document)
        if missing:
            raise InvalidInputError(f"game JSON is missing {sorted(missing)}")
        unknown = set(document) - {"gamma", "beta", "g"}
        if unknown:
            raise InvalidInputError(f"unknown keys in game JSON: {sorted(unknown)}")
        g = document["g"]
        g = parse_json_matrix(g) if isinstance(g, dict) else SquareMatrix(np.asarray(g, dtype=float))
        return cls(document["gamma"], document["beta"], g)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "beta": self.beta.tolist(),
            "g": {"n": self.n, "entries": self.g.entries.tolist()},
        }

    def payoff(self, i: int, x) -> float:
        """u_i(x) for one agent."""
        return float(self.utilities(x)[i])

    def utilities(self, x) -> np.ndarray:
        """Every agent's payoff at the profile x."""
        x = as_vector(x, self.n, "x")
        return -0.5 * self.gamma * x ** 2 + (self.beta + self.g.entries @ x) * x


@dataclass(frozen=True, eq=False)
class NormalizedGame:
    """b_i = beta_i/gamma_i, m_ij = g_ij/gamma_i, and rho(m)."""

    b: np.ndarray
    m: SquareMatrix
    rho: float
    gamma_uniform: bool = True

    @property
    def n(self) -> int:
        return self.m.n


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    x_star: np.ndarray
    welfare_nash: Optional[float]
    keyness: np.ndarray
    residual: float
    x_eff: Optional[np.ndarray] = None
    welfare_eff: Optional[float] = None
    poa_closed_form: Optional[float] = None
    notes: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class BestResponseTrajectory:
    states: list
    converged: bool
    diverged: bool
    diverged_at: Optional[int] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def steps(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True, eq=False)
class PriceOfAnarchy:
    value: float
    mode: str
    convention: str
    rho: float
    closed_form: float
    maximizer: Optional[np.ndarray] = None
    starts_converged: Optional[int] = None
    note: str = ""


@dataclass(frozen=True, eq=False)
class WelfareDecomposition:
    eigenvalues: np.ndarray
    b_tilde: np.ndarray
    nash_terms: np.ndarray
    efficient_terms: np.ndarray

    @property
    def welfare_nash(self) -> float:
        return float(self.nash_terms.sum())

    @property
    def welfare_eff(self) -> float:
        return float(self.efficient_terms.sum())


# ============================================================================
# NORMALIZATION AND EQUILIBRIUM
# ============================================================================

def normalize(spec: GameSpec) -> NormalizedGame:
    """Divide each agent's payoff by its own gamma_i."""
    if not isinstance(spec, GameSpec):
        raise InvalidInputError("normalize expects a GameSpec")
    b = spec.beta / spec.gamma
    m = SquareMatrix(spec.g.entries / spec.gamma[:, None], spec.g.labels)
    uniform = bool(np.all(spec.gamma == spec.gamma[0]))
    return NormalizedGame(b, m, spectral_radius(m), uniform)


def _require_stable(ng: NormalizedGame):
    if ng.rho >= 1.0:
        raise DivergenceError(
            f"rho(M) = {ng.rho:.6g} >= 1: the positive feedback effects blow up and "
            "no finite equilibrium exists"
        )


def nash_equilibrium(ng: NormalizedGame) -> np.ndarray:
    """
    The unique equilibrium x* = (I - M)^-1 b.

    This is also the (1, b)-Katz-Bonacich centrality in M^T. A negative
    component (possible only when some m_ij < 0) is reported as the
    unconstrained solution with a SpectralEconWarning.
    """
    _require_stable(ng)
    x = resolvent_solve(ng.m, ng.b, 1.0, side="right")
    if np.any(x < 0):
        warnings.warn(
            "equilibrium has negative components; the unconstrained solution "
            "is reported and the constraint x >= 0 is ignored",
            SpectralEconWarning,
            stacklevel=2,
        )
    return x


def total_effort(ng: NormalizedGame) -> float:
    """X* = 1^T x*."""
    return float(nash_equilibrium(ng).sum())


def best_response_dynamics(ng: NormalizedGame, x0, t_max: int = 10_000,
                           tol: float = 1e-12) -> BestResponseTrajectory:
    """
    Everyone best-responds to last round: x(t+1) = b + M x(t).

    Stops on ||x(t+1) - x(t)||_inf <= tol, on t_max, or once the run is
    flagged divergent: the increment grew for DIVERGENCE_WINDOW steps in a
    row, or the profile outgrew DIVERGENCE_GROWTH times its starting scale.
    """
    x = as_vector(x0, ng.n, "x0")
    if int(t_max) < 0:
        raise InvalidInputError("t_max must be nonnegative")
    a = ng.m.entries
    scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(ng.b))))

    states = [x.copy()]
    previous_step = None
    growing = 0
    converged = diverged = False
    diverged_at = None
    for t in range(1, int(t_max) + 1):
        nxt = ng.b + a @ x
        step = float(np.max(np.abs(nxt - x)))
        x = nxt
        states.append(x.copy())
        if step <= tol:
            converged = True
            break
        growing = growing + 1 if previous_step is not None and step > previous_step else 0
        previous_step = step
        if growing >= settings.DIVERGENCE_WINDOW or np.max(np.abs(x)) > settings.DIVERGENCE_GROWTH * scale:
            diverged, diverged_at = True, t
            break
    return BestResponseTrajectory(states, converged, diverged, diverged_at)


def keyness(ng: NormalizedGame) -> np.ndarray:
    """kappa_i = d X* / d b_i, the (1, 1)-Katz-Bonacich centrality in M."""
    _require_stable(ng)
    return resolvent_solve(ng.m, np.ones(ng.n), 1.0, side="left")


def scaled_equilibrium_path(a, b, deltas) -> list:
    """
    Total effort as strategic effects scale up: for each delta, the game
    with M = delta * A. Each equilibrium is the (delta, b)-Katz-Bonacich
    centrality in A^T.

    Returns:
        [(delta, x*, X*)] in the order given. Raises DivergenceError at the
        first delta with delta * rho(A) >= 1.
    """
    a = as_matrix(a)
    b = as_vector(b, a.n, "b")
    path = []
    for delta in deltas:
        x = resolvent_solve(a, b, float(delta), side="right")
        path.append((float(delta), x, float(x.sum())))
    return path


# ============================================================================
# WELFARE
# ============================================================================

def _require_uniform_gamma(ng: NormalizedGame, operation: str):
    if not ng.gamma_uniform:
        raise PreconditionError(
            f"{operation} assumes equal cost coefficients gamma_i; rescaling "
            "payoffs would change the welfare function"
        )


def _require_symmetric(ng: NormalizedGame, operation: str):
    if not ng.m.is_symmetric():
        raise PreconditionError(f"{operation} needs a symmetric spillover matrix M")


def _require_efficient_stable(ng: NormalizedGame):
    if 2.0 * ng.rho >= 1.0:
        raise DivergenceError(
            f"2 rho(M) = {2.0 * ng.rho:.6g} >= 1: total welfare is unbounded and "
            "there is no efficient profile"
        )


def total_welfare(ng: NormalizedGame, x) -> float:
    """V(x) = sum_i [-1/2 x_i^2 + (b_i + sum_j m_ij x_j) x_i]."""
    _require_uniform_gamma(ng, "total_welfare")
    x = as_vector(x, ng.n, "x")
    return float(np.sum(-0.5 * x ** 2 + (ng.b + ng.m.entries @ x) * x))


def efficient_profile(ng: NormalizedGame) -> np.ndarray:
    """The welfare maximizer x_eff = (I - 2M)^-1 b."""
    _require_uniform_gamma(ng, "efficient_profile")
    _require_symmetric(ng, "efficient_profile")
    _require_efficient_stable(ng)
    try:
        return scipy.linalg.solve(np.eye(ng.n) - 2.0 * ng.m.entries, ng.b, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError("I - 2M is singular", {"rho": ng.rho}) from exc


def welfare_decomposition(ng: NormalizedGame) -> WelfareDecomposition:
    """
    Welfare per eigen-direction of symmetric M = W diag(lambda) W^T, with
    b_tilde = W^T b:  V(x*) = sum 1/2 b~^2/(1-lambda)^2 and
    V(x_eff) = sum 1/2 b~^2/(1-2 lambda).
    """
    _require_uniform_gamma(ng, "welfare_decomposition")
    _require_symmetric(ng, "welfare_decomposition")
    _require_efficient_stable(ng)
    lam, w = scipy.linalg.eigh(ng.m.entries)
    b_tilde = w.T @ ng.b
    nash_terms = 0.5 * b_tilde ** 2 / (1.0 - lam) ** 2
    eff_terms = 0.5 * b_tilde ** 2 / (1.0 - 2.0 * lam)
    return WelfareDecomposition(lam, b_tilde, nash_terms, eff_terms)


# ============================================================================
# PRICE OF ANARCHY
# ============================================================================

def poa_closed_form(rho: float, convention: str = "welfare") -> float:
    if convention == "welfare":
        return (1.0 - rho) ** 2 / (1.0 - 2.0 * rho)
    if convention == "as_printed":
        return ((1.0 - rho) / (1.0 - 2.0 * rho)) ** 2
    raise InvalidInputError(f"convention must be one of {POA_CONVENTIONS}, got {convention!r}")


def _ratio_forms(m: np.ndarray, convention: str):
    """(P, Q) with V(x_eff)/V(x*) = b^T P b / b^T Q b for the chosen convention."""
    eye = np.eye(m.shape[0])
    nash_inv = scipy.linalg.solve(eye - m, eye, assume_a="sym")
    eff_inv = scipy.linalg.solve(eye - 2.0 * m, eye, assume_a="sym")
    q = nash_inv @ nash_inv
    p = eff_inv if convention == "welfare" else eff_inv @ eff_inv
    return 0.5 * (p + p.T), 0.5 * (q + q.T)


def _ascend(p: np.ndarray, q: np.ndarray, start: np.ndarray):
    """
    Projected gradient ascent of f(b) = b^T P b / b^T Q b over unit b >= 0,
    with a backtracking step. Returns (value, b, converged).
    """
    def value(b):
        return float(b @ p @ b) / float(b @ q @ b)

    def project(b):
        b = np.clip(b, 0.0, None)
        norm = np.linalg.norm(b)
        return None if norm == 0.0 else b / norm

    b = project(start)
    f = value(b)
    step = 1.0
    for _ in range(settings.POA_MAX_ITER):
        grad = 2.0 * (p @ b - f * (q @ b)) / float(b @ q @ b)
        improved = False
        while step > 1e-16:
            candidate = project(b + step * grad)
            if candidate is not None:
                f_new = value(candidate)
                if f_new > f:
                    improved = True
                    break
            step *= 0.5
        if not improved:
            return f, b, True
        gain = f_new - f
        b, f = candidate, f_new
        step *= 2.0
        if gain <= settings.POA_STEP_TOL * max(1.0, abs(f)):
            return f, b, True
    return f, b, False


def _poa_starts(m: np.ndarray, seed: int, count: int) -> list:
    _, vectors = scipy.linalg.eigh(m)
    starts = [np.abs(vectors[:, -k]) for k in range(1, min(3, m.shape[0]) + 1)]
    index = 0
    while len(starts) < count:
        starts.append(replicate_rng(seed, index).uniform(0.0, 1.0, size=m.shape[0]) + 1e-3)
        index += 1
    return starts


def price_of_anarchy(ng: NormalizedGame, mode: str = "closed_form", convention: str = "welfare",
                     seed: int = None, threads: int = None, starts: int = None) -> PriceOfAnarchy:
    """
    Worst case over b > 0 of the efficient-to-equilibrium welfare ratio.

    closed_form ignores b. empirical searches the positive unit sphere from
    the top-3 eigenvectors of M and random positive vectors, and reports the
    best b it found. The supremum may only be approached, not attained, when
    the top eigenvector has zero entries.

    Raises:
        NumericFailureError: no start converged (diagnostics carry the best value).
    """
    if mode not in POA_MODES:
        raise InvalidInputError(f"mode must be one of {POA_MODES}, got {mode!r}")
    if convention not in POA_CONVENTIONS:
        raise InvalidInputError(f"convention must be one of {POA_CONVENTIONS}, got {convention!r}")
    _require_uniform_gamma(ng, "price_of_anarchy")
    _require_symmetric(ng, "price_of_anarchy")
    _require_efficient_stable(ng)
    closed = poa_closed_form(ng.rho, convention)
    if mode == "closed_form":
        return PriceOfAnarchy(closed, mode, convention, ng.rho, closed)

    seed = settings.DEFAULT_SEED if seed is None else int(seed)
    count = settings.POA_MULTISTARTS if starts is None else int(starts)
    if count < 1:
        raise InvalidInputError("starts must be at least 1")
    p, q = _ratio_forms(ng.m.entries, convention)
    results = parallel_map(lambda s: _ascend(p, q, s), _poa_starts(ng.m.entries, seed, count), threads)

    converged = [r for r in results if r[2]]
    best = max(results, key=lambda r: r[0])
    if not converged:
        raise NumericFailureError(
            "price-of-anarchy search did not converge from any start",
            {"best_value": best[0], "best_b": best[1].tolist()},
        )
    value, b, _ = max(converged, key=lambda r: r[0])
    note = ""
    if np.min(b) <= 1e-9:
        note = "maximizing b touches the boundary of the orthant; the supremum may be unattained"
    return PriceOfAnarchy(value, mode, convention, ng.rho, closed, b, len(converged), note)


# ============================================================================
# FULL REPORT
# ============================================================================

def equilibrium_report(ng: NormalizedGame) -> EquilibriumReport:
    """
    Equilibrium, keyness and, when the welfare assumptions hold (uniform
    gamma, symmetric M, 2 rho < 1), the efficient benchmark and closed-form PoA.
    """
    x_star = nash_equilibrium(ng)
    residual = float(np.max(np.abs(x_star - (ng.b + ng.m.entries @ x_star))))
    budget = settings.EQUILIBRIUM_RESIDUAL_TOL * float(np.max(np.abs(x_star)))
    if residual > budget:
        raise NumericFailureError(
            "equilibrium fixed-point residual is too large",
            {"residual": residual, "budget": budget},
        )

    notes = []
    welfare_nash = x_eff = welfare_eff = poa = None
    if ng.gamma_uniform:
        welfare_nash = total_welfare(ng, x_star)
        if not ng.m.is_symmetric():
            notes.append("M is not symmetric: no efficient benchmark")
        elif 2.0 * ng.rho >= 1.0:
            notes.append("2 rho(M) >= 1: welfare is unbounded")
        else:
            x_eff = efficient_profile(ng)
            welfare_eff = total_welfare(ng, x_eff)
            poa = poa_closed_form(ng.rho)
    else:
        notes.append("gamma is not uniform: welfare analysis skipped")

    return EquilibriumReport(
        x_star, welfare_nash, keyness(ng), residual, x_eff, welfare_eff, poa, notes
    )
