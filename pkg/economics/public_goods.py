# economics/public_goods.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Pareto analysis of public-goods provision. Every agent's action is costly
# to itself and helpful to others. The BENEFITS MATRIX
#
#     b_ij(x) = (du_i/dx_j) / (-du_i/dx_i),    b_ii = 0
#
# is the rate at which i would trade its own effort for j's. Its spectral
# radius decides efficiency:
#
#   rho(B(x)) > 1   everyone can gain if all raise effort along the right
#                   Perron vector c  ("improvable_up")
#   rho(B(x)) < 1   everyone can gain by cutting effort along -c
#   rho(B(x)) = 1   x is Pareto efficient; the left Perron vector theta
#                   gives the planner weights that x maximizes
#
# An agent is ESSENTIAL when cooperation from the status quo x = 0 is
# possible with it (rho(B(0)) > 1) but not without it (rho < 1 once its row
# and column are zeroed).
#
# Matrices keep the row-as-beneficiary convention: b_ij sits in row i, the
# agent who receives the benefit.
# ============================================================================

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.optimize

from config import settings
from core.errors import (
    InvalidInputError,
    ModelViolationError,
    NumericFailureError,
    PreconditionError,
)
from core.matrix_core import (
    SquareMatrix,
    as_matrix,
    as_vector,
    is_irreducible,
    perron_pair,
    spectral_radius,
    strongly_connected_components,
)
from core.matrix_io import parse_json_matrix
from tools.experiments import parallel_map


CLASSIFICATIONS = ("improvable_up", "improvable_down", "efficient")
FAMILIES = ("linear", "log")


# ============================================================================
# UTILITY MODELS
# ============================================================================

@dataclass(frozen=True)
class GradientCheck:
    max_relative_error: float
    ok: bool


@dataclass(frozen=True, eq=False)
class UtilityModel:
    """
    n payoff functions with their gradients.

    value_fn(i, x) is u_i(x); gradient_fn(i, x) is the length-n vector of
    du_i/dx_j.
    """

    n: int
    value_fn: Callable
    gradient_fn: Callable
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def value(self, i: int, x) -> float:
        return float(self.value_fn(i, as_vector(x, self.n, "x")))

    def values(self, x) -> np.ndarray:
        x = as_vector(x, self.n, "x")
        return np.array([self.value_fn(i, x) for i in range(self.n)], dtype=float)

    def gradient(self, i: int, x) -> np.ndarray:
        return np.asarray(self.gradient_fn(i, as_vector(x, self.n, "x")), dtype=float)

    def rescaled(self, factors) -> "UtilityModel":
        """The model with u_i multiplied by factors_i > 0."""
        factors = as_vector(factors, self.n, "factors")
        if np.any(factors <= 0):
            raise InvalidInputError("rescaling factors must be positive")
        return UtilityModel(
            self.n,
            lambda i, x: factors[i] * self.value_fn(i, x),
            lambda i, x: factors[i] * np.asarray(self.gradient_fn(i, x), dtype=float),
            self.family,
            {**self.params, "rescaled_by": factors.tolist()},
        )

    def check_gradient(self, x, step: float = None, rtol: float = None) -> GradientCheck:
        """Compare every gradient with central finite differences of value."""
        step = settings.GRADIENT_CHECK_STEP if step is None else float(step)
        rtol = settings.GRADIENT_CHECK_RTOL if rtol is None else float(rtol)
        x = as_vector(x, self.n, "x")
        worst = 0.0
        for i in range(self.n):
            analytic = self.gradient(i, x)
            for j in range(self.n):
                e = np.zeros(self.n)
                e[j] = step
                numeric = (self.value_fn(i, x + e) - self.value_fn(i, x - e)) / (2.0 * step)
                error = abs(numeric - analytic[j]) / max(1.0, abs(analytic[j]))
                worst = max(worst, error)
        return GradientCheck(worst, worst <= rtol)


def _family_inputs(g, c_shift):
    g = as_matrix(g)
    if not g.is_nonnegative():
        raise InvalidInputError("benefit weights g must be nonnegative")
    if np.any(np.diag(g.entries) != 0.0):
        raise InvalidInputError("benefit weights g must have a zero diagonal")
    c = np.ones(g.n) if c_shift is None else as_vector(c_shift, g.n, "c_shift")
    if np.any(c <= 0):
        raise InvalidInputError("c_shift must be positive")
    return g, c


def _validated(model: UtilityModel) -> UtilityModel:
    check = model.check_gradient(np.full(model.n, 0.5))
    if not check.ok:
        raise NumericFailureError(
            f"{model.family} family gradient disagrees with finite differences",
            {"max_relative_error": check.max_relative_error},
        )
    return model


def linear_benefit_family(g, c_shift=None) -> UtilityModel:
    """u_i(x) = -1/2 (x_i + c_i)^2 + sum_j g_ij x_j."""
    g, c = _family_inputs(g, c_shift)
    a = g.entries

    def value(i, x):
        return -0.5 * (x[i] + c[i]) ** 2 + float(a[i] @ x)

    def gradient(i, x):
        grad = a[i].copy()
        grad[i] = -(x[i] + c[i])
        return grad

    return _validated(UtilityModel(g.n, value, gradient, "linear", {"c_shift": c.tolist()}))


def log_benefit_family(g, c_shift=None) -> UtilityModel:
    """u_i(x) = -1/2 (x_i + c_i)^2 + sum_j g_ij log(1 + x_j); needs x > -1."""
    g, c = _family_inputs(g, c_shift)
    a = g.entries

    def value(i, x):
        return -0.5 * (x[i] + c[i]) ** 2 + float(a[i] @ np.log1p(x))

    def gradient(i, x):
        grad = a[i] / (1.0 + x)
        grad[i] = -(x[i] + c[i])
        return grad

    return _validated(UtilityModel(g.n, value, gradient, "log", {"c_shift": c.tolist()}))


def utility_model_from_dict(document: dict) -> UtilityModel:
    """{"family": "linear"|"log", "g": {matrix JSON}, "c_shift": [...]}"""
    if not isinstance(document, dict):
        raise InvalidInputError("a utility model must be a JSON object")
    unknown = set(document) - {"family", "g", "c_shift"}
    if unknown:
        raise InvalidInputError(f"unknown keys in utility model JSON: {sorted(unknown)}")
    family = document.get("family", "linear")
    if family not in FAMILIES:
        raise InvalidInputError(f"family must be one of {FAMILIES}, got {family!r}")
    if "g" not in document:
        raise InvalidInputError('utility model JSON needs a "g" matrix')
    g = document["g"]
    g = parse_json_matrix(g) if isinstance(g, dict) else SquareMatrix(np.asarray(g, dtype=float))
    builder = linear_benefit_family if family == "linear" else log_benefit_family
    return builder(g, document.get("c_shift"))


# ============================================================================
# BENEFITS MATRIX
# ============================================================================

@dataclass(frozen=True, eq=False)
class BenefitsMatrix:
    b: SquareMatrix
    at_x: np.ndarray


def jacobian(u: UtilityModel, x) -> np.ndarray:
    """D(x) with d_ij = du_i/dx_j."""
    x = as_vector(x, u.n, "x")
    return np.vstack([u.gradient(i, x) for i in range(u.n)])


def benefits_matrix(u: UtilityModel, x) -> BenefitsMatrix:
    """
    b_ij(x) = (du_i/dx_j) / (-du_i/dx_i) with a zero diagonal.

    Raises:
        ModelViolationError: some du_i/dx_i >= 0 (action not costly) or some
            du_i/dx_j < 0 for j != i (action harms another agent).
    """
    x = as_vector(x, u.n, "x")
    if np.any(x < 0):
        raise InvalidInputError("actions must be nonnegative")
    d = jacobian(u, x)
    own = np.diag(d).copy()
    costless = [i + 1 for i in range(u.n) if own[i] >= 0]
    if costless:
        raise ModelViolationError(
            f"own action is not costly (du_i/dx_i >= 0) for agents {costless}"
        )
    off = d - np.diag(own)
    if np.any(off < -settings.STRUCTURAL_TOL):
        raise ModelViolationError("some agent's action lowers another agent's payoff")
    b = np.clip(off, 0.0, None) / (-own)[:, None]
    np.fill_diagonal(b, 0.0)
    return BenefitsMatrix(SquareMatrix(b), x)


# ============================================================================
# PARETO CLASSIFICATION
# ============================================================================

@dataclass(frozen=True, eq=False)
class ParetoVerdict:
    rho: float
    classification: str
    direction: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None


def classify_benefits(b, tol: float = None) -> ParetoVerdict:
    """Classify a benefits matrix by rho(B) against 1, with a band of width tol."""
    tol = settings.EFFICIENCY_TOL if tol is None else float(tol)
    b = as_matrix(b)
    if not b.is_nonnegative():
        raise InvalidInputError("a benefits matrix is nonnegative")
    if not is_irreducible(b):
        raise PreconditionError(
            "the benefits matrix is reducible: the agents split into groups "
            f"{strongly_connected_components(b)} where one group gets nothing "
            "from another; classify each group on its own"
        )
    if b.n == 1:
        return ParetoVerdict(0.0, "improvable_down", direction=np.array([-1.0]))

    rho = spectral_radius(b)
    pair = perron_pair(b)
    c = pair.right / pair.right.max()
    if rho > 1.0 + tol:
        return ParetoVerdict(rho, "improvable_up", direction=c)
    if rho < 1.0 - tol:
        return ParetoVerdict(rho, "improvable_down", direction=-c)
    return ParetoVerdict(rho, "efficient", weights=pair.left)


def pareto_classify(u: UtilityModel, x, tol: float = None) -> ParetoVerdict:
    """Is x Pareto efficient, and if not, which way is everyone better off?"""
    return classify_benefits(benefits_matrix(u, x).b, tol)


@dataclass(frozen=True, eq=False)
class ImprovementCheck:
    first_order_gains: np.ndarray
    normalized_gains: np.ndarray
    actual_gains: np.ndarray
    eta: float

    @property
    def is_improvement(self) -> bool:
        return bool(np.all(self.first_order_gains > 0))


def verify_improvement(u: UtilityModel, x, direction, eta: float = 1e-6) -> ImprovementCheck:
    """
    Per-agent first-order gains sum_j (du_i/dx_j) direction_j, the same
    gains divided by -du_i/dx_i, and the realized u_i(x + eta d) - u_i(x).
    """
    x = as_vector(x, u.n, "x")
    direction = as_vector(direction, u.n, "direction")
    if float(eta) <= 0:
        raise InvalidInputError("eta must be positive")
    d = jacobian(u, x)
    gains = d @ direction
    normalized = gains / -np.diag(d)
    actual = u.values(x + eta * direction) - u.values(x)
    return ImprovementCheck(gains, normalized, actual, float(eta))


def planner_stationarity(u: UtilityModel, x, theta) -> float:
    """||theta^T (B(x) - I)||_inf; zero when x maximizes sum theta_i u_i."""
    b = benefits_matrix(u, x).b.entries
    theta = as_vector(theta, u.n, "theta")
    return float(np.max(np.abs(theta @ (b - np.eye(u.n)))))


# ============================================================================
# ESSENTIAL AGENTS
# ============================================================================

def component_spectral_radius(b) -> float:
    """
    rho(B) as the largest radius over strongly connected components that
    carry a cycle; exactly 0 when the digraph is acyclic.
    """
    b = as_matrix(b)
    best = 0.0
    a = b.entries
    for component in strongly_connected_components(b):
        if len(component) == 1:
            i = component[0]
            best = max(best, abs(float(a[i, i])) if a[i, i] > settings.STRUCTURAL_TOL else 0.0)
            continue
        sub = SquareMatrix(a[np.ix_(component, component)])
        best = max(best, spectral_radius(sub))
    return best


@dataclass(frozen=True)
class AgentRemoval:
    agent: int
    rho_without: float
    essential: bool


@dataclass(frozen=True, eq=False)
class EssentialReport:
    rho: float
    cooperation_possible: bool
    agents: list
    note: str = ""

    @property
    def essential(self) -> list:
        return [a.agent for a in self.agents if a.essential]


def essential_agents(u: UtilityModel, threads: int = None) -> EssentialReport:
    """
    For every agent i, rho(B^[-i](0)): the status-quo benefits matrix with
    row and column i zeroed (indices stay put). Agent numbers are 0-based.
    """
    b0 = benefits_matrix(u, np.zeros(u.n)).b
    rho = component_spectral_radius(b0)
    possible = rho > 1.0

    def removal(i: int) -> AgentRemoval:
        rho_i = component_spectral_radius(b0.zero_node(i))
        return AgentRemoval(i, rho_i, possible and rho_i < 1.0)

    agents = parallel_map(removal, range(u.n), threads)
    note = "" if possible else "rho(B(0)) <= 1: there is no cooperation from the status quo to lose"
    return EssentialReport(rho, possible, agents, note)


# ============================================================================
# EFFICIENT POINTS
# ============================================================================

@dataclass(frozen=True, eq=False)
class EfficientPoint:
    s: float
    x: np.ndarray
    verdict: ParetoVerdict


def find_efficient_point(u: UtilityModel, direction, s_max: float = None) -> EfficientPoint:
    """
    Bisect along the ray x = s * direction for rho(B(x)) = 1.

    Needs rho(B(0)) > 1 and rho falling below 1 somewhere on the ray; s_max
    is doubled from 1 until it does when not given.
    """
    direction = as_vector(direction, u.n, "direction")
    if np.any(direction < 0) or not np.any(direction > 0):
        raise InvalidInputError("direction must be nonnegative and nonzero")

    def excess(s: float) -> float:
        return spectral_radius(benefits_matrix(u, s * direction).b) - 1.0

    if excess(0.0) <= 0.0:
        raise PreconditionError("rho(B(0)) <= 1: the status quo has no room for improvement")
    if s_max is None:
        s_max = 1.0
        for _ in range(60):
            if excess(s_max) < 0.0:
                break
            s_max *= 2.0
    if excess(float(s_max)) >= 0.0:
        raise PreconditionError(f"rho(B(x)) stays >= 1 along the ray up to s = {s_max:g}")

    s = scipy.optimize.bisect(excess, 0.0, float(s_max), xtol=1e-14, rtol=1e-15, maxiter=500)
    x = s * direction
    return EfficientPoint(float(s), x, pareto_classify(u, x))
