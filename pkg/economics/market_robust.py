# economics/market_robust.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# A pricing game among n firms and an authority that nudges their costs.
#
# Demand is linear in prices: q(x) = q0 + M x, with M symmetric and
# M_ii = -1. Firm i sets x_i to maximize q_i(x)(x_i - c_i), so equilibrium
# prices solve (I - M) x = q0 + c. A subsidy sigma lowers costs (c_dot =
# -sigma) and changes total surplus by
#
#     V(sigma) = q0^T (I - M)^-1 M sigma
#              = sum_l alpha_l beta_l lambda_l / (1 - lambda_l)
#
# in the eigenbasis M = W diag(lambda) W^T, alpha = W^T sigma, beta = W^T q0.
#
# The authority only sees M_hat = M + E and q0_hat = q0 + z, with E a
# symmetric Gaussian (Wigner) matrix. Eigenvalues of M well above the noise
# edge 2 sd sqrt(n) survive the noise with their eigenvectors nearly intact,
# so the ROBUST design only spends on those eigen-directions:
#
#   1. keep the eigenpairs of M_hat with |lambda_hat| >= tau
#   2. alpha_l = s * beta_hat_l * sign(lambda_hat_l / (1 - lambda_hat_l))
#   3. choose s so the estimated surplus is margin * target
#
# certify() repeats observe -> design -> evaluate over seeded replicates and
# reports how often the TRUE surplus reaches the target.
# ============================================================================

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from config import settings
from core.errors import (
    InvalidInputError,
    NoRecoverableStructureError,
    SingularSystemError,
)
from core.matrix_core import SquareMatrix, as_matrix, as_vector
from core.matrix_io import parse_json_matrix
from tools.experiments import parallel_map, replicate_rng
from tools.fixtures import block_pattern


# ============================================================================
# DOMAIN TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class MarketScenario:
    """The true market (M, q0) plus how noisily it will be measured."""

    m: SquareMatrix
    q0: np.ndarray
    noise_sd: float = 1.0
    seed: int = settings.DEFAULT_SEED

    def __post_init__(self):
        m = as_matrix(self.m)
        if np.any(np.diag(m.entries) != -1.0):
            raise InvalidInputError("market matrix must have M_ii = -1 on the whole diagonal")
        if not m.is_symmetric(1e-12):
            raise InvalidInputError("market matrix must be symmetric")
        q0 = as_vector(self.q0, m.n, "q0")
        if not np.isfinite(self.noise_sd) or self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be a finite nonnegative number")
        lam = scipy.linalg.eigvalsh(m.entries)
        if np.any(np.abs(lam - 1.0) <= settings.MARKET_SINGULAR_TOL):
            raise SingularSystemError(
                "M has an eigenvalue at 1, so I - M is singular", {"eigenvalues": lam.tolist()}
            )
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "noise_sd", float(self.noise_sd))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n(self) -> int:
        return self.m.n

    @classmethod
    def from_dict(cls, document: dict) -> "MarketScenario":
        """
        {"m": {matrix} | {"block": {"n": 300, "q0_scale": 10}},
         "q0": [...] | "top_eigenvector", "noise_sd": 1.0, "seed": 7}
        """
        if not isinstance(document, dict) or "m" not in document:
            raise InvalidInputError('a market scenario needs an "m" entry')
        unknown = set(document) - {"m", "q0", "noise_sd", "seed"}
        if unknown:
            raise InvalidInputError(f"unknown keys in scenario JSON: {sorted(unknown)}")
        noise_sd = float(document.get("noise_sd", 1.0))
        seed = int(document.get("seed", settings.DEFAULT_SEED))

        spec = document["m"]
        if isinstance(spec, dict) and "block" in spec:
            block = spec["block"]
            extra = set(block) - {"n", "q0_scale"}
            if extra:
                raise InvalidInputError(f"unknown keys in block spec: {sorted(extra)}")
            scenario = block_example(
                int(block.get("n", 300)), float(block.get("q0_scale", settings.BLOCK_Q0_SCALE)),
                noise_sd, seed,
            )
            if "q0" not in document:
                return scenario
            m = scenario.m
        else:
            m = parse_json_matrix(spec) if isinstance(spec, dict) else SquareMatrix(np.asarray(spec, dtype=float))

        q0 = document.get("q0", "top_eigenvector")
        if q0 == "top_eigenvector":
            q0 = top_eigenpair(m)[1]
        return cls(m, q0, noise_sd, seed)


@dataclass(frozen=True, eq=False)
class NoisyObservation:
    """What the authority sees. `truth` is kept only for simulation scoring."""

    m_hat: SquareMatrix
    q0_hat: np.ndarray
    noise_sd: float
    replicate: int = 0
    noise_norm: float = 0.0
    truth: Optional[MarketScenario] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class InterventionReport:
    sigma: np.ndarray
    estimated_welfare: float
    top_space_dim: int
    selected_eigenvalues: np.ndarray
    scale: float
    true_welfare: Optional[float] = None
    alignment: Optional[float] = None


@dataclass(frozen=True, eq=False)
class CertificationResult:
    success_rate: float
    mean_alignment: float
    davis_kahan_bound: float
    eigengap: float
    replicates: int
    epsilon: float
    rows: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.success_rate >= 1.0 - self.epsilon


# ============================================================================
# EIGEN HELPERS
# ============================================================================

def _eigh(a: np.ndarray):
    return scipy.linalg.eigh(0.5 * (a + a.T))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def top_eigenpair(m):
    """
    The eigenvalue of largest modulus of symmetric m and its unit
    eigenvector, signed so the largest-modulus entry is positive.
    """
    m = as_matrix(m)
    lam, w = _eigh(m.entries)
    k = int(np.argmax(np.abs(lam)))
    return float(lam[k]), _fix_sign(w[:, k])


def semicircle_edge(n: int, sd: float) -> float:
    """Spectral edge 2 sd sqrt(n) of an n-by-n Wigner matrix."""
    return 2.0 * float(sd) * float(np.sqrt(n))


def wigner_noise(n: int, sd: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix with i.i.d. N(0, sd^2) entries on and above the diagonal."""
    draws = rng.normal(0.0, float(sd), size=(n, n))
    upper = np.triu(draws)
    return upper + np.triu(draws, 1).T


# ============================================================================
# PRICES AND SURPLUS
# ============================================================================

def _solve(scenario: MarketScenario, rhs: np.ndarray) -> np.ndarray:
    system = np.eye(scenario.n) - scenario.m.entries
    try:
        return scipy.linalg.solve(system, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError("I - M is singular", {"n": scenario.n}) from exc


def equilibrium_prices(scenario: MarketScenario, costs=None) -> np.ndarray:
    """Nash prices x = (I - M)^-1 (q0 + c); costs default to zero."""
    c = np.zeros(scenario.n) if costs is None else as_vector(costs, scenario.n, "costs")
    return _solve(scenario, scenario.q0 + c)


def quantities(scenario: MarketScenario, x) -> np.ndarray:
    """q(x) = q0 + M x."""
    return scenario.q0 + scenario.m.entries @ as_vector(x, scenario.n, "x")


def price_response(scenario: MarketScenario, c_dot) -> np.ndarray:
    """Price change x_dot = (I - M)^-1 c_dot for a cost change c_dot."""
    return _solve(scenario, as_vector(c_dot, scenario.n, "c_dot"))


def welfare_effect(scenario: MarketScenario, sigma) -> float:
    """V(sigma) = q0^T (I - M)^-1 M sigma."""
    sigma = as_vector(sigma, scenario.n, "sigma")
    return float(_solve(scenario, scenario.q0) @ (scenario.m.entries @ sigma))


def spectral_welfare(scenario: MarketScenario, sigma):
    """
    V(sigma) summed over eigen-directions.

    Returns:
        (value, terms) where terms[l] = alpha_l beta_l lambda_l / (1 - lambda_l),
        in ascending eigenvalue order.
    """
    sigma = as_vector(sigma, scenario.n, "sigma")
    lam, w = _eigh(scenario.m.entries)
    if np.any(np.abs(1.0 - lam) <= settings.MARKET_SINGULAR_TOL):
        raise SingularSystemError("an eigenvalue of M is 1", {"eigenvalues": lam.tolist()})
    alpha = w.T @ sigma
    beta = w.T @ scenario.q0
    terms = alpha * beta * lam / (1.0 - lam)
    return float(terms.sum()), terms


def recoverable_structure(scenario: MarketScenario, mu: float, delta: float):
    """
    Does q0 have projection norm >= delta onto L(M, mu), the span of the
    eigenvectors with |lambda| >= mu?

    Returns:
        (holds, projection_norm)
    """
    lam, w = _eigh(scenario.m.entries)
    keep = np.abs(lam) >= float(mu)
    norm = float(np.linalg.norm(w[:, keep].T @ scenario.q0)) if keep.any() else 0.0
    return norm >= float(delta), norm


# ============================================================================
# OBSERVATION AND DESIGN
# ============================================================================

def observe(scenario: MarketScenario, replicate: int = 0) -> NoisyObservation:
    """
    Replicate `replicate` of the noisy measurement. E is drawn before z,
    both from the generator for (scenario.seed, replicate).
    """
    rng = replicate_rng(scenario.seed, replicate)
    e = wigner_noise(scenario.n, scenario.noise_sd, rng)
    z = rng.normal(0.0, scenario.noise_sd, size=scenario.n)
    m_hat = SquareMatrix(scenario.m.entries + e, scenario.m.labels)
    noise_norm = float(np.max(np.abs(scipy.linalg.eigvalsh(e)))) if scenario.noise_sd > 0 else 0.0
    return NoisyObservation(m_hat, scenario.q0 + z, scenario.noise_sd, int(replicate), noise_norm, scenario)


def default_tau(n: int, noise_sd: float) -> float:
    """MARKET_TAU_FACTOR * sd * sqrt(n), a notch above the noise edge."""
    if noise_sd <= 0:
        return settings.MARKET_SINGULAR_TOL
    return settings.MARKET_TAU_FACTOR * noise_sd * float(np.sqrt(n))


def design_intervention(obs: NoisyObservation, tau: float = None, target: float = 1.0,
                        margin: float = None) -> InterventionReport:
    """
    Build sigma from the observed (M_hat, q0_hat) alone.

    Raises:
        NoRecoverableStructureError: no eigenvalue of M_hat reaches tau, or
            q0_hat has almost no weight on the ones that do.
    """
    n = obs.m_hat.n
    tau = default_tau(n, obs.noise_sd) if tau is None else float(tau)
    margin = settings.MARKET_MARGIN if margin is None else float(margin)
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    if float(target) <= 0:
        raise InvalidInputError("target must be positive")
    if margin < 1:
        raise InvalidInputError("margin must be at least 1")

    lam, w = _eigh(obs.m_hat.entries)
    selected = np.flatnonzero(np.abs(lam) >= tau)
    if selected.size == 0:
        raise NoRecoverableStructureError(
            f"no eigenvalue of the observed matrix reaches tau = {tau:.6g}; "
            "there is no recoverable structure to target"
        )
    lam_s = lam[selected]
    gain = lam_s / (1.0 - lam_s)
    beta_hat = w[:, selected].T @ obs.q0_hat
    signal = float(np.sum(beta_hat ** 2 * np.abs(gain)))
    if signal < settings.MARKET_SIGNAL_FLOOR:
        raise NoRecoverableStructureError(
            "observed quantities have no weight on the strong eigen-directions "
            f"(signal {signal:.3g}); the intervention cannot be aimed"
        )

    scale = margin * float(target) / signal
    alpha = scale * beta_hat * np.sign(gain)
    sigma = w[:, selected] @ alpha
    estimated = float(np.sum(alpha * beta_hat * gain))

    true_welfare = alignment = None
    if obs.truth is not None:
        true_welfare = welfare_effect(obs.truth, sigma)
        k = int(np.argmax(np.abs(lam)))
        alignment = float(abs(top_eigenpair(obs.truth.m)[1] @ w[:, k]))
    return InterventionReport(sigma, estimated, int(selected.size), lam_s, scale, true_welfare, alignment)


# ============================================================================
# CERTIFICATION
# ============================================================================

def top_eigengap(m) -> float:
    """Distance from the top-modulus eigenvalue to the rest of the spectrum."""
    lam, _ = _eigh(as_matrix(m).entries)
    k = int(np.argmax(np.abs(lam)))
    rest = np.delete(lam, k)
    return float(np.min(np.abs(lam[k] - rest))) if rest.size else float("inf")


def davis_kahan_bound(noise_norm: float, gap: float) -> float:
    """sin(theta) <= ||E|| / (gap - ||E||); 1 when the gap does not beat the noise."""
    if gap <= noise_norm:
        return 1.0
    return min(1.0, noise_norm / (gap - noise_norm))


def certify(scenario: MarketScenario, tau: float = None, target: float = 1.0, replicates: int = 200,
            epsilon: float = 0.05, threads: int = None, margin: float = None) -> CertificationResult:
    """
    Monte Carlo check that the robust design reaches `target` in true
    surplus with probability at least 1 - epsilon. A replicate where no
    structure is recoverable counts as a failure.
    """
    if int(replicates) < 1:
        raise InvalidInputError("replicates must be at least 1")
    if not 0.0 <= float(epsilon) < 1.0:
        raise InvalidInputError("epsilon must lie in [0, 1)")
    gap = top_eigengap(scenario.m)

    def one(r: int) -> dict:
        obs = observe(scenario, r)
        bound = davis_kahan_bound(obs.noise_norm, gap)
        try:
            report = design_intervention(obs, tau, target, margin)
        except NoRecoverableStructureError:
            return {"replicate": r, "true_welfare": None, "alignment": None,
                    "noise_norm": obs.noise_norm, "bound": bound, "success": False}
        return {
            "replicate": r,
            "true_welfare": report.true_welfare,
            "alignment": report.alignment,
            "noise_norm": obs.noise_norm,
            "bound": bound,
            "success": report.true_welfare >= float(target),
        }

    rows = parallel_map(one, range(int(replicates)), threads)
    alignments = [row["alignment"] for row in rows if row["alignment"] is not None]
    success_rate = sum(row["success"] for row in rows) / len(rows)
    mean_alignment = float(np.mean(alignments)) if alignments else 0.0
    bound = max(row["bound"] for row in rows)
    return CertificationResult(
        success_rate, mean_alignment, bound, gap, int(replicates), float(epsilon), rows
    )


# ============================================================================
# THE BLOCK MARKET
# ============================================================================

def block_example(n: int = 300, q0_scale: float = None, noise_sd: float = 1.0,
                  seed: int = None) -> MarketScenario:
    """
    Three product groups of n/3 goods: M = C kron J_{n/3} with the 3x3 cross
    pattern C, and q0 = q0_scale * (w1 + 0.1 u) where w1 is the top-modulus
    eigenvector and u the unit uniform vector.
    """
    n = int(n)
    if n < 3 or n % 3:
        raise InvalidInputError(f"block size n must be a positive multiple of 3, got {n}")
    q0_scale = settings.BLOCK_Q0_SCALE if q0_scale is None else float(q0_scale)
    seed = settings.DEFAULT_SEED if seed is None else int(seed)

    m = np.kron(block_pattern(), np.ones((n // 3, n // 3)))
    np.fill_diagonal(m, -1.0)
    m = SquareMatrix(m)
    _, w1 = top_eigenpair(m)
    u = np.full(n, 1.0 / np.sqrt(n))
    return MarketScenario(m, q0_scale * (w1 + 0.1 * u), noise_sd, seed)
