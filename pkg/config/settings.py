# config/settings.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# This is the "control panel" for the whole toolkit. Every tolerance,
# default and limit that a numerical routine might want to change lives
# here in one place, instead of being sprinkled as magic numbers through
# ten different modules.
#
# Two values can be overridden from the environment (or a .env file, which
# main.py loads with python-dotenv before anything else is imported):
#   SPECTRAL_ECON_THREADS  → default worker count for --threads
#   SPECTRAL_ECON_SEED     → default seed for every randomized command
# ============================================================================

import os
from pathlib import Path


# ── FILE PATHS ─────────────────────────────────────────────────────────

# settings.py → config/ → project root
PROJECT_ROOT = Path(__file__).parent.parent

# Where the CLI writes reports and figures when --out is not given.
DEFAULT_OUTPUT_DIR = PROJECT_ROOT / "reports"


# ── ENVIRONMENT OVERRIDES ──────────────────────────────────────────────

def _env_int(name: str, default: int) -> int:
    """Read an integer environment variable, falling back on bad values."""
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


# Worker threads for replicate-level parallelism. Results never depend on it.
DEFAULT_THREADS = max(1, _env_int("SPECTRAL_ECON_THREADS", 1))

# Seed used when neither a flag nor a config file provides one.
DEFAULT_SEED = _env_int("SPECTRAL_ECON_SEED", 7)


# ── MATRIX CORE ────────────────────────────────────────────────────────

# Entries at or below this value are not edges of the digraph view.
STRUCTURAL_TOL = 1e-12

# Perron residual budget, scaled by max(1, rho).
PERRON_RESIDUAL_TOL = 1e-10

# Negative Perron-vector entries smaller than this (after normalization)
# are rounding noise and get clipped; anything larger is a numeric failure.
PERRON_POSITIVITY_TOL = 1e-9

# Power iteration cross-check.
POWER_ITERATION_TOL = 1e-12
POWER_ITERATION_MAX_ITER = 100_000

# Relative disagreement allowed between the eigensolver and power iteration.
SPECTRAL_CROSSCHECK_TOL = 1e-6

# Dense-only toolkit: refuse anything bigger.
MAX_DIMENSION = 2000


# ── CENTRALITY ─────────────────────────────────────────────────────────

# Terms used by the brute-force walk-sum oracle.
WALK_SUM_TERMS = 200


# ── DEGROOT ────────────────────────────────────────────────────────────

# Row sums of a stochastic matrix must be 1 within this.
STOCHASTIC_TOL = 1e-12

# Opinion-range tolerance that counts as consensus.
DEGROOT_TOL = 1e-9

# Iteration cap for simulate().
DEGROOT_T_MAX = 100_000

# Keep every k-th state of a trajectory (first and last are always kept).
TRAJECTORY_STRIDE = 1


# ── NETWORK GAME ───────────────────────────────────────────────────────

# Fixed-point residual budget for equilibrium reports, relative to ||x*||.
EQUILIBRIUM_RESIDUAL_TOL = 1e-9

# Best-response dynamics: norm above this multiple of the start is divergence.
DIVERGENCE_GROWTH = 1e6

# ... or this many consecutive growing steps.
DIVERGENCE_WINDOW = 10

# Empirical price-of-anarchy search.
POA_MULTISTARTS = 32
POA_MAX_ITER = 2000
POA_STEP_TOL = 1e-12


# ── PUBLIC GOODS ───────────────────────────────────────────────────────

# Band around rho = 1 that is classified "efficient".
EFFICIENCY_TOL = 1e-6

# Central finite-difference step and acceptance for gradient validation.
GRADIENT_CHECK_STEP = 1e-6
GRADIENT_CHECK_RTOL = 1e-5


# ── MARKET ─────────────────────────────────────────────────────────────

# Eigenvalue threshold = factor * noise_sd * sqrt(n), above the Wigner edge.
MARKET_TAU_FACTOR = 2.5

# The design aims its hatted welfare estimate at margin * target.
MARKET_MARGIN = 2.0

# Minimum of sum beta_hat^2 |lambda/(1-lambda)| over the selected set.
MARKET_SIGNAL_FLOOR = 1e-8

# Distance from 1 below which I - M counts as singular.
MARKET_SINGULAR_TOL = 1e-9

# Multiplier on the default block-example quantities vector.
BLOCK_Q0_SCALE = 10.0


# ── REPORTS ────────────────────────────────────────────────────────────

# Significant digits for every float written to a report.
REPORT_PRECISION = 17
