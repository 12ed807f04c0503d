# main.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# This is the "start button" for the toolkit. It turns a command line (and
# optionally an experiment config file) into one call on the Orchestrator,
# then turns whatever happened into an exit code:
#
#   0  success
#   2  invalid input        (bad file, bad flag, malformed matrix)
#   3  precondition failed  (reducible matrix, rho too large, ...)
#   4  numeric failure      (solver did not converge, singular system)
#
# Where a parameter comes from, strongest first:
#   1. the config file given with --config
#   2. flags on the command line
#   3. the defaults below and in config/settings.py
#
# USAGE:
#   python main.py centrality katz --delta 0.3333333 --z ones --graph data/fig1.tsv
#   python main.py goods essential --model data/fig2.json
#   python main.py market block-demo --n 300 --seed 7
#   python main.py --config data/block_certify.yaml
# ============================================================================

# ── IMPORTS ────────────────────────────────────────────────────────────

import argparse
import sys
import warnings
from pathlib import Path


# ── LOAD ENVIRONMENT VARIABLES ─────────────────────────────────────────

# The .env file may set SPECTRAL_ECON_THREADS / SPECTRAL_ECON_SEED; it has
# to be read before config.settings is imported.
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

from rich.console import Console  # noqa: E402

from config import settings  # noqa: E402
from core.errors import InvalidInputError, exit_code_for  # noqa: E402
from orchestrator import Orchestrator, load_config  # noqa: E402


# ============================================================================
# COMMANDS AND DEFAULTS
# ============================================================================

COMMANDS = {
    "centrality": ("degree", "eigenvector", "katz"),
    "degroot": ("simulate", "consensus", "wisdom"),
    "game": ("nash", "dynamics", "keyness", "poa"),
    "goods": ("classify", "essential", "improve"),
    "market": ("design", "certify", "block-demo"),
    "figures": ("fig1", "fig2", "fig4"),
    "inspect": (),
}

DEFAULTS = {
    "centrality": {"direction": "out", "z": "ones", "orientation": "left"},
    "degroot": {"t_max": settings.DEGROOT_T_MAX, "tol": settings.DEGROOT_TOL,
                "stride": settings.TRAJECTORY_STRIDE, "mu": 0.0, "noise_sd": 1.0, "replicates": 1000},
    "game": {"t_max": 10_000, "tol": 1e-12, "mode": "closed_form", "convention": "welfare"},
    "goods": {"x": "zeros", "eta": 1e-6},
    "market": {"n": 300, "noise_sd": 1.0, "target": 1.0, "replicates": 200, "epsilon": 0.05, "replicate": 0},
    "figures": {"centrality": "degree", "replicate": 0},
    "inspect": {},
}

# Node-score tables read most naturally as CSV; everything else is a report.
DEFAULT_FORMAT = {"centrality": "csv"}

# Keys that go to the Orchestrator itself rather than into the analysis.
RUN_OPTIONS = ("out", "format", "threads", "quiet")

# Config values that name files and resolve against the config's directory.
PATH_KEYS = ("graph", "matrix", "model", "scenario", "out", "x0", "z", "x", "ray")
BUILTIN_INPUTS = ("fig1", "seven-node", "fig2", "four-agent", "ones", "zeros")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting 2 itself."""

    def error(self, message):
        raise InvalidInputError(f"{self.prog}: {message}")


# ============================================================================
# ARGUMENT PARSER
# ============================================================================

def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace, so we can tell which
    # ones the user actually typed.
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help=f"random seed (default {settings.DEFAULT_SEED})")
    common.add_argument("--threads", type=int, help=f"worker threads (default {settings.DEFAULT_THREADS})")
    common.add_argument("--out", help="output file, or a directory for the default file name")
    common.add_argument("--format", choices=("json", "csv"), help="report format")
    common.add_argument("--quiet", action="store_true", help="no progress output")
    common.add_argument("--config", help="JSON or YAML experiment config with a 'kind' key")
    return common


def _command_flags(command: str) -> argparse.ArgumentParser:
    flags = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    add = flags.add_argument
    if command == "centrality":
        add("--graph", help="matrix file (.tsv/.csv/.json); default: the seven-node graph")
        add("--direction", choices=("in", "out", "undirected"))
        add("--delta", type=float)
        add("--z", help='"ones", comma list or vector file')
        add("--orientation", choices=("left", "right"))
    elif command == "degroot":
        add("--matrix", help="listening matrix file")
        add("--normalize", action="store_true", help="row-normalize the weights first")
        add("--x0", help="initial opinions: comma list or vector file")
        add("--t-max", dest="t_max", type=int)
        add("--tol", type=float)
        add("--stride", type=int)
        add("--mu", type=float)
        add("--noise-sd", dest="noise_sd", type=float)
        add("--replicates", type=int)
        add("--family", choices=("uniform", "celebrity", "erdos-renyi"),
            help="growing-society sequence instead of --matrix")
        add("--sizes", help="comma list of society sizes")
        add("--weight", type=float, help="celebrity family: weight everyone puts on the celebrity (default 0.5)")
        add("--p-factor", dest="p_factor", type=float,
            help="erdos-renyi family: edge probability is p_factor * log(n) / n (default 3)")
    elif command == "game":
        add("--model", help="game JSON/YAML with gamma, beta and g")
        add("--x0")
        add("--t-max", dest="t_max", type=int)
        add("--tol", type=float)
        add("--mode", choices=("closed_form", "empirical"))
        add("--convention", choices=("welfare", "as_printed"),
            help="welfare (default): ratio of summed utilities, closed form (1-rho)^2/(1-2 rho); "
                 "as_printed: ratio of squared effort norms, closed form ((1-rho)/(1-2 rho))^2")
        add("--starts", type=int)
    elif command == "goods":
        add("--model", help="utility model JSON/YAML; default: the four-agent example")
        add("--x", help="action profile")
        add("--tol", type=float)
        add("--eta", type=float)
        add("--ray", help="direction along which to find an efficient point")
    elif command == "market":
        add("--scenario", help="scenario JSON/YAML; default: the block example")
        add("--n", type=int)
        add("--q0-scale", dest="q0_scale", type=float)
        add("--noise-sd", dest="noise_sd", type=float)
        add("--tau", type=float)
        add("--target", type=float)
        add("--margin", type=float)
        add("--replicates", type=int)
        add("--epsilon", type=float)
        add("--replicate", type=int)
    elif command == "figures":
        add("--graph")
        add("--centrality", choices=("degree", "eigenvector", "katz"))
        add("--delta", type=float)
        add("--direction", choices=("in", "out", "undirected"))
        add("--model")
        add("--scenario")
        add("--n", type=int)
        add("--q0-scale", dest="q0_scale", type=float)
        add("--noise-sd", dest="noise_sd", type=float)
        add("--replicate", type=int)
    elif command == "inspect":
        add("--matrix", help="matrix file to inspect")
    return flags


def build_parser():
    """
    Returns (parser, allowed) where allowed[(command, action)] maps each
    parameter name that command accepts to its argparse action (used to vet
    and convert config files).
    """
    common = _common_flags()
    parser = _Parser(
        prog="spectral-econ",
        description="Spectral tools for network economics",
        parents=[common],
        argument_default=argparse.SUPPRESS,
    )
    commands = parser.add_subparsers(dest="command")
    allowed = {}
    for command, actions in COMMANDS.items():
        flags = _command_flags(command)
        names = {a.dest: a for a in flags._actions + common._actions if a.dest != "config"}
        if not actions:
            commands.add_parser(command, parents=[common, flags])
            allowed[(command, "")] = names
            continue
        sub = commands.add_parser(command)
        leaves = sub.add_subparsers(dest="action")
        for action in actions:
            leaves.add_parser(action, parents=[common, flags])
            allowed[(command, action)] = names
    return parser, allowed


# ============================================================================
# CONFIG FILES
# ============================================================================

def _resolve_paths(document: dict, base: Path) -> dict:
    resolved = dict(document)
    for key in PATH_KEYS:
        value = resolved.get(key)
        if not isinstance(value, str) or value in BUILTIN_INPUTS:
            continue
        candidate = Path(value)
        if candidate.is_absolute():
            continue
        if key in ("graph", "matrix", "model", "scenario", "out") or (base / candidate).exists():
            resolved[key] = str(base / candidate)
    return resolved


def _convert(key: str, value, flag: argparse.Action):
    """Give a config value the same type and choices check its flag would get."""
    if isinstance(flag, argparse._StoreTrueAction):
        if not isinstance(value, bool):
            raise InvalidInputError(f"config key {key!r} must be true or false, got {value!r}")
        return value
    if flag.type in (int, float):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise InvalidInputError(f"config key {key!r} must be a number, got {value!r}")
        if flag.type is int and isinstance(value, float) and not value.is_integer():
            raise InvalidInputError(f"config key {key!r} must be a whole number, got {value!r}")
        try:
            value = flag.type(value)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"config key {key!r}: {exc}") from exc
    if flag.choices is not None and value not in flag.choices:
        raise InvalidInputError(f"config key {key!r} must be one of {list(flag.choices)}, got {value!r}")
    return value


def config_params(path, allowed: dict):
    """Read a config file into (command, action, params)."""
    document = load_config(path)
    kind = str(document.pop("kind"))
    command, _, action = kind.partition(".")
    if (command, action) not in allowed:
        raise InvalidInputError(f"{path}: unknown kind {kind!r}")
    flags = allowed[(command, action)]
    unknown = set(document) - set(flags)
    if unknown:
        raise InvalidInputError(f"{path}: unknown keys for {kind}: {sorted(unknown)}")
    document = {key: _convert(key, value, flags[key]) for key, value in document.items()}
    return command, action, _resolve_paths(document, Path(path).resolve().parent)


def resolve(argv):
    """
    Parse argv (and --config) into the command to run.

    Returns:
        (command, action, params, options) where options holds out, format,
        threads, quiet and whether the seed was set explicitly.
    """
    parser, allowed = build_parser()
    given = vars(parser.parse_args(argv))
    command = given.pop("command", None)
    action = given.pop("action", None) or ""
    config_path = given.pop("config", None)

    config = {}
    if config_path:
        c_command, c_action, config = config_params(config_path, allowed)
        if command and (command, action) != (c_command, c_action):
            raise InvalidInputError(
                f"--config is for {c_command}.{c_action} but the command line asks for {command} {action}"
            )
        command, action = c_command, c_action
    if not command:
        raise InvalidInputError("no subcommand given (try --help)")
    if COMMANDS[command] and not action:
        raise InvalidInputError(f"{command} needs one of: {', '.join(COMMANDS[command])}")

    params = {**DEFAULTS[command], "seed": settings.DEFAULT_SEED, **given, **config}
    options = {key: params.pop(key) for key in RUN_OPTIONS if key in params}
    options.setdefault("format", DEFAULT_FORMAT.get(command, "json"))
    options.setdefault("threads", settings.DEFAULT_THREADS)
    options["seed_explicit"] = "seed" in given or "seed" in config
    return command, action, params, options


# ============================================================================
# ENTRY POINT
# ============================================================================

def run(argv=None) -> int:
    """Run one command; returns the process exit code instead of exiting."""
    errors = Console(stderr=True)
    try:
        command, action, params, options = resolve(argv)
        orchestrator = Orchestrator(
            options.get("out"), options["format"], options["threads"],
            bool(options.get("quiet", False)), options["seed_explicit"],
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            orchestrator.route(command, action, params)
        for w in caught:
            errors.print(f"[yellow]Warning: {w.message}[/yellow]")
        return 0
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        errors.print(f"[red]Error ({type(exc).__name__}): {exc}[/red]")
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            errors.print(f"[dim]   diagnostics: {diagnostics}[/dim]")
        return exit_code_for(exc)


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
