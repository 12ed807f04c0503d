# orchestrator.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# This is the "traffic controller" between the command line and the
# analysis modules. main.py parses flags and config files into one plain
# dict of parameters per run; the Orchestrator then:
#
#   1. loads the input files the command needs (graphs, games, models,
#      market scenarios)
#   2. calls the right analysis functions
#   3. writes the result as a JSON report envelope or a CSV table (or an
#      SVG for the figure commands) and tells the user where it went
#
# Subcommands:
#   centrality  degree | eigenvector | katz
#   degroot     simulate | consensus | wisdom
#   game        nash | dynamics | keyness | poa
#   goods       classify | essential | improve
#   market      design | certify | block-demo
#   figures     fig1 | fig2 | fig4
#   inspect     (structure and spectrum of a matrix file)
#
# Progress goes to a rich Console; --quiet silences it. The report files
# are the real output and never depend on --threads.
# ============================================================================

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from rich.console import Console
from rich.panel import Panel

from analysis import centrality as centrality_mod
from analysis import degroot
from config import settings
from core.errors import InvalidInputError
from core.matrix_core import (
    SquareMatrix,
    is_irreducible,
    period,
    spectral_radius,
    strongly_connected_components,
)
from core.matrix_io import json_loads, read_matrix
from economics import market_robust, network_game, public_goods
from tools import figures, fixtures
from tools.reports import build_report, write_csv, write_json_report


# ============================================================================
# INPUT HELPERS
# ============================================================================

def _load_document(path) -> dict:
    """Read a JSON or YAML document from disk."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise InvalidInputError(f"{path}: invalid YAML ({exc})") from exc
    return json_loads(text, path)


def parse_vector(value, n: int, name: str) -> np.ndarray:
    """
    A length-n vector from "ones", "zeros", a comma list, a list, or a path
    to a .json list / one-column .csv file.
    """
    if value is None:
        raise InvalidInputError(f"--{name} is required")
    if isinstance(value, (list, tuple)):
        vec = np.asarray(value, dtype=float)
    elif value == "ones":
        vec = np.ones(n)
    elif value == "zeros":
        vec = np.zeros(n)
    elif isinstance(value, str) and Path(value).suffix.lower() in (".json", ".csv") and Path(value).exists():
        path = Path(value)
        if path.suffix.lower() == ".json":
            vec = np.asarray(json_loads(path.read_text(encoding="utf-8"), path), dtype=float)
        else:
            vec = np.loadtxt(path, delimiter=",", dtype=float, ndmin=1)
    else:
        try:
            vec = np.array([float(part) for part in str(value).split(",")])
        except ValueError as exc:
            raise InvalidInputError(f"--{name}: cannot read {value!r} as numbers") from exc
    if vec.ndim == 1 and vec.shape[0] != n:
        raise InvalidInputError(f"--{name} has length {vec.shape[0]}, expected {n}")
    return vec


def _sizes(value) -> list:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(v) for v in str(value).split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"--sizes: cannot read {value!r}") from exc


def _require(params: dict, key: str):
    if params.get(key) is None:
        raise InvalidInputError(f"--{key.replace('_', '-')} is required for this command")
    return params[key]


@dataclass
class CommandResult:
    command: str
    report: dict
    outputs: list = field(default_factory=list)


# ============================================================================
# THE ORCHESTRATOR
# ============================================================================

class Orchestrator:
    """
    Runs one subcommand end to end: load inputs, analyse, write outputs.

    Args:
        out:     Output file (has a suffix) or directory (no suffix).
        fmt:     "json" or "csv".
        threads: Worker threads for replicate loops.
        quiet:   Suppress the progress console.
        seed_explicit: The seed came from a flag or config, so it also
                 replaces the seed stored in a scenario file.
    """

    def __init__(self, out=None, fmt: str = "json", threads: int = None, quiet: bool = False,
                 seed_explicit: bool = False):
        self.out = Path(out) if out else settings.DEFAULT_OUTPUT_DIR
        self.fmt = fmt
        self.threads = threads
        self.seed_explicit = seed_explicit
        self.console = Console(quiet=quiet)
        if fmt not in ("json", "csv"):
            raise InvalidInputError(f"--format must be json or csv, got {fmt!r}")

    def route(self, command: str, action: str, params: dict) -> CommandResult:
        """Look up the handler for `command action` and run it."""
        handlers = {
            "centrality": self.run_centrality,
            "degroot": self.run_degroot,
            "game": self.run_game,
            "goods": self.run_goods,
            "market": self.run_market,
            "figures": self.run_figures,
            "inspect": self.run_inspect,
        }
        if command not in handlers:
            raise InvalidInputError(f"unknown command {command!r}")
        label = f"{command} {action}".strip()
        self.console.print(Panel(f"[bold]{label}[/bold]", title="spectral-econ", border_style="blue"))
        return handlers[command](action, params)

    # ── OUTPUT ─────────────────────────────────────────────────────────

    def _target(self, stem: str, suffix: str) -> Path:
        if self.out.suffix:
            return self.out
        return self.out / f"{stem}{suffix}"

    def _emit(self, command: str, action: str, params: dict, result, table=None) -> CommandResult:
        """
        Write the report. `table` is (header, rows) for --format csv; commands
        without a natural table always write JSON.
        """
        stem = f"{command}-{action}" if action else command
        report = build_report(f"{command}.{action}" if action else command,
                              f"{command} {action}".strip(), params, result)
        if self.fmt == "csv" and table is not None:
            path = write_csv(table[0], table[1], self._target(stem, ".csv"))
        else:
            path = write_json_report(report, self._target(stem, ".json"))
        self.console.print(f"[green]OK - Report written to {path}[/green]")
        return CommandResult(stem, report, [path])

    def _step(self, message: str):
        self.console.print(f"\n[bold cyan]{message}[/bold cyan]")

    # ── CENTRALITY ─────────────────────────────────────────────────────

    def _graph(self, params: dict) -> SquareMatrix:
        source = params.get("graph")
        if source in (None, "fig1", "seven-node"):
            self.console.print("   [dim]Using the built-in seven-node graph[/dim]")
            return fixtures.seven_node_graph()
        return read_matrix(source)

    def run_centrality(self, action: str, params: dict) -> CommandResult:
        self._step("Step 1/2: Loading graph")
        m = self._graph(params)
        self.console.print(f"   n = {m.n}")

        self._step(f"Step 2/2: Computing {action} centrality")
        if action == "degree":
            result = centrality_mod.degree_centrality(m, params.get("direction", "out"))
        elif action == "eigenvector":
            result = centrality_mod.eigenvector_centrality(m)
        elif action == "katz":
            delta = float(_require(params, "delta"))
            z = parse_vector(params.get("z", "ones"), m.n, "z")
            result = centrality_mod.katz_bonacich(m, delta, z, params.get("orientation", "left"))
        else:
            raise InvalidInputError(f"unknown centrality kind {action!r}")
        top = ", ".join(sorted(result.argmax_set()))
        self.console.print(f"[green]OK - Highest score at node(s) {top}[/green]")
        return self._emit("centrality", action, params, result.to_dict(),
                          (["node", "score"], result.to_rows()))

    # ── DEGROOT ────────────────────────────────────────────────────────

    def _listening(self, params: dict) -> degroot.StochasticMatrix:
        m = read_matrix(_require(params, "matrix"))
        if params.get("normalize"):
            return degroot.StochasticMatrix.from_weights(m.entries, m.labels)
        return degroot.StochasticMatrix(m)

    def run_degroot(self, action: str, params: dict) -> CommandResult:
        if action == "wisdom" and params.get("family"):
            return self._wisdom_trend(params)

        self._step("Step 1/2: Loading listening matrix")
        m = self._listening(params)

        if action == "simulate":
            self._step("Step 2/2: Iterating x(t+1) = M x(t)")
            x0 = parse_vector(_require(params, "x0"), m.n, "x0")
            traj = degroot.simulate(m, x0, params.get("t_max"), params.get("tol"), params.get("stride"))
            status = "consensus reached" if traj.converged else "no consensus within t_max"
            self.console.print(f"[green]OK - {status} after {traj.steps} steps[/green]")
            result = {
                "converged": traj.converged,
                "steps": traj.steps,
                "consensus": traj.consensus,
                "final": traj.final,
                "range": degroot.opinion_range(traj)[-1],
            }
            return self._emit("degroot", action, params, result,
                              (["t", "node", "dim", "value"], degroot.trajectory_rows(traj)))

        if action == "consensus":
            self._step("Step 2/2: Predicting the consensus from influence weights")
            x0 = parse_vector(_require(params, "x0"), m.n, "x0")
            weights = degroot.influence_weights(m)
            value = degroot.consensus_value(m, x0)
            self.console.print(f"[green]OK - Consensus {np.round(value, 6).tolist()}[/green]")
            result = {"consensus": value, "influence": dict(weights.to_rows())}
            return self._emit("degroot", action, params, result, (["node", "influence"], weights.to_rows()))

        if action == "wisdom":
            self._step("Step 2/2: Running the crowd-wisdom experiment")
            outcome = degroot.crowd_wisdom_experiment(
                m, float(params.get("mu", 0.0)), float(params.get("noise_sd", 1.0)),
                int(params.get("replicates", 1000)), int(params["seed"]), self.threads,
            )
            self.console.print(
                f"[green]OK - consensus sd {outcome.consensus_sd:.4g} "
                f"(exact {outcome.theoretical_sd:.4g})[/green]"
            )
            return self._emit("degroot", action, params, outcome)
        raise InvalidInputError(f"unknown degroot action {action!r}")

    def _wisdom_trend(self, params: dict) -> CommandResult:
        family = params["family"]
        sizes = _sizes(params.get("sizes", "10,20,40,80,160"))
        self._step(f"Step 1/1: Largest influence along the {family} sequence")
        if family == "uniform":
            seq = degroot.uniform_sequence(sizes)
        elif family == "celebrity":
            seq = degroot.celebrity_sequence(sizes, float(params.get("weight", 0.5)))
        elif family in ("erdos-renyi", "erdos_renyi"):
            seq = degroot.erdos_renyi_sequence(sizes, float(params.get("p_factor", 3.0)), int(params["seed"]))
        else:
            raise InvalidInputError(f"unknown sequence family {family!r}")
        trend = degroot.wisdom_trend(seq)
        self.console.print(f"[green]OK - max influence {trend[0][1]:.4g} -> {trend[-1][1]:.4g}[/green]")
        result = {"family": family, "description": seq.description, "trend": trend}
        return self._emit("degroot", "wisdom", params, result, (["n", "max_influence"], trend))

    # ── NETWORK GAME ───────────────────────────────────────────────────

    def run_game(self, action: str, params: dict) -> CommandResult:
        self._step("Step 1/2: Loading and normalizing the game")
        spec = network_game.GameSpec.from_dict(_load_document(_require(params, "model")))
        ng = network_game.normalize(spec)
        self.console.print(f"   n = {ng.n}, rho(M) = {ng.rho:.6g}")

        if action == "nash":
            self._step("Step 2/2: Solving for the equilibrium")
            report = network_game.equilibrium_report(ng)
            for note in report.notes:
                self.console.print(f"   [yellow]{note}[/yellow]")
            self.console.print(f"[green]OK - total effort {report.x_star.sum():.6g}[/green]")
            rows = [(i + 1, report.x_star[i], report.keyness[i]) for i in range(ng.n)]
            return self._emit("game", action, params, report, (["node", "x_star", "keyness"], rows))

        if action == "dynamics":
            self._step("Step 2/2: Iterating best responses")
            x0 = parse_vector(params.get("x0", "zeros"), ng.n, "x0")
            traj = network_game.best_response_dynamics(
                ng, x0, int(params.get("t_max", 10_000)), float(params.get("tol", 1e-12))
            )
            if traj.diverged:
                self.console.print(f"   [yellow]Diverging: flagged at step {traj.diverged_at}[/yellow]")
            result = {
                "converged": traj.converged,
                "diverged": traj.diverged,
                "diverged_at": traj.diverged_at,
                "steps": traj.steps,
                "final": traj.final,
            }
            rows = [(t, i + 1, x[i]) for t, x in enumerate(traj.states) for i in range(ng.n)]
            return self._emit("game", action, params, result, (["t", "node", "value"], rows))

        if action == "keyness":
            self._step("Step 2/2: Computing keyness")
            kappa = network_game.keyness(ng)
            self.console.print(f"[green]OK - key player: node {int(np.argmax(kappa)) + 1}[/green]")
            rows = [(i + 1, kappa[i]) for i in range(ng.n)]
            return self._emit("game", action, params, {"keyness": kappa}, (["node", "keyness"], rows))

        if action == "poa":
            mode = params.get("mode", "closed_form")
            self._step(f"Step 2/2: Price of anarchy ({mode})")
            poa = network_game.price_of_anarchy(
                ng, mode, params.get("convention", "welfare"), int(params["seed"]),
                self.threads, params.get("starts"),
            )
            if poa.note:
                self.console.print(f"   [yellow]{poa.note}[/yellow]")
            self.console.print(f"[green]OK - PoA = {poa.value:.6g} (closed form {poa.closed_form:.6g})[/green]")
            return self._emit("game", action, params, poa)
        raise InvalidInputError(f"unknown game action {action!r}")

    # ── PUBLIC GOODS ───────────────────────────────────────────────────

    def run_goods(self, action: str, params: dict) -> CommandResult:
        self._step("Step 1/2: Loading the utility model")
        source = params.get("model")
        if source in (None, "fig2", "four-agent"):
            self.console.print("   [dim]Using the built-in four-agent benefits matrix[/dim]")
            u = public_goods.linear_benefit_family(fixtures.four_agent_benefits())
        else:
            u = public_goods.utility_model_from_dict(_load_document(source))
        x = parse_vector(params.get("x", "zeros"), u.n, "x")

        if action == "classify":
            self._step("Step 2/2: Comparing rho(B(x)) with 1")
            verdict = public_goods.pareto_classify(u, x, params.get("tol"))
            self.console.print(f"[green]OK - rho = {verdict.rho:.6g}: {verdict.classification}[/green]")
            return self._emit("goods", action, params, verdict)

        if action == "essential":
            self._step("Step 2/2: Removing one agent at a time")
            report = public_goods.essential_agents(u, self.threads)
            if report.note:
                self.console.print(f"   [yellow]{report.note}[/yellow]")
            named = ", ".join(str(i + 1) for i in report.essential) or "none"
            self.console.print(f"[green]OK - essential agents: {named}[/green]")
            result = {
                "rho": report.rho,
                "cooperation_possible": report.cooperation_possible,
                "essential": [i + 1 for i in report.essential],
                "agents": [
                    {"agent": a.agent + 1, "rho_without": a.rho_without, "essential": a.essential}
                    for a in report.agents
                ],
            }
            rows = [(a.agent + 1, a.rho_without, a.essential) for a in report.agents]
            return self._emit("goods", action, params, result, (["agent", "rho_without", "essential"], rows))

        if action == "improve":
            self._step("Step 2/2: Checking the improvement direction")
            verdict = public_goods.pareto_classify(u, x, params.get("tol"))
            result = {"verdict": verdict}
            if verdict.direction is not None:
                check = public_goods.verify_improvement(u, x, verdict.direction, float(params.get("eta", 1e-6)))
                result["check"] = check
                ok = "every agent gains" if check.is_improvement else "some agent loses"
                self.console.print(f"[green]OK - {verdict.classification}: {ok}[/green]")
            else:
                result["stationarity"] = public_goods.planner_stationarity(u, x, verdict.weights)
                self.console.print("[green]OK - x is efficient; Pareto weights reported[/green]")
            if params.get("ray") is not None:
                point = public_goods.find_efficient_point(u, parse_vector(params["ray"], u.n, "ray"))
                result["efficient_point"] = point
                self.console.print(f"   efficient point on the ray at s = {point.s:.6g}")
            return self._emit("goods", action, params, result)
        raise InvalidInputError(f"unknown goods action {action!r}")

    # ── MARKET ─────────────────────────────────────────────────────────

    def _scenario(self, params: dict) -> market_robust.MarketScenario:
        source = params.get("scenario")
        if source is None:
            scenario = market_robust.block_example(
                int(params.get("n", 300)), params.get("q0_scale"), float(params.get("noise_sd", 1.0)),
                int(params["seed"]),
            )
        else:
            scenario = market_robust.MarketScenario.from_dict(_load_document(source))
            if self.seed_explicit:
                scenario = market_robust.MarketScenario(
                    scenario.m, scenario.q0, scenario.noise_sd, int(params["seed"])
                )
        return scenario

    def run_market(self, action: str, params: dict) -> CommandResult:
        self._step("Step 1/2: Building the market scenario")
        scenario = self._scenario(params)
        top, _ = market_robust.top_eigenpair(scenario.m)
        self.console.print(f"   n = {scenario.n}, top eigenvalue {top:.6g}, noise sd {scenario.noise_sd:g}")
        tau = params.get("tau")
        target = float(params.get("target", 1.0))
        margin = params.get("margin")

        if action == "design":
            self._step("Step 2/2: Designing from one noisy observation")
            obs = market_robust.observe(scenario, int(params.get("replicate", 0)))
            report = market_robust.design_intervention(obs, tau, target, margin)
            self.console.print(
                f"[green]OK - estimated {report.estimated_welfare:.6g}, "
                f"true {report.true_welfare:.6g}, alignment {report.alignment:.4f}[/green]"
            )
            rows = [(i + 1, report.sigma[i]) for i in range(scenario.n)]
            return self._emit("market", action, params, report, (["good", "sigma"], rows))

        if action in ("certify", "block-demo"):
            replicates = int(params.get("replicates", 200))
            self._step(f"Step 2/2: Certifying over {replicates} replicates")
            outcome = market_robust.certify(
                scenario, tau, target, replicates, float(params.get("epsilon", 0.05)), self.threads, margin
            )
            alignments = [r["alignment"] for r in outcome.rows if r["alignment"] is not None]
            result = {
                "success_rate": outcome.success_rate,
                "mean_alignment": outcome.mean_alignment,
                "min_alignment": min(alignments) if alignments else None,
                "davis_kahan_bound": outcome.davis_kahan_bound,
                "eigengap": outcome.eigengap,
                "top_eigenvalue": top,
                "certified": outcome.certified,
                "replicates": outcome.rows,
            }
            verdict = "certified" if outcome.certified else "NOT certified"
            color = "green" if outcome.certified else "yellow"
            self.console.print(
                f"[{color}]OK - success {outcome.success_rate:.3f}, mean alignment "
                f"{outcome.mean_alignment:.4f}: {verdict}[/{color}]"
            )
            header = ["replicate", "true_welfare", "alignment", "noise_norm", "bound", "success"]
            rows = [[r[k] for k in header] for r in outcome.rows]
            return self._emit("market", action, params, result, (header, rows))
        raise InvalidInputError(f"unknown market action {action!r}")

    # ── FIGURES ────────────────────────────────────────────────────────

    def run_figures(self, action: str, params: dict) -> CommandResult:
        target = self._target(f"figure-{action}", ".svg")
        if action == "fig1":
            self._step("Step 1/2: Scoring the graph")
            m = self._graph(params)
            kind = params.get("centrality", "degree")
            scores = centrality_mod.centrality(
                m, kind, params.get("delta"), None, params.get("direction", "undirected")
            ).scores
            positions = fixtures.SEVEN_NODE_POSITIONS if params.get("graph") in (None, "fig1", "seven-node") else None
            self._step("Step 2/2: Drawing")
            drawn = figures.render_fig1(m, scores, target, positions, title=f"{kind} centrality")
        elif action == "fig2":
            self._step("Step 1/2: Loading the benefits matrix")
            source = params.get("model")
            if source in (None, "fig2", "four-agent"):
                b, positions = fixtures.four_agent_benefits(), fixtures.FOUR_AGENT_POSITIONS
            else:
                u = public_goods.utility_model_from_dict(_load_document(source))
                b, positions = public_goods.benefits_matrix(u, np.zeros(u.n)).b, None
            self._step("Step 2/2: Drawing")
            drawn = figures.render_fig2(b, target, positions, title="benefits matrix B(0)")
        elif action == "fig4":
            self._step("Step 1/2: Observing the market")
            scenario = self._scenario(params)
            obs = market_robust.observe(scenario, int(params.get("replicate", 0)))
            self._step("Step 2/2: Drawing")
            drawn = figures.render_fig4(scenario.m, obs.m_hat, target)
            self.console.print(f"   top-space distance {drawn.data['top_space_distance']:.4f}")
        else:
            raise InvalidInputError(f"unknown figure {action!r}")
        self.console.print(f"[green]OK - Figure written to {drawn.path}[/green]")
        summary = {k: v for k, v in drawn.data.items() if k != "panels"}
        report = build_report(f"figures.{action}", f"figures {action}", params,
                              {"path": drawn.path, **summary})
        return CommandResult(f"figures-{action}", report, [drawn.path])

    # ── INSPECT ────────────────────────────────────────────────────────

    def run_inspect(self, action: str, params: dict) -> CommandResult:
        self._step("Step 1/1: Inspecting matrix")
        m = read_matrix(_require(params, "matrix"))
        result = {
            "n": m.n,
            "nonnegative": m.is_nonnegative(),
            "symmetric": m.is_symmetric(),
            "spectral_radius": spectral_radius(m, cross_check=False),
        }
        if m.is_nonnegative():
            result["irreducible"] = is_irreducible(m)
            result["components"] = [[i + 1 for i in c] for c in strongly_connected_components(m)]
            if result["irreducible"]:
                result["period"] = period(m)
        for key, value in result.items():
            self.console.print(f"   {key}: {value}")
        return self._emit("inspect", "", params, result)


def load_config(path) -> dict:
    """Read an experiment config; the "kind" key names the subcommand."""
    document = _load_document(path)
    if not isinstance(document, dict) or "kind" not in document:
        raise InvalidInputError(f'{path}: a config must be an object with a "kind" key')
    return document
