# tools/figures.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Draws the three pictures the command line can produce, always as SVG:
#
#   fig1  node-link diagram, node radius proportional to a centrality score
#   fig2  weighted digraph with the weight written on every arrow
#   fig4  2x2 heatmaps: M, w1 w1^T (top row) against the observed M_hat and
#         w1_hat w1_hat^T (bottom row); blue negative, red positive
#
# Each renderer returns a FigureResult carrying the numbers it drew (radii,
# panels), so tests can check the picture without parsing SVG.
#
# Output is deterministic: the Agg backend, a fixed svg.hashsalt, no date
# in the metadata, and node coordinates that are either given or come from
# networkx's spectral layout (no randomness).
# ============================================================================

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

from core.errors import InvalidInputError  # noqa: E402
from core.matrix_core import SquareMatrix, as_matrix  # noqa: E402


FIGURE_KINDS = ("fig1", "fig2", "fig4")

# Largest node radius in fig1, in data units.
MAX_RADIUS = 0.45


@dataclass(frozen=True, eq=False)
class FigureResult:
    path: Path
    kind: str
    data: dict = field(default_factory=dict)


# ── SHARED ─────────────────────────────────────────────────────────────

def _save(fig, out_path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "spectral-econ", "svg.fonttype": "path"}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


def _positions(m: SquareMatrix, positions) -> dict:
    """Node index -> (x, y). Given positions are keyed by 1-based node number."""
    if positions:
        try:
            return {i: tuple(map(float, positions[i + 1])) for i in range(m.n)}
        except KeyError as exc:
            raise InvalidInputError(f"no position given for node {exc}") from exc
    graph = nx.from_numpy_array(np.abs(m.entries) + np.abs(m.entries.T))
    layout = nx.spectral_layout(graph) if m.n > 2 else nx.circular_layout(graph)
    return {i: tuple(map(float, layout[i])) for i in range(m.n)}


# ── FIGURE 1: CENTRALITY SIZED NODES ───────────────────────────────────

def render_fig1(m, scores, out_path, positions=None, title: str = "") -> FigureResult:
    """Undirected node-link drawing; node i has radius MAX_RADIUS * s_i / max(s)."""
    m = as_matrix(m)
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if scores.shape[0] != m.n:
        raise InvalidInputError(f"need {m.n} scores, got {scores.shape[0]}")
    if np.any(scores < 0) or scores.max() <= 0:
        raise InvalidInputError("scores must be nonnegative with a positive maximum")
    radii = MAX_RADIUS * scores / scores.max()
    pos = _positions(m, positions)

    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(m.n):
        for j in range(i + 1, m.n):
            if m.entries[i, j] > 0 or m.entries[j, i] > 0:
                ax.plot(*zip(pos[i], pos[j]), color="0.4", linewidth=1.2, zorder=1)
    for i in range(m.n):
        ax.add_patch(Circle(pos[i], radii[i], facecolor="#f4a261", edgecolor="black", zorder=2))
        ax.text(*pos[i], f"{scores[i]:.3g}", ha="center", va="center", fontsize=8, zorder=3)
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.margins(0.15)
    ax.axis("off")
    if title:
        ax.set_title(title)
    path = _save(fig, out_path)
    return FigureResult(path, "fig1", {"radii": radii, "scores": scores})


# ── FIGURE 2: WEIGHTED DIGRAPH ─────────────────────────────────────────

def render_fig2(b, out_path, positions=None, title: str = "") -> FigureResult:
    """Arrow i -> j for every positive b_ij, labelled with the weight."""
    b = as_matrix(b)
    graph = b.digraph()
    pos = _positions(b, positions)
    labels = {(i, j): f"{d['weight']:g}" for i, j, d in graph.edges(data=True)}

    fig, ax = plt.subplots(figsize=(5, 5))
    nx.draw_networkx_nodes(graph, pos, ax=ax, node_color="#a8dadc", edgecolors="black")
    nx.draw_networkx_labels(graph, pos, labels={i: b.node_names[i] for i in range(b.n)}, ax=ax)
    nx.draw_networkx_edges(
        graph, pos, ax=ax, arrows=True, arrowsize=14, connectionstyle="arc3,rad=0.12"
    )
    nx.draw_networkx_edge_labels(
        graph, pos, edge_labels=labels, ax=ax, font_size=8, label_pos=0.3
    )
    ax.axis("off")
    if title:
        ax.set_title(title)
    path = _save(fig, out_path)
    return FigureResult(path, "fig2", {"edge_labels": {f"{i + 1}->{j + 1}": w for (i, j), w in labels.items()}})


# ── FIGURE 4: TRUE VS OBSERVED HEATMAPS ────────────────────────────────

def _top_outer(a: np.ndarray) -> np.ndarray:
    lam, w = np.linalg.eigh(0.5 * (a + a.T))
    v = w[:, int(np.argmax(np.abs(lam)))]
    return np.outer(v, v)


def render_fig4(m, m_hat, out_path) -> FigureResult:
    """Panels (a) M, (b) w1 w1^T, (c) M_hat, (d) w1_hat w1_hat^T."""
    m = as_matrix(m).entries
    m_hat = as_matrix(m_hat).entries
    if m.shape != m_hat.shape:
        raise InvalidInputError("true and observed matrices differ in size")
    panels = {"a": m, "b": _top_outer(m), "c": m_hat, "d": _top_outer(m_hat)}
    titles = {"a": "M", "b": "w1 w1^T", "c": "M observed", "d": "w1 w1^T observed"}

    fig, axes = plt.subplots(2, 2, figsize=(8, 8))
    for ax, key in zip(axes.ravel(), "abcd"):
        data = panels[key]
        limit = float(np.max(np.abs(data))) or 1.0
        ax.imshow(data, cmap="bwr", vmin=-limit, vmax=limit, interpolation="nearest")
        ax.set_title(f"({key}) {titles[key]}")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    path = _save(fig, out_path)
    distance = float(np.linalg.norm(panels["d"] - panels["b"]))
    return FigureResult(path, "fig4", {"panels": panels, "top_space_distance": distance})


def render_figures(kind: str, inputs: dict, out_path) -> FigureResult:
    """Dispatch by figure name; `inputs` holds the keyword arguments of the renderer."""
    renderers = {"fig1": render_fig1, "fig2": render_fig2, "fig4": render_fig4}
    if kind not in renderers:
        raise InvalidInputError(f"unknown figure {kind!r}; choose from {FIGURE_KINDS}")
    required = {"fig1": ("m", "scores"), "fig2": ("b",), "fig4": ("m", "m_hat")}[kind]
    missing = [k for k in required if inputs.get(k) is None]
    if missing:
        raise InvalidInputError(f"{kind} is missing inputs {missing}")
    return renderers[kind](out_path=out_path, **inputs)
