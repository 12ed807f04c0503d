# tests/test_figures.py
#
# Tests for the SVG renderers. Each renderer hands back the numbers it drew,
# so the checks look at radii, edge labels and heatmap panels rather than
# parsing SVG.

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from analysis.centrality import degree_centrality, katz_bonacich
from core.errors import InvalidInputError
from economics.market_robust import block_example, observe
from tools import fixtures
from tools.figures import MAX_RADIUS, render_fig1, render_fig2, render_fig4, render_figures


class TestFig1:

    def test_radius_ratio_follows_degree(self, tmp_path, seven_node):
        scores = degree_centrality(seven_node, "undirected").scores
        drawn = render_fig1(seven_node, scores, tmp_path / "fig1.svg", fixtures.SEVEN_NODE_POSITIONS)
        radii = drawn.data["radii"]
        assert radii[2] / radii[0] == pytest.approx(3 / 2)
        assert radii.max() == pytest.approx(MAX_RADIUS)

    def test_writes_svg(self, tmp_path, seven_node):
        scores = katz_bonacich(seven_node, 1 / 3).scores
        drawn = render_fig1(seven_node, scores, tmp_path / "out" / "fig1.svg")
        assert drawn.path.exists()
        assert drawn.path.read_text().lstrip().startswith("<?xml")

    def test_output_is_deterministic(self, tmp_path, seven_node):
        scores = degree_centrality(seven_node, "undirected").scores
        a = render_fig1(seven_node, scores, tmp_path / "a.svg", fixtures.SEVEN_NODE_POSITIONS)
        b = render_fig1(seven_node, scores, tmp_path / "b.svg", fixtures.SEVEN_NODE_POSITIONS)
        assert a.path.read_bytes() == b.path.read_bytes()

    def test_score_count_mismatch(self, tmp_path, seven_node):
        with pytest.raises(InvalidInputError):
            render_fig1(seven_node, np.ones(3), tmp_path / "x.svg")

    def test_missing_position(self, tmp_path, seven_node):
        with pytest.raises(InvalidInputError, match="position"):
            render_fig1(seven_node, np.ones(7), tmp_path / "x.svg", {1: (0.0, 0.0)})


class TestFig2:

    def test_every_arrow_is_labelled(self, tmp_path, four_agent):
        drawn = render_fig2(four_agent, tmp_path / "fig2.svg", fixtures.FOUR_AGENT_POSITIONS)
        labels = drawn.data["edge_labels"]
        assert len(labels) == len(fixtures.FOUR_AGENT_ARROWS)
        assert labels["1->2"] == "5"
        assert labels["3->1"] == "7"
        assert labels["4->3"] == "0.5"


class TestFig4:

    def test_noiseless_panels_match(self, tmp_path):
        scenario = block_example(30, noise_sd=0.0)
        drawn = render_fig4(scenario.m, observe(scenario).m_hat, tmp_path / "fig4.svg")
        panels = drawn.data["panels"]
        assert np.array_equal(panels["a"], panels["c"])
        assert np.array_equal(panels["b"], panels["d"])
        assert drawn.data["top_space_distance"] == 0.0

    def test_block_market_top_space_survives_noise(self, tmp_path):
        scenario = block_example(300, noise_sd=1.0, seed=7)
        drawn = render_fig4(scenario.m, observe(scenario, 0).m_hat, tmp_path / "fig4.svg")
        assert drawn.data["top_space_distance"] <= 0.4

    def test_size_mismatch(self, tmp_path):
        with pytest.raises(InvalidInputError):
            render_fig4(np.eye(2), np.eye(3), tmp_path / "x.svg")


class TestDispatch:

    def test_unknown_figure(self, tmp_path):
        with pytest.raises(InvalidInputError, match="unknown figure"):
            render_figures("fig3", {}, tmp_path / "x.svg")

    def test_missing_inputs(self, tmp_path):
        with pytest.raises(InvalidInputError, match="missing"):
            render_figures("fig4", {"m": np.eye(2)}, tmp_path / "x.svg")

    def test_dispatches_by_name(self, tmp_path, four_agent):
        drawn = render_figures("fig2", {"b": four_agent}, tmp_path / "x.svg")
        assert drawn.kind == "fig2"
