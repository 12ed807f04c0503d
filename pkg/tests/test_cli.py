# tests/test_cli.py
#
# End-to-end tests for the command line: main.run() is called with an argv
# list and every report lands in pytest's tmp_path. These test the wiring
# between argument parsing, config files, the Orchestrator and exit codes.

import csv
import json
import sys
from pathlib import Path
from unittest.mock import patch

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from main import resolve, run
from tools.reports import read_report


DATA = Path(__file__).parent.parent / "data"


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


# ============================================================================
# SUCCESSFUL RUNS
# ============================================================================

class TestCommands:

    def test_katz_csv_on_seven_node_graph(self, tmp_path):
        out = tmp_path / "katz.csv"
        code = run(["centrality", "katz", "--delta", "0.3333333", "--z", "ones",
                    "--graph", str(DATA / "fig1.tsv"), "--out", str(out), "--quiet"])
        assert code == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        scores = {row["node"]: float(row["score"]) for row in rows}
        assert len(scores) == 7
        assert scores["3"] == pytest.approx(max(scores.values()))
        assert scores["3"] == pytest.approx(21 / 4, rel=1e-5)

    def test_goods_essential_on_sample_model(self, tmp_path):
        out = tmp_path / "essential.json"
        code = run(["goods", "essential", "--model", str(DATA / "fig2.json"), "--out", str(out), "--quiet"])
        assert code == 0
        result = read_report(out)["result"]
        assert result["essential"] == [4]
        assert result["cooperation_possible"] is True

    def test_poa_as_printed_on_ring(self, tmp_path):
        out = tmp_path / "poa.json"
        code = run(["game", "poa", "--model", str(DATA / "game_ring.json"),
                    "--convention", "as_printed", "--out", str(out), "--quiet"])
        assert code == 0
        assert read_report(out)["result"]["value"] == pytest.approx(2.25)

    def test_degroot_consensus(self, tmp_path):
        out = tmp_path / "consensus.json"
        code = run(["degroot", "consensus", "--matrix", str(DATA / "listening.json"),
                    "--x0", "1,0,0", "--out", str(out), "--quiet"])
        assert code == 0
        assert read_report(out)["result"]["consensus"] == pytest.approx([0.25])

    def test_wisdom_celebrity_weight_flag(self, tmp_path):
        out = tmp_path / "wisdom.json"
        code = run(["degroot", "wisdom", "--family", "celebrity", "--sizes", "10,40",
                    "--weight", "0.8", "--out", str(out), "--quiet"])
        assert code == 0
        trend = read_report(out)["result"]["trend"]
        assert [n for n, _ in trend] == [10, 40]
        assert [m for _, m in trend] == pytest.approx([0.8 + 0.2 / 10, 0.8 + 0.2 / 40])

    def test_wisdom_p_factor_flag(self, tmp_path):
        # p = min(1, p_factor log(n) / n) = 1: the complete graph, uniform influence
        out = tmp_path / "wisdom.json"
        code = run(["degroot", "wisdom", "--family", "erdos-renyi", "--sizes", "10",
                    "--p-factor", "100", "--out", str(out), "--quiet"])
        assert code == 0
        result = read_report(out)["result"]
        assert result["trend"][0][1] == pytest.approx(0.1)
        assert "p=100.0" in result["description"]

    def test_inspect(self, tmp_path):
        out = tmp_path / "inspect.json"
        assert run(["inspect", "--matrix", str(DATA / "fig1.tsv"), "--out", str(out), "--quiet"]) == 0
        result = read_report(out)["result"]
        assert result["n"] == 7
        assert result["symmetric"] is True
        assert result["irreducible"] is True
        assert result["period"] == 1

    def test_figure_written_to_directory(self, tmp_path):
        assert run(["figures", "fig1", "--out", str(tmp_path), "--quiet"]) == 0
        assert (tmp_path / "figure-fig1.svg").exists()

    def test_negative_equilibrium_warns_but_succeeds(self, tmp_path):
        model = _write(tmp_path / "game.json", json.dumps(
            {"gamma": [1.0, 1.0], "beta": [1.0, 0.1], "g": [[0.0, -0.9], [-0.9, 0.0]]}
        ))
        assert run(["game", "nash", "--model", str(model), "--out", str(tmp_path / "n.json"), "--quiet"]) == 0

    def test_report_bytes_do_not_depend_on_threads(self, tmp_path):
        outputs = []
        for threads in ("1", "3"):
            out = tmp_path / f"certify-{threads}.json"
            code = run(["market", "certify", "--n", "30", "--noise-sd", "0.5", "--replicates", "8",
                        "--seed", "3", "--threads", threads, "--out", str(out), "--quiet"])
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]


# ============================================================================
# EXIT CODES
# ============================================================================

class TestExitCodes:

    def test_help(self):
        assert run(["--help"]) == 0

    def test_poa_help_names_the_convention(self, capsys):
        assert run(["game", "poa", "--help"]) == 0
        text = " ".join(capsys.readouterr().out.split())
        assert "welfare (default): ratio of summed utilities" in text
        assert "as_printed: ratio of squared effort norms" in text

    def test_no_command(self):
        assert run([]) == 2

    def test_unknown_flag(self):
        assert run(["centrality", "katz", "--bogus", "1"]) == 2

    def test_missing_file(self, tmp_path):
        assert run(["inspect", "--matrix", str(tmp_path / "absent.csv"), "--quiet"]) == 2

    @pytest.mark.parametrize("n", ['"abc"', "2.7"])
    def test_bad_matrix_count_is_invalid_input(self, tmp_path, n):
        matrix = _write(tmp_path / "m.json", f'{{"n": {n}, "entries": [[0.0, 1.0], [1.0, 0.0]]}}')
        assert run(["inspect", "--matrix", str(matrix), "--out", str(tmp_path), "--quiet"]) == 2

    def test_katz_without_delta(self, tmp_path):
        assert run(["centrality", "katz", "--out", str(tmp_path), "--quiet"]) == 2

    def test_reducible_graph_is_a_precondition_failure(self, tmp_path):
        graph = _write(tmp_path / "g.csv", "1,1\n0,1\n")
        assert run(["centrality", "eigenvector", "--graph", str(graph), "--out", str(tmp_path), "--quiet"]) == 3

    def test_exploding_game_is_a_precondition_failure(self, tmp_path):
        model = _write(tmp_path / "game.json", json.dumps(
            {"gamma": [1.0, 1.0], "beta": [1.0, 1.0], "g": [[0.0, 1.0], [1.0, 0.0]]}
        ))
        assert run(["game", "nash", "--model", str(model), "--out", str(tmp_path), "--quiet"]) == 3

    def test_singular_market_is_a_numeric_failure(self, tmp_path):
        scenario = _write(tmp_path / "s.json", json.dumps({"m": {"n": 2, "entries": [[-1.0, 2.0], [2.0, -1.0]]}}))
        assert run(["market", "design", "--scenario", str(scenario), "--out", str(tmp_path), "--quiet"]) == 4

    def test_unexpected_exception_is_a_numeric_failure(self, tmp_path):
        with patch("orchestrator.Orchestrator.route", side_effect=RuntimeError("boom")):
            assert run(["inspect", "--matrix", str(DATA / "fig1.tsv"), "--quiet"]) == 4


# ============================================================================
# CONFIG FILES
# ============================================================================

class TestConfig:

    def test_config_beats_flags(self, tmp_path):
        config = _write(tmp_path / "katz.yaml", (
            "kind: centrality.katz\n"
            "delta: 0.25\n"
            f"graph: {DATA / 'fig1.tsv'}\n"
            "format: json\n"
            "out: katz.json\n"
        ))
        assert run(["centrality", "katz", "--delta", "0.1", "--config", str(config), "--quiet"]) == 0
        report = read_report(tmp_path / "katz.json")
        assert report["params"]["delta"] == 0.25

    def test_flags_beat_defaults(self):
        _, _, params, options = resolve(["game", "poa", "--model", "m.json", "--mode", "empirical"])
        assert params["mode"] == "empirical"
        assert params["convention"] == "welfare"
        assert options["format"] == "json"

    def test_centrality_defaults_to_csv(self):
        _, _, _, options = resolve(["centrality", "degree"])
        assert options["format"] == "csv"

    def test_seed_explicit_flag(self):
        assert resolve(["market", "design", "--seed", "9"])[3]["seed_explicit"]
        assert not resolve(["market", "design"])[3]["seed_explicit"]

    def test_yaml_market_certify(self, tmp_path):
        config = _write(tmp_path / "certify.yaml", (
            "kind: market.certify\n"
            "n: 30\n"
            "noise_sd: 0.1\n"
            "replicates: 5\n"
            "seed: 3\n"
            "out: certify.json\n"
        ))
        assert run(["--config", str(config), "--quiet"]) == 0
        result = read_report(tmp_path / "certify.json")["result"]
        assert result["certified"] is True
        assert result["success_rate"] == 1.0
        assert len(result["replicates"]) == 5

    def test_json_config(self, tmp_path):
        config = _write(tmp_path / "essential.json", json.dumps({
            "kind": "goods.essential",
            "model": str(DATA / "fig2.json"),
            "out": "essential.json",
        }))
        assert run(["--config", str(config), "--quiet"]) == 0
        assert read_report(tmp_path / "essential.json")["result"]["essential"] == [4]

    def test_unknown_key(self, tmp_path):
        config = _write(tmp_path / "bad.yaml", "kind: centrality.katz\ndelta: 0.1\nwobble: 3\n")
        assert run(["--config", str(config), "--quiet"]) == 2

    @pytest.mark.parametrize("line", [
        "delta: abc",
        "delta: [0.1]",
        "delta: true",
        "direction: sideways",
        "seed: 2.5",
        "quiet: maybe",
    ])
    def test_badly_typed_value_is_invalid_input(self, tmp_path, line):
        delta = "" if line.startswith("delta") else "delta: 0.25\n"
        config = _write(tmp_path / "katz.yaml", (
            "kind: centrality.katz\n"
            f"graph: {DATA / 'fig1.tsv'}\n"
            f"{delta}{line}\n"
        ))
        assert run(["--config", str(config), "--out", str(tmp_path), "--quiet"]) == 2

    def test_values_converted_like_flags(self, tmp_path):
        # YAML reads 1e-6 (no decimal point) as a string; the flag type makes it a float
        config = _write(tmp_path / "improve.yaml", "kind: goods.improve\neta: 1e-6\nseed: 4.0\n")
        _, _, params, _ = resolve(["--config", str(config)])
        assert params["eta"] == 1e-6
        assert params["seed"] == 4 and isinstance(params["seed"], int)

    def test_unknown_kind(self, tmp_path):
        config = _write(tmp_path / "bad.yaml", "kind: centrality.pagerank\n")
        assert run(["--config", str(config), "--quiet"]) == 2

    def test_kind_must_match_command(self, tmp_path):
        config = _write(tmp_path / "katz.yaml", "kind: centrality.katz\ndelta: 0.1\n")
        assert run(["game", "nash", "--config", str(config), "--quiet"]) == 2

    def test_missing_kind(self, tmp_path):
        config = _write(tmp_path / "bad.yaml", "delta: 0.1\n")
        assert run(["--config", str(config), "--quiet"]) == 2
