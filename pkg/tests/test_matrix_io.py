# tests/test_matrix_io.py
#
# Tests for the matrix file formats: dense CSV, 0-based edge-list TSV and
# the lossless JSON object.

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.errors import InvalidInputError
from core.matrix_core import SquareMatrix
from core.matrix_io import (
    parse_dense_csv,
    parse_edge_list,
    parse_json_matrix,
    read_matrix,
    write_matrix,
)
from tools.fixtures import seven_node_graph


class TestReadSamples:

    def test_fig1_edge_list_matches_fixture(self, data_dir):
        m = read_matrix(data_dir / "fig1.tsv")
        assert np.array_equal(m.entries, seven_node_graph().entries)

    def test_fig2_model_matrix(self, data_dir, four_agent):
        document = json.loads((data_dir / "fig2.json").read_text())
        assert np.array_equal(parse_json_matrix(document["g"]).entries, four_agent.entries)


class TestJson:

    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        m = SquareMatrix(rng.normal(size=(5, 5)), labels=list("abcde"))
        path = write_matrix(m, tmp_path / "m.json")
        back = read_matrix(path)
        assert np.array_equal(back.entries, m.entries)
        assert back.labels == m.labels

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidInputError, match="unknown keys"):
            parse_json_matrix({"entries": [[1.0]], "weights": 3})

    def test_n_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            parse_json_matrix({"n": 3, "entries": [[0.0, 1.0], [1.0, 0.0]]})

    @pytest.mark.parametrize("n", ["abc", "1", 2.7, True, None, float("nan")])
    def test_non_integral_n_rejected(self, n):
        with pytest.raises(InvalidInputError, match="whole number"):
            parse_json_matrix({"n": n, "entries": [[0.0, 1.0], [1.0, 0.0]]})

    def test_integral_float_n_accepted(self):
        assert parse_json_matrix({"n": 2.0, "entries": [[0.0, 1.0], [1.0, 0.0]]}).n == 2

    def test_malformed_json_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InvalidInputError, match="invalid JSON"):
            read_matrix(path)


class TestEdgeList:

    def test_parses_header_and_edges(self):
        m = parse_edge_list("n=3\n0\t1\t2.5\n2\t0\t1\n")
        assert m.entries[0, 1] == 2.5
        assert m.entries[2, 0] == 1.0
        assert m.entries.sum() == 3.5

    def test_missing_header(self):
        with pytest.raises(InvalidInputError, match="n=<count>"):
            parse_edge_list("0\t1\t1\n")

    def test_index_out_of_range(self):
        with pytest.raises(InvalidInputError, match="out of range"):
            parse_edge_list("n=2\n0\t2\t1\n")

    def test_round_trip(self, tmp_path, four_agent):
        back = read_matrix(write_matrix(four_agent, tmp_path / "b.tsv"))
        assert np.array_equal(back.entries, four_agent.entries)


class TestDenseCsv:

    def test_parses_rows(self):
        m = parse_dense_csv("0,1\n1,0\n")
        assert m.n == 2

    def test_non_numeric_cell_names_line(self):
        with pytest.raises(InvalidInputError, match=":2:"):
            parse_dense_csv("0,1\n1,x\n", source="m.csv")

    def test_ragged_rows(self):
        with pytest.raises(InvalidInputError):
            parse_dense_csv("0,1\n1\n")

    def test_unknown_extension(self, tmp_path):
        path = tmp_path / "m.xlsx"
        path.write_text("")
        with pytest.raises(InvalidInputError, match="extension"):
            read_matrix(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInputError, match="not found"):
            read_matrix(tmp_path / "absent.csv")
