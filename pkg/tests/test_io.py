import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_theta
from latent_ising import io
from latent_ising.ising import BinaryDataset
from latent_ising.latent import LatentCGModel


class TestJson:
    def test_numpy_and_nonfinite(self):
        text = io.dumps_json({"b": np.float64(1.5), "a": [np.int64(2), math.inf], "c": np.bool_(True)})
        assert text == '{\n  "a": [\n    2,\n    null\n  ],\n  "b": 1.5,\n  "c": true\n}\n'

    def test_roundtrip(self, tmp_path):
        obj = {"x": [1.0, 0.1 + 0.2], "nested": {"k": "v"}}
        io.save_json(tmp_path / "a.json", obj)
        assert io.load_json(tmp_path / "a.json") == obj


class TestCsv:
    def test_format(self):
        assert io.csv_text(["a", "b"], [[1, 0.5], [True, "x"]]) == "a,b\n1,0.5\n1,x\n"

    def test_read(self, tmp_path):
        io.write_csv(tmp_path / "t.csv", ["a"], [[1], [2]])
        assert io.read_csv(tmp_path / "t.csv") == (["a"], [["1"], ["2"]])

    def test_empty(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(ValueError):
            io.read_csv(tmp_path / "e.csv")


class TestMatrices:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10 ** 6), st.sampled_from([".csv", ".json", ".txt"]))
    def test_bit_exact_roundtrip(self, seed, suffix):
        import tempfile
        from pathlib import Path

        m = random_theta(np.random.default_rng(seed), 4, 3.0)
        with tempfile.TemporaryDirectory() as tmp:
            p = Path(tmp) / f"m{suffix}"
            io.save_matrix(p, m)
            back = io.load_matrix(p)
            assert np.array_equal(back, m)
            first = p.read_bytes()
            io.save_matrix(p, back)
            assert p.read_bytes() == first

    def test_asymmetric_rejected(self, tmp_path):
        (tmp_path / "a.csv").write_text("0,1\n0,0\n")
        with pytest.raises(ValueError):
            io.load_matrix(tmp_path / "a.csv")
        assert io.load_matrix(tmp_path / "a.csv", symmetric=False)[0, 1] == 1.0

    def test_ragged(self, tmp_path):
        (tmp_path / "r.csv").write_text("0,1\n0\n")
        with pytest.raises(ValueError):
            io.load_matrix(tmp_path / "r.csv")

    def test_bad_number(self, tmp_path):
        (tmp_path / "b.csv").write_text("0,x\n1,0\n")
        with pytest.raises(ValueError):
            io.load_matrix(tmp_path / "b.csv")

    def test_json_dim_mismatch(self):
        with pytest.raises(ValueError):
            io.matrix_from_json({"dim": 3, "rows": [[0.0]]})


class TestDatasets:
    @pytest.mark.parametrize("suffix", [".txt", ".csv"])
    def test_roundtrip(self, tmp_path, suffix):
        data = BinaryDataset([[0, 1, 1], [1, 0, 0]])
        io.save_dataset(tmp_path / f"d{suffix}", data)
        assert np.array_equal(io.load_dataset(tmp_path / f"d{suffix}").samples, data.samples)

    def test_text_format(self, tmp_path):
        io.save_dataset(tmp_path / "d.txt", BinaryDataset([[0, 1], [1, 1]]))
        assert (tmp_path / "d.txt").read_text() == "01\n11\n"

    def test_bad_symbol(self, tmp_path):
        (tmp_path / "d.txt").write_text("012\n")
        with pytest.raises(ValueError):
            io.load_dataset(tmp_path / "d.txt")


class TestModels:
    def test_roundtrip(self, tmp_path, rng):
        m = LatentCGModel(random_theta(rng, 3), rng.normal(size=(2, 3)), np.diag([1.0, 2.0]))
        io.save_model(tmp_path / "m.json", m)
        back = io.load_model(tmp_path / "m.json")
        for a, b in zip(m.to_dict().values(), back.to_dict().values()):
            assert np.array_equal(a, b)

    def test_missing_key(self):
        with pytest.raises(ValueError):
            io.model_from_json({"S": io.matrix_to_json(np.zeros((2, 2)))})
