import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ratecode import cli, datagen, io, mcr2, micl, segmentation
from ratecode.errors import InvalidInput, ParseError


def results_of(path):
    return json.loads(path.read_text())["results"]


@pytest.fixture
def blobs(tmp_path):
    X, y = datagen.sample_mixture(datagen.two_blobs(seed=3), 60)
    io.save_matrix(tmp_path / "x.csv", X)
    io.save_labels(tmp_path / "y.csv", y)
    return tmp_path, X, y


class TestMatrixFiles:
    def test_zero_example(self, tmp_path):
        p = tmp_path / "z.csv"
        p.write_text("0,0\n0,0\n")
        np.testing.assert_array_equal(io.load_matrix(p), np.zeros((2, 2)))

    def test_samples_become_columns(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("x,y,z\n1,2,3\n4,5,6\n")
        np.testing.assert_array_equal(io.load_matrix(p, header=True), [[1, 4], [2, 5], [3, 6]])

    def test_bad_cell_location(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3,4\n5,abc\n")
        with pytest.raises(ParseError) as info:
            io.load_matrix(p)
        assert (info.value.row, info.value.column) == (3, 2)
        assert "row 3, column 2" in str(info.value)

    def test_ragged(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(ParseError, match="row 2"):
            io.load_matrix(p)

    @pytest.mark.parametrize("text", ["", "\n\n", "nan,1\n"])
    def test_empty_or_nonfinite(self, tmp_path, text):
        p = tmp_path / "e.csv"
        p.write_text(text)
        with pytest.raises(ParseError):
            io.load_matrix(p)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
                  elements=st.floats(allow_nan=False, allow_infinity=False)))
    def test_roundtrip_exact(self, tmp_path_factory, W):
        p = tmp_path_factory.mktemp("rt") / "w.csv"
        io.save_matrix(p, W)
        np.testing.assert_array_equal(io.load_matrix(p), W)

    def test_labels(self, tmp_path):
        p = tmp_path / "l.csv"
        io.save_labels(p, [0, 2, 1])
        np.testing.assert_array_equal(io.load_labels(p), [0, 2, 1])
        p.write_text("0\n1.5\n")
        with pytest.raises(ParseError, match="row 2"):
            io.load_labels(p)


class TestReports:
    def test_json_floats_roundtrip(self):
        value = 0.1 + 0.2
        text = io.dumps_report({"schema_version": 1, "v": np.float64(value), "a": np.arange(3)})
        data = json.loads(text)
        assert data["v"] == value
        assert data["a"] == [0, 1, 2]

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInput):
            io.dumps_report({"x": float("inf")})


class TestRun:
    def test_gen_deterministic(self, tmp_path):
        for name in ("a", "b"):
            assert cli.main(["gen", "--preset", "two-blobs", "--m", "50", "--seed", "4",
                             "--data-out", str(tmp_path / f"{name}.csv"),
                             "--labels-out", str(tmp_path / f"{name}.y"), "--output", str(tmp_path / f"{name}.json")]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.y").read_bytes() == (tmp_path / "b.y").read_bytes()
        X, y = datagen.sample_mixture(datagen.two_blobs(), 50, seed=4)
        np.testing.assert_array_equal(io.load_matrix(tmp_path / "a.csv"), X)

    def test_segment_matches_library(self, blobs):
        tmp, X, _ = blobs
        out = tmp / "r.json"
        assert cli.main(["segment", "--input", str(tmp / "x.csv"), "--epsilon", "0.05", "--output", str(out)]) == 0
        res = results_of(out)
        lib = segmentation.segment_greedy(X, 0.05)
        assert res["n_groups"] == 2
        assert res["total_length"] == pytest.approx(lib.total_length, abs=1e-6)
        assert res["labels"] == lib.labels().tolist()

    def test_select_eps_plot_data(self, blobs):
        tmp, X, _ = blobs
        out, curve = tmp / "r.json", tmp / "c.csv"
        assert cli.main(["select-eps", "--input", str(tmp / "x.csv"), "--eps-grid", "0.05,0.1,0.5",
                         "--plot-data", str(curve), "--output", str(out)]) == 0
        lib = segmentation.select_distortion(X, [0.05, 0.1, 0.5])
        assert results_of(out)["eps_star"] == lib.eps_star
        rows = curve.read_text().splitlines()
        assert rows[0] == "epsilon,objective" and len(rows) == 4

    def test_classify_matches_library(self, blobs):
        tmp, X, y = blobs
        T = X + 0.01
        io.save_matrix(tmp / "t.csv", T)
        out = tmp / "r.json"
        assert cli.main(["classify", "--input", str(tmp / "x.csv"), "--labels", str(tmp / "y.csv"),
                         "--test", str(tmp / "t.csv"), "--epsilon", "0.3", "--output", str(out)]) == 0
        state = micl.ClassifierState.from_labeled(X, y, 0.3)
        labels, deltas = micl.classify_batch(T, state)
        res = results_of(out)
        assert res["predicted"] == labels.tolist()
        np.testing.assert_allclose(res["delta_L"], deltas, rtol=0, atol=1e-9)

    def test_classify_kernel(self, blobs):
        tmp, X, y = blobs
        out = tmp / "r.json"
        assert cli.main(["classify-kernel", "--kernel", "rbf:0.5", "--input", str(tmp / "x.csv"),
                         "--labels", str(tmp / "y.csv"), "--test", str(tmp / "x.csv"),
                         "--test-labels", str(tmp / "y.csv"), "--epsilon", "0.5", "--output", str(out)]) == 0
        state = micl.ClassifierState.from_labeled(X, y, 0.5)
        labels, _ = micl.classify_batch(X, state, kernel=micl.KernelSpec("rbf", gamma=0.5))
        res = results_of(out)
        assert res["predicted"] == labels.tolist()
        assert res["kernel"] == "rbf:0.5"

    def test_mcr2_eval(self, tmp_path):
        Z, y = datagen.subspace_features(6, 2, 2, 40, seed=2)
        io.save_matrix(tmp_path / "z.csv", Z)
        io.save_labels(tmp_path / "y.csv", y)
        out = tmp_path / "r.json"
        assert cli.main(["mcr2-eval", "--input", str(tmp_path / "z.csv"), "--labels", str(tmp_path / "y.csv"),
                         "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        lib = mcr2.delta_R(Z, mcr2.membership_from_labels(y), 0.5)
        assert report["results"]["deltaR"] == pytest.approx(lib.deltaR, abs=1e-9)
        assert report["checks"]["precision_condition"] is True

    def test_mcr2_train(self, tmp_path):
        out, traj = tmp_path / "r.json", tmp_path / "t.csv"
        assert cli.main(["mcr2-train", "--seed", "0", "--plot-data", str(traj), "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["checks"]["trajectory_non_decreasing"]
        assert report["checks"]["orthogonality_metric"] <= 1e-2
        Z, y = datagen.subspace_features(8, 2, 3, 200, seed=0)
        _, lib = mcr2.optimize_features(Z, mcr2.membership_from_labels(y), 0.5, steps=300, step_size=0.5)
        np.testing.assert_array_equal(report["results"]["trajectory"], lib)

    def test_config_precedence(self, blobs):
        tmp, X, _ = blobs
        cfg = tmp / "cfg.json"
        cfg.write_text(json.dumps({"task": "segment", "input": str(tmp / "x.csv"), "epsilon": 0.5}))
        out = tmp / "r.json"
        assert cli.main(["segment", "--config", str(cfg), "--output", str(out)]) == 0
        assert json.loads(out.read_text())["config"]["epsilon"] == 0.5
        assert cli.main(["segment", "--config", str(cfg), "--epsilon", "0.05", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["config"]["epsilon"] == 0.05

    def test_config_wrong_task(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"task": "classify"}))
        assert cli.main(["segment", "--config", str(cfg)]) == 2

    def test_error_object(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3,4\n5,x\n")
        assert cli.main(["segment", "--input", str(p), "--epsilon", "1"]) == 2
        err = json.loads(capsys.readouterr().err)["error"]
        assert err["type"] == "ParseError" and err["row"] == 3 and err["column"] == 2

    def test_missing_required(self, capsys):
        assert cli.main(["classify", "--epsilon", "1"]) == 2
        assert "InvalidInput" in capsys.readouterr().err

    def test_bad_epsilon(self, blobs, capsys):
        tmp, _, _ = blobs
        assert cli.main(["segment", "--input", str(tmp / "x.csv"), "--epsilon", "-1"]) == 2

    def test_report_reparses(self, blobs):
        tmp, _, _ = blobs
        out = tmp / "r.json"
        cli.main(["segment", "--input", str(tmp / "x.csv"), "--epsilon", "0.05", "--output", str(out)])
        data = io.read_report(out)
        assert set(data) >= {"schema_version", "version", "config", "results", "timings", "checks"}

    def test_run_rejects_unknown_task(self):
        with pytest.raises(InvalidInput):
            cli.run({"task": "nope"})
