import json
import subprocess
import sys

import numpy as np
import pytest

from heatdist import cli
from heatdist.io import read_distances, read_graph, read_labels, read_signals, write_graph, write_signals
from heatdist.graph import build_graph


def run(*argv):
    return cli.main([str(a) for a in argv])


def sidecar(path):
    return json.loads(path.with_suffix(".json").read_text())


class TestFixture:
    def test_writes_example(self, tmp_path):
        assert run("fixture", "--out", tmp_path) == 0
        g = read_graph(tmp_path / "fig1_graph.txt")
        assert (g.n, g.num_edges) == (10, 11)
        x, _ = read_signals(tmp_path / "fig1_signals.csv")
        np.testing.assert_array_equal(x.sum(axis=1), 1.0)
        assert json.loads((tmp_path / "fig1.json").read_text())["edges"] == 11

    def test_idempotent(self, tmp_path):
        run("fixture", "--out", tmp_path)
        first = [(tmp_path / f).read_bytes() for f in ("fig1_graph.txt", "fig1_signals.csv")]
        run("fixture", "--out", tmp_path)
        assert first == [(tmp_path / f).read_bytes() for f in ("fig1_graph.txt", "fig1_signals.csv")]


class TestDistance:
    def test_golden(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run("distance", "--fixture", "fig1", "--metric", "diff", "--output", out) == 0
        d = read_distances(out)
        assert d[1, 2] == pytest.approx(0.418, abs=1e-3)
        assert d[0, 1] == pytest.approx(0.664, abs=1e-3)
        assert d[0, 2] == pytest.approx(0.698, abs=1e-3)
        meta = sidecar(out)
        assert meta["metric"] == "diffusion" and meta["p"] == 2
        assert set(meta["versions"]) == {"heatdist", "numpy", "scipy", "python"}

    def test_quadrature_recorded(self, tmp_path):
        out = tmp_path / "d.csv"
        run("distance", "--fixture", "fig1", "--metric", "sps", "--quad-order", 64, "--p", "inf", "--output", out)
        meta = sidecar(out)
        assert meta["quadrature"] == "gauss-laguerre-64" and meta["p"] == "inf"
        assert meta["flags"]["p"] == "inf"
        run("distance", "--fixture", "fig1", "--metric", "sps", "--output", out)
        assert sidecar(out)["quadrature"] == "graded"

    def test_deterministic(self, tmp_path, rng):
        graph, sig = tmp_path / "g.txt", tmp_path / "s.csv"
        write_graph(graph, build_graph(8, [(i, i + 1, 1.0 + i) for i in range(7)]))
        write_signals(sig, rng.random((6, 8)))
        outs = []
        for threads in (1, 4, 4):
            out = tmp_path / f"d{len(outs)}.csv"
            assert run("distance", "--graph", graph, "--signals", sig, "--metric", "sps",
                       "--threads", threads, "--output", out) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_edgeless_graph_is_input_metric(self, tmp_path, rng):
        graph, sig = tmp_path / "g.txt", tmp_path / "s.csv"
        write_graph(graph, build_graph(5, []))
        write_signals(sig, rng.random((4, 5)))
        run("distance", "--graph", graph, "--signals", sig, "--metric", "diff", "--output", tmp_path / "a.csv")
        run("distance", "--graph", graph, "--signals", sig, "--metric", "input", "--output", tmp_path / "b.csv")
        np.testing.assert_allclose(read_distances(tmp_path / "a.csv"), read_distances(tmp_path / "b.csv"), atol=1e-12)

    def test_dimension_mismatch(self, tmp_path, rng):
        graph, sig = tmp_path / "g.txt", tmp_path / "s.csv"
        write_graph(graph, build_graph(5, [(0, 1)]))
        write_signals(sig, rng.random((3, 4)))
        assert run("distance", "--graph", graph, "--signals", sig, "--output", tmp_path / "d.csv") == cli.EXIT_DIMENSION
        assert not (tmp_path / "d.csv").exists()

    def test_malformed_graph(self, tmp_path):
        (tmp_path / "g.txt").write_text("3 1\n0 0 1\n")
        (tmp_path / "s.csv").write_text("1,0,0\n")
        code = run("distance", "--graph", tmp_path / "g.txt", "--signals", tmp_path / "s.csv",
                   "--output", tmp_path / "d.csv")
        assert code == cli.EXIT_PARSE

    def test_missing_problem(self, tmp_path):
        assert run("distance", "--output", tmp_path / "d.csv") == cli.EXIT_PARSE

    def test_unknown_metric(self, tmp_path):
        assert run("distance", "--fixture", "fig1", "--metric", "cosine", "--output", tmp_path / "d.csv") == 2

    @pytest.mark.parametrize("flags", [["--p", "3"], ["--alpha", "0"], ["--quad-order", "0"], ["--bogus"]])
    def test_usage_errors(self, tmp_path, flags):
        with pytest.raises(SystemExit) as exc:
            run("distance", "--fixture", "fig1", *flags)
        assert exc.value.code == cli.EXIT_PARSE


class TestStability:
    def test_summary(self, tmp_path):
        out = tmp_path / "samples.csv"
        assert run("stability", "--fixture", "fig1", "--reps", 40, "--seed", 3, "--output", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("e_norm,") and len(lines) == 41
        summary = sidecar(out)["summary"]
        assert summary["reps"] == 40
        assert summary["sps_bound_violations"] == 0 and summary["diff_bound_violations"] == 0
        assert summary["max_norm_dev_sps"] < 2 and summary["max_norm_dev_diff"] < 2

    def test_bad_pair(self, tmp_path):
        assert run("stability", "--fixture", "fig1", "--pair", 0, 7, "--output", tmp_path / "s.csv") == 2

    def test_bad_delta(self, tmp_path):
        assert run("stability", "--fixture", "fig1", "--delta", 1.5, "--output", tmp_path / "s.csv") == 2


class TestSynth:
    def test_default(self, tmp_path):
        assert run("synth", "--seed", 5, "--out", tmp_path) == 0
        g = read_graph(tmp_path / "graph.txt")
        clusters = read_labels(tmp_path / "clusters.txt")
        x, _ = read_signals(tmp_path / "signals.csv")
        assert g.n == 27 and np.bincount(clusters).tolist() == [9, 8, 10]
        assert x.shape == (30, 27)
        assert np.bincount(read_labels(tmp_path / "labels.txt")).tolist() == [10, 10, 10]

    def test_tiny_no_signals(self, tmp_path):
        assert run("synth", "--sizes", "1,1", "--bridges", 1, "--per-type", 0, "--out", tmp_path) == 0
        assert read_graph(tmp_path / "graph.txt").edges == [(0, 1, 1.0)]
        x, _ = read_signals(tmp_path / "signals.csv")
        assert x.shape[0] == 0

    def test_disconnected_is_numeric_failure(self, tmp_path):
        code = run("synth", "--sizes", "3,3,3", "--p-intra", "1e-9", "--bridges", 1, "--out", tmp_path)
        assert code == cli.EXIT_NUMERIC
        assert list(tmp_path.iterdir()) == []

    def test_end_to_end_knn(self, tmp_path):
        run("synth", "--seed", 5, "--out", tmp_path)
        for metric in ("input", "diffusion"):
            run("distance", "--graph", tmp_path / "graph.txt", "--signals", tmp_path / "signals.csv",
                "--metric", metric, "--output", tmp_path / f"{metric}.csv")
        out = tmp_path / "knn.json"
        assert run("knn", "--distances", tmp_path / "input.csv", "--distances", tmp_path / "diffusion.csv",
                   "--labels", tmp_path / "labels.txt", "--k", "1,3", "--output", out) == 0
        acc = json.loads(out.read_text())["accuracy"]
        assert acc[str(tmp_path / "diffusion.csv")]["1"] == 1.0
        assert acc[str(tmp_path / "diffusion.csv")]["1"] >= acc[str(tmp_path / "input.csv")]["1"]


class TestKnnMds:
    def test_two_points(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,1\n1,0\n")
        (tmp_path / "l.txt").write_text("0\n1\n")
        out = tmp_path / "knn.json"
        assert run("knn", "--distances", tmp_path / "d.csv", "--labels", tmp_path / "l.txt", "--k", "1",
                   "--output", out) == 0
        assert json.loads(out.read_text())["accuracy"][str(tmp_path / "d.csv")]["1"] == 0.0

    def test_knn_label_mismatch(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,1\n1,0\n")
        (tmp_path / "l.txt").write_text("0\n1\n1\n")
        code = run("knn", "--distances", tmp_path / "d.csv", "--labels", tmp_path / "l.txt",
                   "--output", tmp_path / "k.json")
        assert code == cli.EXIT_DIMENSION

    def test_knn_k_too_large(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,1\n1,0\n")
        (tmp_path / "l.txt").write_text("0\n1\n")
        code = run("knn", "--distances", tmp_path / "d.csv", "--labels", tmp_path / "l.txt",
                   "--output", tmp_path / "k.json")
        assert code == cli.EXIT_PARSE

    def test_mds(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,1,1\n1,0,1\n1,1,0\n")
        (tmp_path / "l.txt").write_text("0\n1\n2\n")
        out = tmp_path / "c.csv"
        assert run("mds", "--distances", tmp_path / "d.csv", "--labels", tmp_path / "l.txt", "--output", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x0,x1,label" and len(lines) == 4

    def test_mds_dim_too_large(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,1\n1,0\n")
        assert run("mds", "--distances", tmp_path / "d.csv", "--dim", 3, "--output", tmp_path / "c.csv") == 2
        assert not (tmp_path / "c.csv").exists()


class TestTransform:
    def test_lattice_mass_and_width(self, tmp_path, rng):
        x = rng.random((3, 784))
        x[1] = 0.0
        write_signals(tmp_path / "s.csv", x, [4, 1, 9])
        out = tmp_path / "t.csv"
        assert run("transform", "--signals", tmp_path / "s.csv", "--labeled", "--lattice", "28x28",
                   "--output", out) == 0
        y, labels = read_signals(out, labeled=True)
        assert y.shape == (3, 784)
        np.testing.assert_allclose(y.sum(axis=1), x.sum(axis=1), atol=1e-9)
        np.testing.assert_array_equal(y[1], 0.0)
        np.testing.assert_array_equal(labels, [4, 1, 9])
        assert sidecar(out)["flags"]["alpha"] == 0.8

    def test_missing_idx(self, tmp_path, capsys):
        code = run("transform", "--idx-images", tmp_path / "nope.idx", "--output", tmp_path / "t.csv")
        assert code == cli.EXIT_PARSE
        assert "IDX" in capsys.readouterr().err

    def test_needs_graph(self, tmp_path):
        write_signals(tmp_path / "s.csv", np.ones((1, 4)))
        assert run("transform", "--signals", tmp_path / "s.csv", "--output", tmp_path / "t.csv") == 2

    def test_lattice_mismatch(self, tmp_path):
        write_signals(tmp_path / "s.csv", np.ones((1, 4)))
        code = run("transform", "--signals", tmp_path / "s.csv", "--lattice", "3x3", "--output", tmp_path / "t.csv")
        assert code == cli.EXIT_DIMENSION


class TestOutputsOnFailure:
    def test_partial_outputs_removed(self, tmp_path, monkeypatch):
        def broken(*args, **kwargs):
            raise OSError("disk full")

        monkeypatch.setattr(cli, "write_signals", broken)
        assert run("fixture", "--out", tmp_path) == cli.EXIT_PARSE
        assert list(tmp_path.iterdir()) == []


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "heatdist", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("heatdist ")
