"""Command-line driver: ``heatdist <subcommand> ...``.

Every subcommand writes CSV files plus a JSON sidecar describing how
they were produced. Exit codes: 0 success, 2 bad input or usage,
3 dimension mismatch, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    canonical_metric,
    classical_mds,
    diffusion_bound,
    knn_loocv,
    pairwise_distances,
    stability_experiment,
    superposition_bound,
)
from .datasets import IdxError, cluster_signals, load_idx_images
from .diffuse import feature_transform, make_operator, quadrature
from .graph import ConnectivityError, GraphError, PerturbationConfig, figure1_graph, lattice_graph, three_cluster_graph
from .io import (
    FormatError,
    read_distances,
    read_graph,
    read_labels,
    read_signals,
    write_coordinates,
    write_distances,
    write_graph,
    write_labels,
    write_samples,
    write_signals,
)
from .linalg import DimensionError, normalize_p

EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_NUMERIC = 4

DIGITS_HELP = (
    "Digit images are read from local IDX files only. Download the\n"
    "handwritten-digit IDX files (e.g. train-images-idx3-ubyte.gz and\n"
    "train-labels-idx1-ubyte.gz) and pass them with --idx-images/--idx-labels."
)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_PARSE):
        super().__init__(message)
        self.code = code


class Outputs:
    """Collects output files; writes go through temp files and are removed on failure."""

    def __init__(self):
        self.written: list[Path] = []

    @contextmanager
    def open(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        os.close(fd)
        try:
            yield tmp
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        self.written.append(path)

    def json(self, path, payload):
        with self.open(path) as tmp:
            with open(tmp, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")

    def discard(self):
        for path in self.written:
            if path.exists():
                path.unlink()


def _p_label(p: float):
    return "inf" if math.isinf(p) else int(p)


def _sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _provenance(args, **extra):
    flags = {k: _jsonable(v) for k, v in vars(args).items() if k != "func"}
    payload = {
        "command": args.command,
        "flags": flags,
        "versions": {
            "heatdist": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    payload.update(extra)
    return payload


def _quad_label(order):
    return "graded" if order is None else f"gauss-laguerre-{order}"


def _load_problem(args):
    """Graph plus signal set from ``--fixture`` or ``--graph/--signals``."""
    if args.fixture:
        g, r, gs, y = figure1_graph()
        return g, np.vstack([r, gs, y]), None
    if not args.graph or not args.signals:
        raise CliError("give --fixture fig1 or both --graph and --signals")
    g = read_graph(args.graph)
    signals, labels = read_signals(args.signals, labeled=args.labeled)
    if signals.shape[1] != g.n:
        raise CliError(f"signals have {signals.shape[1]} entries, graph has {g.n} nodes", EXIT_DIMENSION)
    return g, signals, labels


def cmd_fixture(args, out: Outputs):
    g, r, gs, y = figure1_graph()
    root = Path(args.out)
    with out.open(root / "fig1_graph.txt") as tmp:
        write_graph(tmp, g)
    with out.open(root / "fig1_signals.csv") as tmp:
        write_signals(tmp, np.vstack([r, gs, y]))
    out.json(root / "fig1.json", _provenance(args, signals=["r", "g", "y"], nodes=g.n, edges=g.num_edges))


def cmd_distance(args, out: Outputs):
    g, signals, labels = _load_problem(args)
    metric = canonical_metric(args.metric)
    op = make_operator(g, args.alpha)
    dm = pairwise_distances(op, signals, metric, args.p, quadrature(args.quad_order), args.threads)
    with out.open(args.output) as tmp:
        write_distances(tmp, dm.values)
    out.json(
        _sidecar_path(args.output),
        _provenance(
            args,
            metric=metric,
            p=_p_label(args.p),
            alpha=args.alpha,
            quad_order=args.quad_order,
            quadrature=_quad_label(args.quad_order),
            n_signals=dm.n,
        ),
    )


def cmd_stability(args, out: Outputs):
    g, signals, _ = _load_problem(args)
    i, j = args.pair
    if not (0 <= i < len(signals) and 0 <= j < len(signals)):
        raise CliError(f"--pair indices must lie in [0, {len(signals)})")
    cfg = PerturbationConfig(args.delta, args.seed)
    samples = stability_experiment(
        g, signals[i], signals[j], cfg, args.reps, args.p, args.alpha, quadrature(args.quad_order), args.threads
    )
    with out.open(args.output) as tmp:
        write_samples(tmp, samples)
    gamma = samples[0].gamma
    bounded = [s for s in samples if args.alpha * s.e_norm < 1.0]
    summary = {
        "reps": len(samples),
        "gamma": gamma,
        "max_e_norm": max(s.e_norm for s in samples),
        "max_norm_dev_diff": max(s.norm_dev_diff for s in samples),
        "max_norm_dev_sps": max(s.norm_dev_sps for s in samples),
        "mean_norm_dev_diff": float(np.mean([s.norm_dev_diff for s in samples])),
        "mean_norm_dev_sps": float(np.mean([s.norm_dev_sps for s in samples])),
        "trials_with_small_perturbation": len(bounded),
        "sps_bound_violations": sum(
            s.dev_sps > superposition_bound(gamma, s.e_norm, args.alpha) + 1e-6 for s in bounded
        ),
        "diff_bound_violations": sum(
            s.dev_diff > diffusion_bound(gamma, s.e_norm, args.alpha) + 1e-8 for s in bounded
        ),
    }
    out.json(
        _sidecar_path(args.output),
        _provenance(args, p=_p_label(args.p), quadrature=_quad_label(args.quad_order), summary=summary),
    )


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(tok) for tok in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


def cmd_synth(args, out: Outputs):
    rng = np.random.default_rng(args.seed)
    w_lo, w_hi = args.weights
    g, clusters = three_cluster_graph(args.sizes, args.p_intra, w_lo, w_hi, args.bridges, rng)
    if args.per_type > 0:
        sset = cluster_signals(clusters, args.per_type, rng)
        signals, labels = sset.signals, sset.labels
    else:
        signals, labels = np.zeros((0, g.n)), np.zeros(0, dtype=int)
    root = Path(args.out)
    with out.open(root / "graph.txt") as tmp:
        write_graph(tmp, g)
    with out.open(root / "clusters.txt") as tmp:
        write_labels(tmp, clusters)
    with out.open(root / "signals.csv") as tmp:
        write_signals(tmp, signals)
    with out.open(root / "labels.txt") as tmp:
        write_labels(tmp, labels)
    out.json(root / "synth.json", _provenance(args, nodes=g.n, edges=g.num_edges, signals=len(signals)))


def cmd_knn(args, out: Outputs):
    labels = read_labels(args.labels)
    results = {}
    for path in args.distances:
        d = read_distances(path)
        if d.shape[0] != labels.shape[0]:
            raise CliError(f"{path}: {d.shape[0]} points but {labels.shape[0]} labels", EXIT_DIMENSION)
        per_k = {}
        for k in args.k:
            if not 1 <= k < d.shape[0]:
                raise CliError(f"k={k} outside [1, {d.shape[0] - 1}]")
            rep = knn_loocv(d, labels, k)
            per_k[str(k)] = {
                "accuracy": rep.accuracy,
                "per_class": {str(c): float(a) for c, a in rep.per_class.items()},
                "confusion": rep.confusion.tolist(),
            }
        results[str(path)] = per_k
    table = {str(path): {k: v["accuracy"] for k, v in per_k.items()} for path, per_k in results.items()}
    out.json(args.output, _provenance(args, accuracy=table, details=results))


def cmd_mds(args, out: Outputs):
    d = read_distances(args.distances)
    labels = read_labels(args.labels) if args.labels else None
    if labels is not None and labels.shape[0] != d.shape[0]:
        raise CliError(f"{labels.shape[0]} labels for {d.shape[0]} points", EXIT_DIMENSION)
    if not 1 <= args.dim <= d.shape[0]:
        raise CliError(f"--dim must lie in [1, {d.shape[0]}]")
    coords = classical_mds(d, args.dim)
    with out.open(args.output) as tmp:
        write_coordinates(tmp, coords, labels)
    out.json(_sidecar_path(args.output), _provenance(args, points=d.shape[0]))


def _lattice(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(tok) for tok in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError("lattice dimensions must be positive")
    return rows, cols


def cmd_transform(args, out: Outputs):
    labels = None
    if args.idx_images:
        for path in filter(None, [args.idx_images, args.idx_labels]):
            if not Path(path).is_file():
                raise CliError(f"{path} not found.\n{DIGITS_HELP}")
        images = load_idx_images(args.idx_images, args.idx_labels)
        signals = images.pixels[: args.limit] if args.limit else images.pixels
        if images.labels is not None:
            labels = images.labels[: signals.shape[0]]
        shape = (images.rows, images.cols)
    elif args.signals:
        signals, labels = read_signals(args.signals, labeled=args.labeled)
        shape = None
    else:
        raise CliError(f"give --signals or --idx-images.\n{DIGITS_HELP}")

    if args.lattice:
        g = lattice_graph(*args.lattice)
    elif args.graph:
        g = read_graph(args.graph)
    elif shape is not None:
        g = lattice_graph(*shape)
    else:
        raise CliError("give --graph or --lattice ROWSxCOLS")
    if signals.shape[1] != g.n:
        raise CliError(f"signals have {signals.shape[1]} entries, graph has {g.n} nodes", EXIT_DIMENSION)
    op = make_operator(g, args.alpha)
    diffused = feature_transform(op, signals) if len(signals) else signals
    with out.open(args.output) as tmp:
        write_signals(tmp, diffused, labels)
    out.json(_sidecar_path(args.output), _provenance(args, signals=len(signals), nodes=g.n))


def _p_arg(text: str) -> float:
    try:
        return normalize_p(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _quad_arg(text: str) -> int:
    order = int(text)
    if not 1 <= order <= 256:
        raise argparse.ArgumentTypeError("quadrature order must lie in [1, 256]")
    return order


def _positive(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatdist", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"heatdist {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def numeric(sp, alpha=1.0):
        sp.add_argument("--alpha", type=_positive, default=alpha, help=f"diffusion constant (default {alpha})")
        sp.add_argument("--p", type=_p_arg, default=2.0, help="input norm: 1, 2 or inf (default 2)")
        sp.add_argument(
            "--quad-order",
            type=_quad_arg,
            default=None,
            help="use a Gauss-Laguerre rule of this order instead of the graded default",
        )
        sp.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")

    def problem(sp):
        sp.add_argument("--fixture", choices=["fig1"], help="built-in 10-node example with signals r, g, y")
        sp.add_argument("--graph", help="graph text file")
        sp.add_argument("--signals", help="signals CSV, one signal per row")
        sp.add_argument("--labeled", action="store_true", help="signals CSV has a trailing label column")

    sp = sub.add_parser("fixture", help="write the built-in example graph and signals")
    sp.add_argument("--name", choices=["fig1"], default="fig1")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_fixture)

    sp = sub.add_parser("distance", help="pairwise distance table")
    problem(sp)
    sp.add_argument("--metric", default="diffusion", help="input | diffusion (diff) | superposition (sps)")
    numeric(sp)
    sp.add_argument("--output", default="distances.csv")
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("stability", help="edge-weight perturbation experiment")
    problem(sp)
    sp.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    numeric(sp)
    sp.add_argument("--output", default="samples.csv")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("synth", help="random three-cluster graph and cluster signals")
    sp.add_argument("--sizes", type=_int_list, default=[9, 8, 10])
    sp.add_argument("--p-intra", type=float, default=0.4)
    sp.add_argument("--weights", type=_float_pair, default=(1.0, 3.0), help="intra-cluster weight range lo,hi")
    sp.add_argument("--bridges", type=int, default=3)
    sp.add_argument("--per-type", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("knn", help="leave-one-out k-NN accuracy from distance tables")
    sp.add_argument("--distances", action="append", required=True, help="distance CSV (repeatable)")
    sp.add_argument("--labels", required=True)
    sp.add_argument("--k", type=_int_list, default=[1, 3, 5, 7])
    sp.add_argument("--output", default="knn.json")
    sp.set_defaults(func=cmd_knn)

    sp = sub.add_parser("mds", help="classical MDS coordinates from a distance table")
    sp.add_argument("--distances", required=True)
    sp.add_argument("--labels")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--output", default="coords.csv")
    sp.set_defaults(func=cmd_mds)

    sp = sub.add_parser("transform", help="diffuse signals: v -> (I + alpha L)^-1 v")
    sp.add_argument("--signals")
    sp.add_argument("--labeled", action="store_true")
    sp.add_argument("--idx-images")
    sp.add_argument("--idx-labels")
    sp.add_argument("--limit", type=int, default=None)
    sp.add_argument("--graph")
    sp.add_argument("--lattice", type=_lattice, help="ROWSxCOLS pixel grid graph")
    sp.add_argument("--alpha", type=_positive, default=0.8)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--output", default="diffused.csv")
    sp.set_defaults(func=cmd_transform)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Outputs()
    try:
        args.func(args, out)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except DimensionError as exc:
        code, msg = EXIT_DIMENSION, str(exc)
    except (FormatError, IdxError, GraphError, OSError, ValueError) as exc:
        code, msg = EXIT_PARSE, str(exc)
    except (np.linalg.LinAlgError, ConnectivityError, FloatingPointError) as exc:
        code, msg = EXIT_NUMERIC, str(exc)
    else:
        return 0
    out.discard()
    print(f"heatdist {args.command}: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
