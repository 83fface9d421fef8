"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed together at
the end of the pytest run (see ``conftest.py``). Run just this file with
``pytest tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from heatdist.analysis import (
    THREE_CLUSTER_SEED,
    class_separation_ratio,
    diffusion_bound,
    stability_experiment,
    superposition_bound,
    three_cluster_experiment,
)
from heatdist.datasets import find_digit_files, load_idx_images
from heatdist.diffuse import (
    diffuse_signal,
    diffusion_distance,
    diffusion_norm,
    feature_transform,
    make_operator,
    superposition_distance,
    superposition_norm,
    superposition_oracle,
)
from heatdist.graph import PerturbationConfig, adjacency, figure1_graph, lattice_graph, laplacian
from heatdist.linalg import expm_action, gauss_laguerre, matrix_pnorm, spd_factorize, spd_solve, sym_eigen

from conftest import random_graph

P_VALUES = (1.0, 2.0, math.inf)
RESULTS: dict[int, str] = {}


def report(number, title, ok, detail):
    RESULTS[number] = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
    assert ok, RESULTS[number]


def test_1_diffusion_golden():
    g, r, gs, y = figure1_graph()
    start = time.perf_counter()
    op = make_operator(g, 1.0)
    got = [diffusion_distance(op, gs, y), diffusion_distance(op, r, gs), diffusion_distance(op, r, y)]
    elapsed = time.perf_counter() - start
    want = [0.418, 0.664, 0.698]
    err = max(abs(a - b) for a, b in zip(got, want))
    report(
        1,
        "worked-example diffusion distances",
        err <= 1e-3 and elapsed < 0.010,
        f"{', '.join(f'{v:.5f}' for v in got)} (max err {err:.1e}), {elapsed * 1e3:.2f} ms",
    )


def test_2_superposition_golden():
    g, r, gs, y = figure1_graph()
    start = time.perf_counter()
    op = make_operator(g, 1.0)
    gl = gauss_laguerre(64)
    pairs = [(gs, y), (r, gs), (r, y)]
    got = [superposition_distance(op, a, b, 2, gl) for a, b in pairs]
    oracle = [superposition_oracle(op, a, b, 2, tol=1e-6) for a, b in pairs]
    elapsed = time.perf_counter() - start
    want = [0.456, 0.701, 0.742]
    err = max(abs(a - b) for a, b in zip(got, want))
    agree = max(abs(a - b) for a, b in zip(got, oracle))
    report(
        2,
        "worked-example superposition distances (64-node Gauss-Laguerre)",
        err <= 5e-3 and agree <= 1e-4 and elapsed < 0.100,
        f"{', '.join(f'{v:.5f}' for v in got)} (max err {err:.1e}), oracle gap {agree:.1e}, {elapsed * 1e3:.1f} ms",
    )


def test_3_superposition_dominates_diffusion():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = math.inf
    for i in range(1000):
        g = random_graph(rng, max_n=30)
        op = make_operator(g, rng.uniform(0.1, 2.0))
        r, s = rng.standard_normal((2, g.n))
        p = P_VALUES[i % 3]
        worst = min(worst, superposition_distance(op, r, s, p) - diffusion_distance(op, r, s, p))
    elapsed = time.perf_counter() - start
    report(
        3,
        "superposition >= diffusion on 1000 random instances",
        worst >= -1e-8 and elapsed < 30,
        f"smallest gap {worst:.2e}, {elapsed:.1f} s",
    )


def test_4_metric_and_norm_axioms():
    rng = np.random.default_rng(4)
    failures = {"symmetry": 0, "identity": 0, "triangle": 0, "homogeneity": 0, "subadditivity": 0}
    dists = (diffusion_distance, superposition_distance)
    norms = (diffusion_norm, superposition_norm)
    for i in range(1000):
        g = random_graph(rng, max_n=30)
        op = make_operator(g, rng.uniform(0.1, 2.0))
        r, s, u = rng.standard_normal((3, g.n)) * rng.uniform(0.1, 5)
        p = P_VALUES[i % 3]
        c = rng.uniform(-4, 4)
        for dist in dists:
            rs = dist(op, r, s, p)
            failures["symmetry"] += rs != dist(op, s, r, p)
            failures["identity"] += dist(op, r, r, p) != 0.0 or rs < 1e-12
            failures["triangle"] += rs > dist(op, r, u, p) + dist(op, u, s, p) + 1e-9
        for norm in norms:
            nr = norm(op, r, p)
            failures["homogeneity"] += abs(norm(op, c * r, p) - abs(c) * nr) > 1e-10 * abs(c) * nr
            failures["subadditivity"] += norm(op, r + s, p) > nr + norm(op, s, p) + 1e-9
    total = sum(failures.values())
    report(
        4,
        "metric and norm axioms on 1000 random triples",
        total == 0,
        ", ".join(f"{k} {v}" for k, v in failures.items()) + " failures",
    )


def test_5_stability():
    g, r, gs, _ = figure1_graph()
    start = time.perf_counter()
    samples = stability_experiment(g, r, gs, PerturbationConfig(0.05, seed=0), reps=1000, p=2, alpha=1.0)
    elapsed = time.perf_counter() - start
    max_diff = max(s.norm_dev_diff for s in samples)
    max_sps = max(s.norm_dev_sps for s in samples)
    sps_bad = sum(s.dev_sps > superposition_bound(s.gamma, s.e_norm) + 1e-6 for s in samples)
    diff_bad = sum(s.e_norm >= 1 or s.dev_diff > diffusion_bound(s.gamma, s.e_norm) + 1e-8 for s in samples)
    report(
        5,
        "edge-weight perturbation stability (1000 trials)",
        max_diff < 2 and max_sps < 2 and sps_bad == 0 and diff_bad == 0 and elapsed < 60,
        f"max normalized deviation diffusion {max_diff:.3f}, superposition {max_sps:.3f}; "
        f"bound violations {sps_bad}/{diff_bad}; {elapsed:.1f} s",
    )


def test_6_doubly_stochastic_operators():
    rng = np.random.default_rng(6)
    worst_entry, worst_sum, worst_norm = 0.0, 0.0, 0.0
    for _ in range(200):
        lap = laplacian(random_graph(rng, max_n=40))
        n = lap.shape[0]
        eig = sym_eigen(lap)
        mats = [expm_action(eig, s, np.eye(n)) for s in (0.1, 1.0, 10.0)]
        mats.append(spd_solve(spd_factorize(np.eye(n) + lap), np.eye(n)))
        for m in mats:
            worst_entry = min(worst_entry, m.min())
            worst_sum = max(worst_sum, np.abs(m.sum(axis=0) - 1).max(), np.abs(m.sum(axis=1) - 1).max())
            worst_norm = max(worst_norm, *(abs(matrix_pnorm(m, p) - 1) for p in P_VALUES))
    report(
        6,
        "heat kernel and resolvent are doubly stochastic (200 Laplacians)",
        worst_entry >= -1e-10 and worst_sum <= 1e-9 and worst_norm <= 1e-9,
        f"min entry {worst_entry:.1e}, sum error {worst_sum:.1e}, norm error {worst_norm:.1e}",
    )


def test_7_three_clusters():
    start = time.perf_counter()
    pinned = three_cluster_experiment(THREE_CLUSTER_SEED).accuracy
    means = {"input": [], "diffusion": [], "superposition": []}
    for seed in range(50):
        for metric, acc in three_cluster_experiment(seed).accuracy.items():
            means[metric].append(acc)
    means = {k: float(np.mean(v)) for k, v in means.items()}
    elapsed = time.perf_counter() - start
    ok = (
        pinned["diffusion"] == 1.0
        and pinned["superposition"] == 1.0
        and pinned["diffusion"] >= pinned["input"]
        and means["diffusion"] > means["input"]
        and elapsed < 120
    )
    report(
        7,
        "three-cluster 1-NN classification",
        ok,
        f"seed {THREE_CLUSTER_SEED}: input {pinned['input']:.3f}, diffusion {pinned['diffusion']:.3f}, "
        f"superposition {pinned['superposition']:.3f}; 50-seed means input {means['input']:.3f}, "
        f"diffusion {means['diffusion']:.3f}, superposition {means['superposition']:.3f}; {elapsed:.1f} s",
    )


def test_8_dynamics():
    rng = np.random.default_rng(8)
    h = 1e-6
    deriv, mass, semi, iso = 0.0, 0.0, 0.0, 0.0
    checked_iso = 0
    for _ in range(100):
        g = random_graph(rng, max_n=30)
        op = make_operator(g, rng.uniform(0.1, 2.0))
        r = rng.standard_normal(g.n)
        a = adjacency(g)
        want = op.alpha * (a @ r - a.sum(axis=1) * r)
        got = (-3 * r + 4 * diffuse_signal(op, r, h) - diffuse_signal(op, r, 2 * h)) / (2 * h)
        deriv = max(deriv, np.abs(got - want).max())
        for t in (0.01, 1.0, 20.0):
            mass = max(mass, abs(diffuse_signal(op, r, t).sum() - r.sum()))
        t1, t2 = rng.uniform(0, 2, size=2)
        twice = diffuse_signal(op, diffuse_signal(op, r, t1), t2)
        semi = max(semi, np.abs(twice - diffuse_signal(op, r, t1 + t2)).max())
        lam2 = op.eig.values[1] if g.n > 1 else 0.0
        if lam2 > 1e-8:
            out = diffuse_signal(op, r, 100.0 / (op.alpha * lam2))
            iso = max(iso, (out.max() - out.min()) / np.abs(r).max())
            checked_iso += 1
    report(
        8,
        "heat-flow dynamics",
        deriv <= 1e-4 and mass <= 1e-9 and semi <= 1e-9 and iso <= 1e-6 and checked_iso > 0,
        f"derivative err {deriv:.1e}, mass err {mass:.1e}, semigroup err {semi:.1e}, "
        f"isothermal spread {iso:.1e} ({checked_iso} connected graphs)",
    )


def test_9_digit_feature_transform():
    found = find_digit_files()
    if found is None:
        RESULTS[9] = "[SKIP] 9. digit feature transform: no local IDX digit files (set HEATDIST_DIGITS)"
        pytest.skip("no local digit IDX files")
    images = load_idx_images(*found)
    if images.labels is None or (images.rows, images.cols) != (28, 28):
        RESULTS[9] = "[SKIP] 9. digit feature transform: files are not 28x28 labelled digits"
        pytest.skip("digit files have an unexpected layout")
    rng = np.random.default_rng(9)
    pick = rng.choice(images.count, size=min(200, images.count), replace=False)
    x, labels = images.pixels[pick], images.labels[pick]
    op = make_operator(lattice_graph(28, 28), 0.8)
    before = class_separation_ratio(x, labels)
    after = class_separation_ratio(feature_transform(op, x), labels)
    report(
        9,
        "digit feature transform tightens classes",
        after < before,
        f"same-class / all-pairs distance ratio {before:.4f} -> {after:.4f}",
    )
