"""Distances on the 10-node example graph.

Three unit heat sources r, g and y sit on nodes 0, 5 and 6. In input
space all three pairs are equally far apart. Once heat flows along the
edges, g and y (neighbours) come out closest, and r and g end up nearer
than r and y because g lies between r and y.
"""
import numpy as np

from heatdist import figure1_graph, make_operator
from heatdist.analysis import pairwise_distances
from heatdist.diffuse import diffuse_signal, superposition_oracle
from heatdist.linalg import gauss_laguerre

g, r, gs, y = figure1_graph()
op = make_operator(g, alpha=1.0)
signals = np.vstack([r, gs, y])
names = ["r", "g", "y"]

# %% heat profile of r at a few times
for t in (0.0, 0.5, 2.0, 10.0):
    print(f"t={t:<4}", np.array2string(diffuse_signal(op, r, t), precision=3, suppress_small=True))

# %% distance tables, p = 2
for metric in ("input", "diffusion", "superposition"):
    d = pairwise_distances(op, signals, metric).values
    print(f"\n{metric}")
    for i in range(3):
        for j in range(i + 1, 3):
            print(f"  d({names[i]}, {names[j]}) = {d[i, j]:.5f}")

# %% quadrature check: 64-node Gauss-Laguerre vs the adaptive oracle
gl = pairwise_distances(op, signals, "superposition", quad=gauss_laguerre(64)).values
print("\nsuperposition, Gauss-Laguerre(64) vs oracle")
for i, j in [(0, 1), (0, 2), (1, 2)]:
    ref = superposition_oracle(op, signals[i], signals[j], tol=1e-8)
    print(f"  d({names[i]}, {names[j]}): {gl[i, j]:.8f}  oracle {ref:.8f}")
