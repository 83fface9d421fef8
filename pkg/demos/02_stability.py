"""How much do the distances move when edge weights are jittered?

Every edge weight is multiplied by an independent U[0.95, 1.05] factor,
1000 times. Each trial records the change in both distances between r
and g, divided by the size of the Laplacian perturbation ||E||_2. The
worst-case bounds say these ratios stay below 2 * max(||r||, ||g||) = 2.
"""
import numpy as np

from heatdist import PerturbationConfig, figure1_graph
from heatdist.analysis import diffusion_bound, stability_experiment, superposition_bound

g, r, gs, _ = figure1_graph()
samples = stability_experiment(g, r, gs, PerturbationConfig(delta=0.05, seed=0), reps=1000)

e = np.array([s.e_norm for s in samples])
nd = np.array([s.norm_dev_diff for s in samples])
ns = np.array([s.norm_dev_sps for s in samples])
print(f"||E||_2 range        {e.min():.4f} .. {e.max():.4f}")
print(f"diffusion   dev/||E|| mean {nd.mean():.4f}  max {nd.max():.4f}")
print(f"superpos.   dev/||E|| mean {ns.mean():.4f}  max {ns.max():.4f}")

slack_sps = min(superposition_bound(s.gamma, s.e_norm) - s.dev_sps for s in samples)
slack_diff = min(diffusion_bound(s.gamma, s.e_norm) - s.dev_diff for s in samples)
print(f"smallest slack to bound: superposition {slack_sps:.4f}, diffusion {slack_diff:.4f}")

# %% coarse histogram of the normalized deviations
counts, edges = np.histogram(np.concatenate([nd, ns]), bins=8)
for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
    print(f"  {lo:.3f}-{hi:.3f} {'#' * int(60 * c / counts.max())}")
