"""Superposition and diffusion distances between signals on weighted graphs."""

__version__ = "0.1.0"

from .graph import (
    Graph,
    PerturbationConfig,
    adjacency,
    build_graph,
    degree,
    figure1_graph,
    laplacian,
    lattice_graph,
    perturb_weights,
    three_cluster_graph,
)
from .linalg import gauss_laguerre, graded_rule, matrix_pnorm, vector_pnorm
from .diffuse import (
    DiffusionOperator,
    SignalSet,
    diffuse_signal,
    diffusion_distance,
    diffusion_norm,
    feature_transform,
    make_operator,
    superposition_distance,
    superposition_norm,
    superposition_oracle,
)
from .analysis import (
    DistanceMatrix,
    classical_mds,
    knn_loocv,
    pairwise_distances,
    stability_experiment,
)
from .datasets import ImageSet, cluster_signals, image_signal, load_idx_images, load_idx_labels
