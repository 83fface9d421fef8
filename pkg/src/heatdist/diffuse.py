"""Heat diffusion on a graph and the distances built from it.

Given a graph Laplacian ``L`` and diffusion constant ``alpha``, a signal
``r`` evolves as ``r(t) = exp(-alpha L t) r``. Two signals are compared
either through the discounted integral of the norms of their diffused
difference (superposition distance) or through the norm of the
discounted integral itself, which has the closed form
``||(I + alpha L)^{-1} (r - s)||`` (diffusion distance).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph import Graph, laplacian
from .linalg import (
    DimensionError,
    EigenPair,
    NotConvergedError,
    QuadratureRule,
    SpdFactor,
    expm_action,
    gauss_laguerre,
    graded_rule,
    normalize_p,
    spd_factorize,
    spd_solve,
    sym_eigen,
    vector_pnorm,
)

__all__ = [
    "DiffusionOperator",
    "SignalSet",
    "make_operator",
    "diffuse_signal",
    "diffusion_distance",
    "diffusion_norm",
    "superposition_distance",
    "superposition_norm",
    "superposition_oracle",
    "feature_transform",
    "quadrature",
]


def quadrature(order: int | None = None) -> QuadratureRule:
    """Gauss-Laguerre rule of the given order, or the graded default for ``None``."""
    return graded_rule() if order is None else gauss_laguerre(order)


class DiffusionOperator:
    """Precomputed state for repeated distance queries on one graph.

    The eigendecomposition of ``L`` and the Cholesky factor of
    ``I + alpha L`` are computed on first use and then shared by every
    query. Instances are read-only.
    """

    def __init__(self, graph: Graph, alpha: float = 1.0, eigensolver: str = "lapack"):
        alpha = float(alpha)
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ValueError(f"diffusion constant must be positive, got {alpha}")
        self.graph = graph
        self.alpha = alpha
        self.eigensolver = eigensolver
        lap = laplacian(graph)
        lap.flags.writeable = False
        self.laplacian = lap

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def eig(self) -> EigenPair:
        return sym_eigen(self.laplacian, method=self.eigensolver)

    @cached_property
    def factor(self) -> SpdFactor:
        return spd_factorize(np.eye(self.n) + self.alpha * self.laplacian)

    def __repr__(self) -> str:
        return f"DiffusionOperator(n={self.n}, edges={self.graph.num_edges}, alpha={self.alpha})"


def make_operator(g: Graph, alpha: float = 1.0, eigensolver: str = "lapack") -> DiffusionOperator:
    return DiffusionOperator(g, alpha, eigensolver)


@dataclass(frozen=True, eq=False)
class SignalSet:
    """A stack of signals on the same node set, one per row."""

    signals: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.signals, dtype=float))
        object.__setattr__(self, "signals", x)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (x.shape[0],):
                raise DimensionError(f"{lab.shape[0] if lab.ndim else 0} labels for {x.shape[0]} signals")
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.signals.shape[1]

    def __len__(self) -> int:
        return self.signals.shape[0]


def _vector(op: DiffusionOperator, v, name: str = "signal") -> np.ndarray:
    x = np.asarray(v, dtype=float)
    if x.shape != (op.n,):
        raise DimensionError(f"{name} has shape {x.shape}, operator expects ({op.n},)")
    return x


def diffuse_signal(op: DiffusionOperator, r, t: float) -> np.ndarray:
    """Heat profile ``exp(-alpha L t) r`` at time ``t >= 0``."""
    x = _vector(op, r)
    if t < 0:
        raise ValueError("diffusion time must be nonnegative")
    if t == 0:
        return x.copy()
    return expm_action(op.eig, op.alpha * t, x)


def feature_transform(op: DiffusionOperator, v) -> np.ndarray:
    """Map ``v`` to ``(I + alpha L)^{-1} v``.

    Accepts one signal or a 2-D stack with one signal per row.
    """
    x = np.asarray(v, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != op.n:
            raise DimensionError(f"signals have {x.shape[1]} entries, operator expects {op.n}")
        return spd_solve(op.factor, x.T).T
    return spd_solve(op.factor, _vector(op, x))


def diffusion_distance(op: DiffusionOperator, r, s, p=2) -> float:
    p = normalize_p(p)
    d = _vector(op, r) - _vector(op, s)
    if not d.any():
        return 0.0
    return float(vector_pnorm(spd_solve(op.factor, d), p))


def diffusion_norm(op: DiffusionOperator, v, p=2) -> float:
    return diffusion_distance(op, v, np.zeros(op.n), p)


def _diffused_norms(op: DiffusionOperator, d: np.ndarray, times: np.ndarray, p: float) -> np.ndarray:
    """``||exp(-alpha L t) d||_p`` for every ``t`` in ``times``."""
    eig = op.eig
    coeffs = eig.vectors.T @ d
    decay = np.exp(-op.alpha * np.outer(times, eig.values))
    profiles = (decay * coeffs) @ eig.vectors.T
    return vector_pnorm(profiles, p)


def superposition_distance(op: DiffusionOperator, r, s, p=2, quad: QuadratureRule | None = None) -> float:
    """Discounted time integral of ``||exp(-alpha L t)(r - s)||_p``.

    ``quad`` is any rule for ``int_0^inf e^{-t} f(t) dt``. The default is
    :func:`~heatdist.linalg.graded_rule`; a plain Gauss-Laguerre rule
    (``gauss_laguerre(64)``) is cheaper but loses accuracy when
    ``alpha * lambda_max`` is large or when ``p`` is 1 or inf, where the
    integrand has kinks.
    """
    p = normalize_p(p)
    d = _vector(op, r) - _vector(op, s)
    if not d.any():
        return 0.0
    if quad is None:
        quad = graded_rule()
    return float(np.dot(quad.weights, _diffused_norms(op, d, quad.nodes, p)))


def superposition_norm(op: DiffusionOperator, v, p=2, quad: QuadratureRule | None = None) -> float:
    return superposition_distance(op, v, np.zeros(op.n), p, quad)


def superposition_oracle(op: DiffusionOperator, r, s, p=2, tol: float = 1e-6, max_depth: int = 40) -> float:
    """Brute-force superposition distance with total error at most ``tol``.

    The integrand is bounded by ``e^{-t} ||r - s||_p`` because diffusion
    does not increase 1-, 2- or inf-norms, so the tail past
    ``T = ln(2 ||r - s||_p / tol)`` contributes at most ``tol / 2``.
    ``[0, T]`` is covered by adaptive Simpson: a panel is accepted once
    halving it changes its estimate by no more than its length-share of
    ``tol / 2``, otherwise it is split. All panels at one depth are
    evaluated together.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = normalize_p(p)
    d = _vector(op, r) - _vector(op, s)
    scale = float(vector_pnorm(d, p))
    if scale == 0.0:
        return 0.0
    horizon = math.log(scale / (tol / 2.0))
    if horizon <= 0.0:
        # whole integral is below tol / 2
        return 0.0

    def integrand(t):
        out = np.empty(t.shape[0])
        for lo in range(0, t.shape[0], 4096):
            chunk = t[lo:lo + 4096]
            out[lo:lo + 4096] = np.exp(-chunk) * _diffused_norms(op, d, chunk, p)
        return out

    tail = float(integrand(np.array([horizon]))[0])
    if tail > tol:
        raise NotConvergedError(f"integrand at truncation point is {tail:g} > tol")

    density = (tol / 2.0) / horizon
    a = np.linspace(0.0, horizon, 17)[:-1]
    b = a + horizon / 16
    ends = integrand(np.concatenate([a, [horizon]]))
    fa, fb = ends[:-1], ends[1:]
    fm = integrand((a + b) / 2.0)
    coarse = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    for _ in range(max_depth):
        m = (a + b) / 2.0
        quarter = integrand(np.concatenate([(a + m) / 2.0, (m + b) / 2.0]))
        fl, fr = np.split(quarter, 2)
        left = (m - a) / 6.0 * (fa + 4.0 * fl + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * fr + fb)
        fine = left + right
        done = np.abs(fine - coarse) <= density * (b - a)
        total += fine[done].sum()
        keep = ~done
        if not keep.any():
            return float(total)
        a, m, b = a[keep], m[keep], b[keep]
        fa, fl, fm, fr, fb = fa[keep], fl[keep], fm[keep], fr[keep], fb[keep]
        left, right = left[keep], right[keep]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([fl, fr]), np.concatenate([fm, fb])
        coarse = np.concatenate([left, right])
    raise NotConvergedError(f"adaptive Simpson did not settle within depth {max_depth}")
