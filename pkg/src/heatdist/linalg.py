"""Dense numerical kernels used by the distance computations.

Everything here works on plain numpy arrays. Symmetric matrices are
dense ``(n, n)`` float arrays; vectors are 1-D arrays, and the vector
norms also accept stacks of vectors (the norm is taken along the last
axis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

__all__ = [
    "EigenPair",
    "SpdFactor",
    "QuadratureRule",
    "DimensionError",
    "NotConvergedError",
    "NotPositiveDefiniteError",
    "normalize_p",
    "sym_eigen",
    "jacobi_eigen",
    "spd_factorize",
    "spd_solve",
    "matrix_pnorm",
    "vector_pnorm",
    "expm_action",
    "gauss_laguerre",
    "graded_rule",
]


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotConvergedError(np.linalg.LinAlgError):
    """An iterative eigensolver hit its iteration cap."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky factorization met a non-positive pivot."""


def normalize_p(p) -> float:
    """Map ``1``, ``2``, ``inf`` (or the string ``"inf"``) to a float.

    Raises ``ValueError`` for anything else.
    """
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "max"):
            return math.inf
        try:
            p = float(key)
        except ValueError:
            raise ValueError(f"unsupported p-norm {p!r}; use 1, 2 or inf") from None
    if p in (1, 2) or p == math.inf:
        return float(p)
    raise ValueError(f"unsupported p-norm {p!r}; use 1, 2 or inf")


def _as_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigendecomposition ``M = Q diag(values) Q^T`` with ascending values."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def sym_eigen(m, method: str = "lapack") -> EigenPair:
    """Eigendecomposition of a real symmetric matrix.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="jacobi"``
    uses the cyclic Jacobi solver in this module.
    """
    a = _as_square(m)
    if method == "jacobi":
        return jacobi_eigen(a)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NotConvergedError(str(exc)) from exc
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenPair(values, vectors)


def jacobi_eigen(m, max_sweeps: int = 30, rtol: float = 1e-12) -> EigenPair:
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Sweeps over every off-diagonal pair ``(p, q)`` and applies the plane
    rotation that annihilates ``a[p, q]``. Stops once the off-diagonal
    Frobenius norm drops below ``rtol * ||M||_F``.

    Raises
    ------
    NotConvergedError
        If ``max_sweeps`` sweeps do not reach the threshold.
    """
    a = _as_square(m).copy()
    n = a.shape[0]
    v = np.eye(n)
    threshold = rtol * np.linalg.norm(a)
    offdiag = ~np.eye(n, dtype=bool)
    converged = False
    for _ in range(max_sweeps + 1):
        # summed directly; ||A||^2 - ||diag||^2 cancels long before rtol
        off = math.sqrt(np.sum(a[offdiag] ** 2))
        if off <= threshold:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-18 * abs(diff):
                    # small-angle limit, avoids overflow in theta
                    t = apq / diff
                elif diff == 0.0:
                    t = 1.0
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if not converged:
        raise NotConvergedError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = v[:, order]
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenPair(values, vectors)


@dataclass(frozen=True, eq=False)
class SpdFactor:
    """Cholesky factor of a symmetric positive-definite matrix."""

    factor: np.ndarray
    lower: bool

    @property
    def n(self) -> int:
        return self.factor.shape[0]

    def solve(self, v) -> np.ndarray:
        return spd_solve(self, v)


def spd_factorize(m) -> SpdFactor:
    a = _as_square(m)
    try:
        c, lower = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    c.flags.writeable = False
    return SpdFactor(c, lower)


def spd_solve(f: SpdFactor, v) -> np.ndarray:
    """Solve ``M x = v``. ``v`` may be a vector or an ``(n, k)`` block."""
    b = np.asarray(v, dtype=float)
    if b.shape[0] != f.n:
        raise DimensionError(f"right-hand side has length {b.shape[0]}, expected {f.n}")
    return scipy.linalg.cho_solve((f.factor, f.lower), b)


def vector_pnorm(v, p=2) -> float | np.ndarray:
    """l_p norm along the last axis, ``p`` in {1, 2, inf}."""
    p = normalize_p(p)
    x = np.asarray(v, dtype=float)
    if p == 1.0:
        return np.sum(np.abs(x), axis=-1)
    if p == 2.0:
        return np.sqrt(np.sum(x * x, axis=-1))
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
    return np.max(np.abs(x), axis=-1)


def matrix_pnorm(m, p=2) -> float:
    """Induced matrix norm for ``p`` in {1, 2, inf}.

    For ``p=2`` on a symmetric argument this is the largest absolute
    eigenvalue; non-symmetric input falls back to the largest singular
    value.
    """
    p = normalize_p(p)
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    if a.size == 0:
        return 0.0
    if p == 1.0:
        return float(np.max(np.sum(np.abs(a), axis=0)))
    if p == math.inf:
        return float(np.max(np.sum(np.abs(a), axis=1)))
    if a.shape[0] == a.shape[1] and np.array_equal(a, a.T):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def expm_action(eig: EigenPair, s: float, v) -> np.ndarray:
    """Return ``exp(-s M) v`` where ``eig`` decomposes ``M``.

    ``v`` may be a vector or an ``(n, k)`` block of column vectors.
    """
    if s < 0:
        raise ValueError("time scale s must be nonnegative")
    x = np.asarray(v, dtype=float)
    q = eig.vectors
    decay = np.exp(-s * eig.values)
    coeffs = q.T @ x
    if coeffs.ndim == 1:
        return q @ (decay * coeffs)
    return q @ (decay[:, None] * coeffs)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights for integrals of the form ``int_0^inf e^{-t} f(t) dt``."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, f) -> float:
        """Apply the rule to a vectorized callable ``f(t)``."""
        return float(np.dot(self.weights, f(self.nodes)))


def _christoffel_weights(nodes: np.ndarray, order: int) -> np.ndarray:
    """``1 / sum_k L_k(x)^2`` over the orthonormal Laguerre polynomials.

    The recurrence is rescaled whenever values grow large, so large
    nodes keep full relative accuracy in their (tiny) weights.
    """
    prev = np.zeros_like(nodes)
    cur = np.ones_like(nodes)
    total = np.ones_like(nodes)
    log_scale = np.zeros_like(nodes)
    for k in range(order - 1):
        prev, cur = cur, ((2 * k + 1 - nodes) * cur - k * prev) / (k + 1)
        total += cur * cur
        big = np.abs(cur) > 1e100
        if big.any():
            prev[big] *= 1e-100
            cur[big] *= 1e-100
            total[big] *= 1e-200
            log_scale[big] += 200 * math.log(10)
    return np.exp(-np.log(total) - log_scale)


@lru_cache(maxsize=32)
def gauss_laguerre(order: int = 64) -> QuadratureRule:
    """Gauss-Laguerre rule from the Jacobi matrix of the Laguerre recurrence.

    The nodes are the eigenvalues of the symmetric tridiagonal matrix
    with diagonal ``2k + 1`` and off-diagonal ``k + 1`` (Golub-Welsch).
    The weights are taken from the Christoffel function rather than the
    squared eigenvector components, which lose relative accuracy once
    weights drop far below machine epsilon.
    """
    order = int(order)
    if not 1 <= order <= 256:
        raise ValueError(f"quadrature order must lie in [1, 256], got {order}")
    k = np.arange(order, dtype=float)
    diag = 2.0 * k + 1.0
    off = k[1:]
    if order == 1:
        nodes = np.array([1.0])
    else:
        nodes = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    weights = _christoffel_weights(nodes, order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights)


@lru_cache(maxsize=32)
def graded_rule(
    panel_order: int = 8,
    t_min: float = 1e-8,
    growth: float = 1.25,
    max_width: float = 0.25,
    t_max: float = 50.0,
) -> QuadratureRule:
    """Composite Gauss-Legendre rule for ``int_0^inf e^{-t} f(t) dt``.

    Panels grow geometrically by ``growth`` from ``[0, t_min]`` until they
    reach ``max_width``, then stay at that width up to ``t_max``. The
    discount ``e^{-t}`` is folded into the weights and the tail beyond
    ``t_max`` is dropped. Unlike a Gauss-Laguerre rule of moderate order
    this resolves integrands with fast-decaying modes near ``t = 0`` and
    keeps kinks confined to short panels.
    """
    if panel_order < 1 or not (0 < t_min < t_max) or growth <= 1 or max_width <= 0:
        raise ValueError("invalid graded rule parameters")
    edges = [0.0, t_min]
    while edges[-1] < t_max:
        width = min((edges[-1] - edges[-2]) * growth, max_width)
        edges.append(min(edges[-1] + width, t_max))
    edges = np.asarray(edges)
    x, w = np.polynomial.legendre.leggauss(panel_order)
    left, right = edges[:-1, None], edges[1:, None]
    half = (right - left) / 2.0
    nodes = (left + half * (x + 1.0)).ravel()
    weights = (half * w).ravel() * np.exp(-nodes)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights)
