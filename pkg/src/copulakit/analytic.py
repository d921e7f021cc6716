"""Copulas given by closed-form evaluators.

Used for the singular and smooth constructions (shuffles, perturbation
families, the composite worst-case example) that have no finite
checkerboard representation.  An :class:`AnalyticCopula` carries a
vectorized cdf, an optional Markov-kernel evaluator conditioning on the
last coordinate, and structural hints consumed by the metrics layer.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, KernelUnavailable


class AnalyticCopula:
    """Copula defined by a closed-form cdf.

    Parameters
    ----------
    dim : int
        Number of coordinates.
    cdf_fn : callable
        Vectorized evaluator mapping an (m, dim) array of points in the unit
        hypercube to the m copula values.
    kernel_fn : callable, optional
        Vectorized Markov-kernel evaluator ``(v, u) -> K(v, [0, u])``
        conditioning on the last coordinate; ``v`` has shape (m,) and ``u``
        shape (m, dim-1).
    kernel_v_breaks : array-like, optional
        Conditioning values at which the kernel may be nonsmooth in ``v``
        (quadrature subdivides there).
    kernel_u_breaks : sequence of array-like, optional
        Per remaining coordinate, points of nonsmoothness in ``u``.
    lipschitz : float
        Per-coordinate Lipschitz bound of the cdf (1 for every copula).
    multilinear : bool
        True only if the cdf is globally multilinear (e.g. the independence
        copula), which lets the sup-metric use exact node maxima.
    closed_family : object, optional
        Closed-form conditional decomposition consumed by the vine operator
        (see :mod:`copulakit.pvc`).
    """

    def __init__(self, dim, cdf_fn, kernel_fn=None, kernel_v_breaks=None,
                 kernel_u_breaks=None, lipschitz=1.0, multilinear=False,
                 closed_family=None, name=""):
        self.dim = int(dim)
        self._cdf_fn = cdf_fn
        self._kernel_fn = kernel_fn
        self.kernel_v_breaks = (
            np.array([0.0, 1.0]) if kernel_v_breaks is None
            else np.asarray(kernel_v_breaks, dtype=float)
        )
        self.kernel_u_breaks = kernel_u_breaks
        self.lipschitz = float(lipschitz)
        self._multilinear = bool(multilinear)
        self.closed_family = closed_family
        self.name = name

    @property
    def has_kernel(self) -> bool:
        return self._kernel_fn is not None

    def cdf(self, u) -> float:
        return float(self.cdf_many(np.asarray(u, dtype=float)[None, :])[0])

    def cdf_many(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatch(f"points must have shape (m, {self.dim})")
        return np.asarray(self._cdf_fn(points), dtype=float)

    def cdf_on_lattice(self, axes) -> np.ndarray:
        """Cdf on a product lattice (streamed along the first axis to keep
        temporaries small)."""
        if len(axes) != self.dim:
            raise DimensionMismatch("one node array per axis required")
        axes = [np.asarray(a, dtype=float) for a in axes]
        shape = tuple(len(a) for a in axes)
        rest = int(np.prod(shape[1:])) if self.dim > 1 else 1
        out = np.empty(shape)
        block = max(1, int(2_000_000 // max(rest, 1)))
        tail = np.meshgrid(*axes[1:], indexing="ij") if self.dim > 1 else []
        tail = [g.ravel() for g in tail]
        for s in range(0, shape[0], block):
            xs = axes[0][s : s + block]
            pts = np.empty((len(xs) * rest, self.dim))
            pts[:, 0] = np.repeat(xs, rest)
            for j, g in enumerate(tail):
                pts[:, j + 1] = np.tile(g, len(xs))
            out[s : s + block] = self.cdf_many(pts).reshape((len(xs),) + shape[1:])
        return out

    def kernel(self, v, u) -> np.ndarray:
        """Markov kernel ``K(v, [0, u])`` w.r.t. the last coordinate."""
        if self._kernel_fn is None:
            raise KernelUnavailable(f"{self.name or 'copula'} has no kernel evaluator")
        v = np.atleast_1d(np.asarray(v, dtype=float))
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = np.broadcast_to(u[None, :], (len(v), self.dim - 1))
        return np.asarray(self._kernel_fn(v, u), dtype=float)

    def multilinear_breaks(self):
        if self._multilinear:
            return tuple(np.array([0.0, 1.0]) for _ in range(self.dim))
        return None

    def __repr__(self):
        return f"AnalyticCopula(dim={self.dim}, name={self.name!r})"


def independence_analytic(dim: int) -> AnalyticCopula:
    """The independence copula as an analytic evaluator."""

    def cdf(pts):
        return np.prod(pts, axis=1)

    def kern(v, u):
        return np.prod(u, axis=1)

    return AnalyticCopula(dim, cdf, kernel_fn=kern, multilinear=True,
                          name=f"pi_{dim}")


def comonotone(dim: int = 2) -> AnalyticCopula:
    """Upper Frechet bound ``min(u_1, ..., u_d)``."""

    def cdf(pts):
        return np.min(pts, axis=1)

    def kern(v, u):
        # mass rides the diagonal: point mass at (v, ..., v)
        return np.all(u >= v[:, None], axis=1).astype(float)

    return AnalyticCopula(dim, cdf, kernel_fn=kern, name=f"m_{dim}")


def countermonotone() -> AnalyticCopula:
    """Lower Frechet bound ``max(u + v - 1, 0)`` (bivariate only)."""

    def cdf(pts):
        return np.maximum(pts[:, 0] + pts[:, 1] - 1.0, 0.0)

    def kern(v, u):
        return (u[:, 0] >= 1.0 - v).astype(float)

    return AnalyticCopula(2, cdf, kernel_fn=kern, name="w_2")
