"""Checkerboard copulas on rectangular grids.

A grid copula stores one nonnegative mass per cell of a rectangular
partition of the unit hypercube and is the exact finite representation used
throughout the package.  Cells may be nonuniform (arbitrary per-axis
breakpoints); the common case of ``N_j`` equal cells per axis is exposed
through :func:`new_grid` and the JSON file format.  All masses are plain
doubles; every quantity of interest in the test battery is a dyadic
rational and therefore exactly representable.

Cell layout is row major with the last axis fastest (C order).
"""

from __future__ import annotations

import json
from functools import reduce

import numpy as np

from .errors import (
    BadAxis,
    BadDimension,
    BadIndexSet,
    DimensionMismatch,
    InvertedBox,
    MarginViolation,
    NegativeMass,
    ResolutionOverflow,
    TotalMassViolation,
    WeightError,
)

VALIDATION_TOL = 1e-12
DEFAULT_CELL_LIMIT = 10**8

GRID_ORDER_TAG = "row-major-last-fastest"


def uniform_breaks(n: int) -> np.ndarray:
    """Breakpoints ``0, 1/n, ..., 1`` (exact dyadic floats for dyadic n)."""
    return np.arange(n + 1) / n


def _as_breaks(b) -> np.ndarray:
    b = np.ascontiguousarray(np.asarray(b, dtype=float))
    if b.ndim != 1 or len(b) < 2:
        raise BadDimension("axis breakpoints must be a 1-d array of length >= 2")
    if b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
        raise BadDimension("breakpoints must increase strictly from 0 to 1")
    return b


def _locate(breaks: np.ndarray, x: np.ndarray):
    """Cell index and in-cell fraction for points of [0, 1]."""
    idx = np.searchsorted(breaks, x, side="right") - 1
    idx = np.clip(idx, 0, len(breaks) - 2)
    width = breaks[idx + 1] - breaks[idx]
    frac = np.clip((x - breaks[idx]) / width, 0.0, 1.0)
    return idx, frac


def _interp_matrix(breaks: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Node-interpolation matrix W with W @ nodevalues = values at xs."""
    xs = np.asarray(xs, dtype=float)
    idx, frac = _locate(breaks, xs)
    W = np.zeros((len(xs), len(breaks)))
    rows = np.arange(len(xs))
    W[rows, idx] = 1.0 - frac
    W[rows, idx + 1] += frac
    return W


def multilinear_interp(nodes: np.ndarray, breaks_list, pts: np.ndarray) -> np.ndarray:
    """Interpolate a node tensor at points, one value per row of ``pts``."""
    pts = np.asarray(pts, dtype=float)
    m = len(pts)
    if m == 0:
        return np.empty(0)
    acc = None
    for j, b in enumerate(breaks_list):
        idx, frac = _locate(np.asarray(b, dtype=float), pts[:, j])
        if acc is None:
            lo = nodes[idx]
            hi = nodes[idx + 1]
        else:
            rest = acc.shape[2:]
            flat = acc.reshape(m, acc.shape[1], -1)
            lo = np.take_along_axis(flat, idx[:, None, None], axis=1)[:, 0, :]
            hi = np.take_along_axis(flat, (idx + 1)[:, None, None], axis=1)[:, 0, :]
            lo = lo.reshape((m,) + rest)
            hi = hi.reshape((m,) + rest)
        w = frac.reshape((m,) + (1,) * (lo.ndim - 1))
        acc = lo * (1.0 - w) + hi * w
    return acc if acc.ndim == 1 else acc.reshape(m)


class GridCopula:
    """Exact checkerboard copula.

    Parameters
    ----------
    breaks : sequence of 1-d arrays
        Strictly increasing breakpoints per axis, each running from 0 to 1.
    masses : ndarray
        Nonnegative cell masses, shape ``(len(b)-1 for b in breaks)``,
        summing to 1, with uniform univariate margins: the mass of every
        axis-``j`` slab equals the slab width.
    validate : bool
        Skip validation only for values produced by already-validated
        arithmetic.

    Notes
    -----
    The cumulative tensor is cached on first use; instances are immutable.
    All operations are pure functions, safe for concurrent use.
    """

    __slots__ = ("breaks", "masses", "_cum")

    def __init__(self, breaks, masses, validate: bool = True):
        self.breaks = tuple(_as_breaks(b) for b in breaks)
        masses = np.ascontiguousarray(np.asarray(masses, dtype=float))
        shape = tuple(len(b) - 1 for b in self.breaks)
        if masses.shape != shape:
            raise DimensionMismatch(
                f"mass tensor shape {masses.shape} does not match breakpoints {shape}"
            )
        self.masses = masses
        self._cum = None
        for b in self.breaks:
            b.setflags(write=False)
        self.masses.setflags(write=False)
        if validate:
            self._validate()

    # -- construction and validation ------------------------------------

    def _validate(self):
        if self.dim < 2:
            raise BadDimension("copulas need dimension >= 2")
        if not np.all(np.isfinite(self.masses)):
            raise NegativeMass("cell masses must be finite")
        if np.any(self.masses < -VALIDATION_TOL):
            raise NegativeMass(
                f"negative cell mass {self.masses.min():.3e} below -{VALIDATION_TOL}"
            )
        total = float(self.masses.sum())
        if abs(total - 1.0) > VALIDATION_TOL:
            raise TotalMassViolation(f"total mass {total!r} != 1")
        for j, b in enumerate(self.breaks):
            axes = tuple(k for k in range(self.dim) if k != j)
            slab = self.masses.sum(axis=axes)
            widths = np.diff(b)
            err = np.max(np.abs(slab - widths))
            if err > VALIDATION_TOL:
                raise MarginViolation(
                    f"axis {j}: slab masses deviate from uniform margin by {err:.3e}"
                )

    @property
    def dim(self) -> int:
        return len(self.breaks)

    @property
    def shape(self) -> tuple:
        return self.masses.shape

    @property
    def is_uniform(self) -> bool:
        return all(np.array_equal(b, uniform_breaks(len(b) - 1)) for b in self.breaks)

    @property
    def resolutions(self) -> list:
        """Per-axis cell counts (meaningful for uniform grids)."""
        return [len(b) - 1 for b in self.breaks]

    def cell_volumes(self) -> np.ndarray:
        widths = [np.diff(b) for b in self.breaks]
        return reduce(np.multiply.outer, widths)

    def max_density(self) -> float:
        return float(np.max(self.masses / self.cell_volumes()))

    @property
    def cum(self) -> np.ndarray:
        """Zero-padded cumulative tensor; entry [i1..id] = C at node (b1[i1],..)."""
        if self._cum is None:
            c = self.masses
            for ax in range(self.dim):
                c = np.cumsum(c, axis=ax)
            c = np.pad(c, [(1, 0)] * self.dim)
            c.setflags(write=False)
            self._cum = c
        return self._cum

    # -- evaluation ------------------------------------------------------

    def cdf(self, u) -> float:
        """Copula value at one point (multilinear within cells, exact at nodes)."""
        return float(self.cdf_many(np.asarray(u, dtype=float)[None, :])[0])

    def cdf_many(self, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """Copula values at ``points`` of shape (m, dim)."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatch(f"points must have shape (m, {self.dim})")
        out = np.empty(len(points))
        for start in range(0, len(points), chunk):
            out[start : start + chunk] = self._cdf_chunk(points[start : start + chunk])
        return out

    def _cdf_chunk(self, pts: np.ndarray) -> np.ndarray:
        return multilinear_interp(self.cum, self.breaks, pts)

    def cdf_on_lattice(self, axes) -> np.ndarray:
        """Copula values on the product lattice ``axes[0] x ... x axes[d-1]``."""
        if len(axes) != self.dim:
            raise DimensionMismatch("one node array per axis required")
        v = self.cum
        for j, xs in enumerate(axes):
            W = _interp_matrix(self.breaks[j], xs)
            v = np.moveaxis(np.tensordot(W, v, axes=(1, j)), 0, j)
        return v

    def box_mass(self, lower, upper) -> float:
        """Mass of the box [lower, upper] by inclusion-exclusion of the cdf."""
        return box_mass(self, lower, upper)

    # -- algebra ----------------------------------------------------------

    def margin(self, axes) -> "GridCopula":
        """Marginal copula for the given sorted axis set (1-based or 0-based
        accepted as a sequence of ints; interpreted 0-based)."""
        axes = _check_index_set(axes, self.dim)
        drop = tuple(k for k in range(self.dim) if k not in axes)
        masses = self.masses.sum(axis=drop) if drop else self.masses
        return GridCopula([self.breaks[k] for k in axes], masses, validate=False)

    def reflect(self, axis: int) -> "GridCopula":
        """Push-forward under ``x_axis -> 1 - x_axis``."""
        if not 0 <= axis < self.dim:
            raise BadAxis(f"axis {axis} out of range for dim {self.dim}")
        breaks = list(self.breaks)
        breaks[axis] = (1.0 - breaks[axis])[::-1]
        masses = np.flip(self.masses, axis=axis)
        return GridCopula(breaks, masses, validate=False)

    def permute(self, order) -> "GridCopula":
        """Relabel axes: new axis k is old axis order[k]."""
        order = list(order)
        if sorted(order) != list(range(self.dim)):
            raise BadIndexSet(f"{order} is not a permutation of 0..{self.dim - 1}")
        return GridCopula(
            [self.breaks[k] for k in order],
            np.ascontiguousarray(np.transpose(self.masses, order)),
            validate=False,
        )

    def refine_to(self, new_breaks) -> "GridCopula":
        """Re-express on finer breakpoints (must contain the current ones);
        the cdf is unchanged everywhere."""
        masses = self.masses
        for ax in range(self.dim):
            T = _refine_matrix(self.breaks[ax], _as_breaks(new_breaks[ax]))
            masses = np.moveaxis(np.tensordot(T, masses, axes=(1, ax)), 0, ax)
        return GridCopula(new_breaks, np.ascontiguousarray(masses), validate=False)

    def multilinear_breaks(self):
        """Per-axis breakpoints between which the cdf is multilinear."""
        return self.breaks

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        """Serialize; bit-exact round trip for double-representable values."""
        payload = {"dim": self.dim, "order": GRID_ORDER_TAG}
        if self.is_uniform:
            payload["resolutions"] = self.resolutions
        else:
            payload["breaks"] = [b.tolist() for b in self.breaks]
        payload["masses"] = self.masses.ravel().tolist()
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "GridCopula":
        payload = json.loads(text)
        if payload.get("order", GRID_ORDER_TAG) != GRID_ORDER_TAG:
            raise DimensionMismatch(f"unsupported cell order {payload.get('order')!r}")
        if "breaks" in payload:
            breaks = [np.asarray(b, dtype=float) for b in payload["breaks"]]
        else:
            breaks = [uniform_breaks(n) for n in payload["resolutions"]]
        shape = tuple(len(b) - 1 for b in breaks)
        masses = np.asarray(payload["masses"], dtype=float).reshape(shape)
        return cls(breaks, masses)

    def __repr__(self):
        kind = "uniform" if self.is_uniform else "nonuniform"
        return f"GridCopula(dim={self.dim}, shape={self.shape}, {kind})"


# -- module-level operations ------------------------------------------------


def new_grid(dim: int, resolutions, masses) -> GridCopula:
    """Validated uniform checkerboard copula.

    Parameters
    ----------
    dim : int
        Dimension (>= 2).
    resolutions : sequence of int
        Cells per axis, ``N_1 .. N_d``.
    masses : array-like
        Cell masses, either with shape ``resolutions`` or flat in C order.
    """
    resolutions = [int(n) for n in resolutions]
    if dim < 2:
        raise BadDimension("dim must be >= 2")
    if len(resolutions) != dim or any(n < 1 for n in resolutions):
        raise DimensionMismatch("need one resolution >= 1 per axis")
    try:
        masses = np.asarray(masses, dtype=float).reshape(tuple(resolutions))
    except ValueError as exc:
        raise DimensionMismatch(str(exc)) from exc
    return GridCopula([uniform_breaks(n) for n in resolutions], masses)


def box_mass(copula, lower, upper) -> float:
    """Mass of a box under any copula exposing ``cdf_many``.

    Inclusion-exclusion over the ``2^d`` corners; the result may carry a
    round-off of order 1e-16 and is guaranteed ``>= -1e-12`` for valid input.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = copula.dim
    if lower.shape != (d,) or upper.shape != (d,):
        raise DimensionMismatch(f"box corners must have length {d}")
    if np.any(lower > upper):
        raise InvertedBox("box lower corner exceeds upper corner")
    corners, signs = _corner_matrix(d)
    pts = np.where(corners, upper[None, :], lower[None, :])
    return float(np.dot(signs, copula.cdf_many(pts)))


def _corner_matrix(d: int):
    corners = np.array(
        [[(k >> j) & 1 for j in range(d)] for k in range(2**d)], dtype=bool
    )
    signs = np.where(corners.sum(axis=1) % 2 == d % 2, 1.0, -1.0)
    return corners, signs


def _check_index_set(axes, dim: int) -> tuple:
    axes = tuple(int(a) for a in axes)
    if len(axes) < 1 or sorted(set(axes)) != list(axes):
        raise BadIndexSet(f"{axes} must be sorted and duplicate free")
    if axes[0] < 0 or axes[-1] >= dim:
        raise BadIndexSet(f"{axes} out of range for dim {dim}")
    return axes


def _refine_matrix(old: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Mass transfer matrix (new cells x old cells) for constant densities."""
    if not np.all(np.isin(old, new)):
        raise ResolutionOverflow("new breakpoints must contain the old ones")
    T = np.zeros((len(new) - 1, len(old) - 1))
    src = np.searchsorted(old, new[:-1], side="right") - 1
    T[np.arange(len(new) - 1), src] = np.diff(new) / np.diff(old)[src]
    return T


def _union_breaks(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    merged = np.union1d(a, b)
    return merged


def _lcm_breaks(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = len(a) - 1, len(b) - 1
    return uniform_breaks(int(np.lcm(na, nb)))


def common_refinement(c1: GridCopula, c2: GridCopula, cell_limit: int = DEFAULT_CELL_LIMIT):
    """Re-express two grid copulas on a shared per-axis grid.

    Uniform axis pairs refine to the lcm resolution, mixed ones to the union
    of breakpoints; cdfs are unchanged at every point.

    Raises
    ------
    ResolutionOverflow
        If the refined grid would exceed ``cell_limit`` cells.
    """
    if c1.dim != c2.dim:
        raise DimensionMismatch("operands differ in dimension")
    target = []
    for b1, b2 in zip(c1.breaks, c2.breaks):
        u1 = np.array_equal(b1, uniform_breaks(len(b1) - 1))
        u2 = np.array_equal(b2, uniform_breaks(len(b2) - 1))
        target.append(_lcm_breaks(b1, b2) if (u1 and u2) else _union_breaks(b1, b2))
    cells = int(np.prod([len(t) - 1 for t in target]))
    if cells > cell_limit:
        raise ResolutionOverflow(f"refinement needs {cells} cells > limit {cell_limit}")
    return c1.refine_to(target), c2.refine_to(target)


def convex_combine(weights, copulas) -> GridCopula:
    """Cellwise convex combination on the common refinement."""
    weights = np.asarray(weights, dtype=float)
    copulas = list(copulas)
    if len(weights) != len(copulas) or len(copulas) == 0:
        raise WeightError("need one weight per copula")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > VALIDATION_TOL:
        raise WeightError(f"weights {weights.tolist()} must be >= 0 and sum to 1")
    acc = copulas[0]
    for c in copulas[1:]:
        acc, _ = common_refinement(acc, c)
    refined = []
    for c in copulas:
        r, _ = common_refinement(c, acc)
        refined.append(r.masses)
    masses = sum(w * m for w, m in zip(weights, refined))
    return GridCopula(acc.breaks, masses, validate=False)


def product_extend(base: GridCopula, dim: int) -> GridCopula:
    """Extend to ``dim`` coordinates by tensoring with independent axes
    (one cell per new axis)."""
    if dim <= base.dim:
        raise BadDimension(f"target dim {dim} must exceed base dim {base.dim}")
    extra = dim - base.dim
    masses = base.masses.reshape(base.shape + (1,) * extra)
    breaks = list(base.breaks) + [uniform_breaks(1)] * extra
    return GridCopula(breaks, masses, validate=False)
