"""Markov kernels and conditional copulas of checkerboard copulas.

For a grid copula the kernel conditioning on an axis set is piecewise
constant across conditioning cells and multilinear within the remaining
coordinates, so every quantity here (conditional margins, conditional
copulas obtained by Sklar inversion, the partial copula, the
simplifiedness gap and the integrated conditional-difference functional)
is computed from finite node data without sampling.

Conditioning defaults to the last coordinate; contiguous blocks of axes
are supported for the vine ladder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadAxis, DegenerateMargins, DimensionMismatch, ZeroMassSlab
from .grid import GridCopula, _interp_matrix, box_mass
from .quadrature import integrate_abs_multilinear

_MARGIN_TOL = 1e-12


# -- small value types ---------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseLinearCdf:
    """Continuous piecewise-linear distribution function on [0, 1]."""

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vs)
        if len(xs) != len(vs) or len(xs) < 2:
            raise DimensionMismatch("breakpoints and values must align")
        if abs(vs[0]) > _MARGIN_TOL or abs(vs[-1] - 1.0) > _MARGIN_TOL:
            raise DegenerateMargins("conditional cdf must run from 0 to 1")
        if np.any(np.diff(vs) < -_MARGIN_TOL):
            raise DegenerateMargins("conditional cdf must be nondecreasing")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)

    def quasi_inverse(self, p):
        """Generalized inverse ``inf {x : F(x) >= p}`` (left endpoints on flats)."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.empty_like(p)
        for i, pi in enumerate(p):
            k = int(np.searchsorted(self.values, pi, side="left"))
            if k == 0:
                out[i] = self.xs[0]
            elif k >= len(self.values):
                out[i] = self.xs[-1]
            elif self.values[k] == pi:
                out[i] = self.xs[k]
            else:
                dv = self.values[k] - self.values[k - 1]
                out[i] = self.xs[k - 1] + (pi - self.values[k - 1]) / dv * (
                    self.xs[k] - self.xs[k - 1]
                )
        return out if out.shape != (1,) else float(out[0])

    def preimages(self, targets) -> np.ndarray:
        """All breakpoints plus one preimage point per target value crossed
        strictly inside a linear piece (flat pieces contribute their ends)."""
        pts = set(self.xs.tolist())
        for a in range(len(self.xs) - 1):
            v0, v1 = self.values[a], self.values[a + 1]
            if v1 <= v0:
                continue
            for s in targets:
                if v0 < s < v1:
                    x = self.xs[a] + (s - v0) / (v1 - v0) * (self.xs[a + 1] - self.xs[a])
                    pts.add(float(x))
        return np.array(sorted(pts))


class BilinearSurface:
    """Bivariate copula surface on a nonuniform node grid.

    Values are bilinearly interpolated between nodes; with uniform margins
    at the nodes this is exactly the cdf of a bivariate checkerboard.
    """

    __slots__ = ("xs", "ys", "values")

    def __init__(self, xs, ys, values, check: bool = True):
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.xs), len(self.ys)):
            raise DimensionMismatch("surface values must match node counts")
        if check:
            self.check_margins()

    def check_margins(self, tol: float = _MARGIN_TOL):
        err = max(
            float(np.max(np.abs(self.values[:, -1] - self.xs))),
            float(np.max(np.abs(self.values[-1, :] - self.ys))),
            float(np.max(np.abs(self.values[:, 0]))),
            float(np.max(np.abs(self.values[0, :]))),
        )
        if err > tol:
            raise DegenerateMargins(f"surface margins deviate by {err:.3e}")

    def eval_lattice(self, xs2, ys2) -> np.ndarray:
        wx = _interp_matrix(self.xs, np.asarray(xs2, dtype=float))
        wy = _interp_matrix(self.ys, np.asarray(ys2, dtype=float))
        return wx @ self.values @ wy.T

    def eval_many(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        wx = _interp_matrix(self.xs, pts[:, 0])
        wy = _interp_matrix(self.ys, pts[:, 1])
        return np.einsum("pi,ij,pj->p", wx, self.values, wy)

    def refine_to(self, xs2, ys2) -> "BilinearSurface":
        return BilinearSurface(xs2, ys2, self.eval_lattice(xs2, ys2), check=False)

    def key(self) -> bytes:
        return self.xs.tobytes() + b"|" + self.ys.tobytes() + b"|" + self.values.tobytes()


@dataclass
class ConditionalFamily:
    """Per-slab conditional decomposition w.r.t. one conditioning axis.

    ``weights`` are the slab masses (equal to slab widths for a copula) and
    sum to one; ``surfaces[k]`` is the conditional copula of slab ``k`` and
    ``margins1[k]``/``margins2[k]`` are the conditional univariate margins.
    """

    t_breaks: np.ndarray
    weights: np.ndarray
    surfaces: list
    margins1: list
    margins2: list

    def __post_init__(self):
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-9:
            raise DimensionMismatch("conditional family weights must sum to 1")
        for s in self.surfaces:
            s.check_margins()


# -- kernels -------------------------------------------------------------------


def _normalize_cond_axes(C, cond_axes):
    if cond_axes is None:
        return (C.dim - 1,)
    axes = tuple(int(a) for a in cond_axes)
    if any(a < 0 or a >= C.dim for a in axes) or len(set(axes)) != len(axes):
        raise BadAxis(f"conditioning axes {axes} invalid for dim {C.dim}")
    return axes


def _conditioning_cell(C: GridCopula, t, cond_axes):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if len(t) != len(cond_axes):
        raise DimensionMismatch("one conditioning value per conditioning axis")
    cell = []
    for a, ti in zip(cond_axes, t):
        b = C.breaks[a]
        idx = int(np.clip(np.searchsorted(b, ti, side="right") - 1, 0, len(b) - 2))
        cell.append(idx)
    return tuple(cell)


def _fiber(C: GridCopula, cond_axes, cell):
    """Mass tensor over the free axes for one conditioning cell."""
    index = [slice(None)] * C.dim
    for a, i in zip(cond_axes, cell):
        index[a] = i
    return C.masses[tuple(index)]


def kernel_cdf(C: GridCopula, t, u, cond_axes=None) -> float:
    """Markov kernel ``K(t, [0, u])`` of a grid copula.

    ``cond_axes`` selects the conditioning coordinates (default: the last);
    ``u`` lists the remaining coordinates in ascending axis order.  The
    kernel is constant in ``t`` across conditioning cells and multilinear
    in ``u`` within cells.
    """
    cond_axes = _normalize_cond_axes(C, cond_axes)
    cell = _conditioning_cell(C, t, cond_axes)
    fiber = _fiber(C, cond_axes, cell)
    w = float(fiber.sum())
    if w <= 0.0:
        raise ZeroMassSlab(f"conditioning cell {cell} has zero mass")
    free = [a for a in range(C.dim) if a not in cond_axes]
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if len(u) != len(free):
        raise DimensionMismatch(f"u must list the {len(free)} free coordinates")
    cum = fiber
    for ax in range(cum.ndim):
        cum = np.cumsum(cum, axis=ax)
    cum = np.pad(cum, [(1, 0)] * cum.ndim)
    val = _multilinear_at(cum, [C.breaks[a] for a in free], u)
    return float(val / w)


def _multilinear_at(cum, breaks_list, u):
    vec = cum
    for j, b in enumerate(breaks_list):
        W = _interp_matrix(b, np.array([u[j]]))
        vec = np.tensordot(W, vec, axes=(1, 0))[0]
    return float(vec)


def conditional_margin(C: GridCopula, j: int, t, cond_axes=None) -> PiecewiseLinearCdf:
    """Conditional univariate margin of coordinate ``j`` given the
    conditioning cell containing ``t``."""
    cond_axes = _normalize_cond_axes(C, cond_axes)
    if j in cond_axes or not 0 <= j < C.dim:
        raise BadAxis(f"axis {j} is not a free coordinate")
    cell = _conditioning_cell(C, t, cond_axes)
    fiber = _fiber(C, cond_axes, cell)
    w = float(fiber.sum())
    if w <= 0.0:
        raise ZeroMassSlab(f"conditioning cell {cell} has zero mass")
    free = [a for a in range(C.dim) if a not in cond_axes]
    other = tuple(k for k, a in enumerate(free) if a != j)
    line = fiber.sum(axis=other) if other else fiber
    vals = np.concatenate([[0.0], np.cumsum(line)])
    vals /= vals[-1]
    vals[-1] = 1.0
    return PiecewiseLinearCdf(C.breaks[j], vals)


# -- conditional copulas (Sklar inversion on grids) ----------------------------


def _surface_from_joint(bx, by, joint):
    """Conditional copula surface and margins from one conditioning fiber."""
    cum = np.pad(np.cumsum(np.cumsum(joint, axis=0), axis=1), ((1, 0), (1, 0)))
    w = cum[-1, -1]
    K = cum / w
    K[-1, -1] = 1.0
    f1 = K[:, -1].copy()
    f2 = K[-1, :].copy()
    f1[-1] = 1.0
    f2[-1] = 1.0
    col = joint.sum(axis=1)
    row = joint.sum(axis=0)
    if np.any((np.diff(f1) <= 1e-15) & (col > 1e-12)) or np.any(
        (np.diff(f2) <= 1e-15) & (row > 1e-12)
    ):
        raise DegenerateMargins("flat conditional margin overlaps positive mass")
    sx, ix = np.unique(f1, return_index=True)
    sy, iy = np.unique(f2, return_index=True)
    S = BilinearSurface(sx, sy, K[np.ix_(ix, iy)], check=False)
    m1 = PiecewiseLinearCdf(bx, f1)
    m2 = PiecewiseLinearCdf(by, f2)
    return S, m1, m2


def slab_family(C, axis_a: int = 0, axis_b: int = 1, cond_axis=None) -> ConditionalFamily:
    """Conditional family of a three-dimensional copula w.r.t. one axis."""
    if hasattr(C, "slab_family_fast"):
        return C.slab_family_fast()
    if C.dim != 3:
        raise DimensionMismatch("slab_family expects a three-dimensional copula")
    cond = C.dim - 1 if cond_axis is None else int(cond_axis)
    order = [axis_a, axis_b, cond]
    if sorted(order) != [0, 1, 2]:
        raise BadAxis(f"axes ({axis_a}, {axis_b}, {cond}) must partition 0..2")
    M = np.transpose(C.masses, order)
    bx, by, bt = (C.breaks[axis_a], C.breaks[axis_b], C.breaks[cond])
    weights = np.diff(bt)
    surfaces, m1s, m2s = [], [], []
    for k in range(M.shape[2]):
        S, m1, m2 = _surface_from_joint(bx, by, M[:, :, k])
        surfaces.append(S)
        m1s.append(m1)
        m2s.append(m2)
    return ConditionalFamily(bt, weights, surfaces, m1s, m2s)


def conditional_copula(C, slab_index: int) -> BilinearSurface:
    """Conditional copula of coordinates (1, 2) given the last-axis slab."""
    fam = slab_family(C)
    if not 0 <= slab_index < len(fam.surfaces):
        raise BadAxis(f"slab {slab_index} out of range")
    return fam.surfaces[slab_index]


def partial_copula(C) -> BilinearSurface:
    """Slab-weighted average of the conditional copulas (the expected
    conditional copula)."""
    fam = slab_family(C)
    return average_surfaces(fam.weights, fam.surfaces)


def average_surfaces(weights, surfaces) -> BilinearSurface:
    xs = surfaces[0].xs
    ys = surfaces[0].ys
    for s in surfaces[1:]:
        xs = np.union1d(xs, s.xs)
        ys = np.union1d(ys, s.ys)
    acc = np.zeros((len(xs), len(ys)))
    for w, s in zip(weights, surfaces):
        if w > 0:
            acc += w * s.eval_lattice(xs, ys)
    acc /= float(np.sum(weights))
    return BilinearSurface(xs, ys, acc, check=False)


# -- diagnostics ---------------------------------------------------------------


def surface_l1_distance(a: BilinearSurface, b: BilinearSurface, tol: float = 1e-11):
    """Certified integral of ``|a - b|`` over the unit square."""
    xs = np.union1d(a.xs, b.xs)
    ys = np.union1d(a.ys, b.ys)
    diff = a.eval_lattice(xs, ys) - b.eval_lattice(xs, ys)
    return integrate_abs_multilinear(diff, (xs, ys), tol=tol)


def is_simplified(C, tol: float = 1e-9):
    """Simplifiedness gap of a three-dimensional grid copula.

    Returns ``(flag, delta)`` where ``delta`` is the largest integrated
    absolute difference between two slab conditional copulas and ``flag``
    is ``delta <= tol``.  Identical surfaces are grouped first, so a
    simplified copula with many slabs costs one comparison.
    """
    fam = slab_family(C)
    groups: dict = {}
    for s in fam.surfaces:
        groups.setdefault(s.key(), s)
    distinct = list(groups.values())
    delta = 0.0
    for i in range(len(distinct)):
        for j in range(i + 1, len(distinct)):
            val, _ = surface_l1_distance(distinct[i], distinct[j], tol=min(1e-11, tol / 10))
            delta = max(delta, val)
    return delta <= tol, delta


def j_functional(C, D, tol: float = 1e-8):
    """Integrated absolute difference of the conditional-copula fields.

    Returns ``(value, error_bound)``; the bound is certified (bracket width
    of the underlying piecewise-multilinear quadrature).
    """
    fam_c = slab_family(C)
    fam_d = slab_family(D)
    t = np.union1d(fam_c.t_breaks, fam_d.t_breaks)
    total = 0.0
    err = 0.0
    cache: dict = {}
    for lo, hi in zip(t[:-1], t[1:]):
        mid = (lo + hi) / 2
        kc = int(np.searchsorted(fam_c.t_breaks, mid, side="right") - 1)
        kd = int(np.searchsorted(fam_d.t_breaks, mid, side="right") - 1)
        sc = fam_c.surfaces[kc]
        sd = fam_d.surfaces[kd]
        key = (sc.key(), sd.key())
        if key not in cache:
            cache[key] = surface_l1_distance(sc, sd, tol=tol / max(len(t) - 1, 1))
        val, half = cache[key]
        total += (hi - lo) * val
        err += (hi - lo) * half
    return total, err


def disintegration_residual(C: GridCopula, lower, upper) -> float:
    """Gap between the slabwise kernel integral over a box and the box mass
    (two independent computational routes for the same measure)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    cond = C.dim - 1
    bt = C.breaks[cond]
    lhs = 0.0
    for k in range(len(bt) - 1):
        width = min(upper[cond], bt[k + 1]) - max(lower[cond], bt[k])
        if width <= 0:
            continue
        fiber = C.masses[..., k]
        w = float(fiber.sum())
        if w <= 0:
            continue
        cum = fiber
        for ax in range(cum.ndim):
            cum = np.cumsum(cum, axis=ax)
        cum = np.pad(cum, [(1, 0)] * cum.ndim)
        corners = 0.0
        free_breaks = [C.breaks[a] for a in range(C.dim - 1)]
        for mask in range(2 ** (C.dim - 1)):
            pt = [
                upper[j] if (mask >> j) & 1 else lower[j]
                for j in range(C.dim - 1)
            ]
            sign = (-1) ** ((C.dim - 1) - bin(mask).count("1"))
            corners += sign * _multilinear_at(cum, free_breaks, pt)
        lhs += width * corners / w
    rhs = box_mass(C, lower, upper)
    return abs(lhs - rhs)
