"""Empirical copulas and sampling.

The empirical copula of an n-point tie-free sample is the d-linear
interpolation of the empirical subcopula: a checkerboard with resolution n
per axis carrying mass 1/n in exactly one cell per slab, located by the
coordinatewise ranks.  It is stored in rank form so that large n stays
cheap; a dense :class:`~copulakit.grid.GridCopula` view is available for
small n.  Every slab's conditional copula is the independence copula, which
the conditioning layer exploits through :meth:`slab_family_fast`.
"""

from __future__ import annotations

import csv

import numpy as np

from .conditioning import BilinearSurface, ConditionalFamily, PiecewiseLinearCdf
from .errors import DimensionMismatch, TiesDetected
from .grid import GridCopula, box_mass, uniform_breaks

_EXACT_LATTICE_BUDGET = 50_000_000


def sample(copula: GridCopula, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` points from a grid copula (PCG64 generator, fixed seed).

    A cell is selected with probability equal to its mass, then the point is
    uniform within the cell.  Ties are astronomically unlikely but coordinates
    are re-drawn if any occur, so the result is always tie free.
    """
    if n < 1:
        raise DimensionMismatch("need n >= 1")
    rng = np.random.default_rng(seed)
    flat = np.clip(copula.masses.ravel(), 0.0, None)
    flat = flat / flat.sum()
    cells = rng.choice(len(flat), size=n, p=flat)
    idx = np.unravel_index(cells, copula.shape)
    pts = np.empty((n, copula.dim))
    for j in range(copula.dim):
        b = copula.breaks[j]
        lo = b[idx[j]]
        width = b[idx[j] + 1] - b[idx[j]]
        x = lo + width * rng.random(n)
        for _ in range(64):
            vals, counts = np.unique(x, return_counts=True)
            if counts.max() == 1:
                break
            dup = np.isin(x, vals[counts > 1])
            x[dup] = lo[dup] + width[dup] * rng.random(int(dup.sum()))
        pts[:, j] = x
    return pts


def save_sample(path, points: np.ndarray):
    """Write a sample as CSV with header ``x1,...,xd`` (bit-exact floats)."""
    points = np.asarray(points, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(points.shape[1])])
        for row in points:
            writer.writerow([repr(float(x)) for x in row])


def load_sample(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    pts = np.asarray(rows, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != len(header):
        raise DimensionMismatch("malformed sample file")
    return pts


class EmpiricalCopula:
    """Rank-based empirical copula (d-linear subcopula interpolation)."""

    __slots__ = ("ranks", "n", "dim")

    def __init__(self, ranks: np.ndarray):
        ranks = np.asarray(ranks, dtype=np.int64)
        self.ranks = ranks
        self.n, self.dim = ranks.shape
        for j in range(self.dim):
            if len(np.unique(ranks[:, j])) != self.n:
                raise TiesDetected(f"ranks along axis {j} are not a permutation")

    # -- evaluation -----------------------------------------------------------

    def cdf(self, u) -> float:
        return float(self.cdf_many(np.asarray(u, dtype=float)[None, :])[0])

    def cdf_many(self, points, chunk: int = 256) -> np.ndarray:
        """Exact d-linear cdf: each sample point contributes the product of
        per-axis overlap fractions ``clip(n x - (r-1), 0, 1)``."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatch(f"points must have shape (m, {self.dim})")
        out = np.empty(len(points))
        for s in range(0, len(points), chunk):
            blk = points[s : s + chunk]
            acc = np.ones((len(blk), self.n))
            for j in range(self.dim):
                acc *= np.clip(
                    self.n * blk[:, j][:, None] - (self.ranks[:, j][None, :] - 1),
                    0.0,
                    1.0,
                )
            out[s : s + chunk] = acc.sum(axis=1) / self.n
        return out

    def cdf_on_lattice(self, axes) -> np.ndarray:
        """Exact values on a product lattice when affordable, else the step
        subcopula (callers add the ``dim/n`` gap to their certificates)."""
        sizes = [len(a) for a in axes]
        if self.n * int(np.prod(sizes)) <= _EXACT_LATTICE_BUDGET:
            letters = "abcde"
            ws = [
                np.clip(self.n * np.asarray(a, dtype=float)[None, :]
                        - (self.ranks[:, j][:, None] - 1), 0.0, 1.0)
                for j, a in enumerate(axes)
            ]
            spec = ",".join(f"i{letters[j]}" for j in range(self.dim))
            spec += "->" + letters[: self.dim]
            return np.einsum(spec, *ws, optimize=True) / self.n
        return self.step_cdf_on_lattice(axes)

    def step_cdf_on_lattice(self, axes) -> np.ndarray:
        """Step subcopula ``#(ranks/n <= nodes)/n`` on a lattice; differs from
        the d-linear cdf by at most ``dim/n`` anywhere and by 0 at lattice
        points of the rank grid."""
        sizes = [len(a) + 1 for a in axes]
        hist = np.zeros(sizes)
        idx = tuple(
            np.searchsorted(np.asarray(axes[j], dtype=float), self.ranks[:, j] / self.n,
                            side="left")
            for j in range(self.dim)
        )
        np.add.at(hist, idx, 1.0)
        for ax in range(self.dim):
            hist = np.cumsum(hist, axis=ax)
        core = hist[tuple(slice(0, s - 1) for s in sizes)]
        return core / self.n

    def box_mass(self, lower, upper) -> float:
        return box_mass(self, lower, upper)

    # -- structure ------------------------------------------------------------

    def multilinear_breaks(self):
        if self.n <= 64:
            return tuple(uniform_breaks(self.n) for _ in range(self.dim))
        return None

    @property
    def lattice_gap(self) -> float:
        """Uniform bound between the step subcopula and the d-linear cdf."""
        return self.dim / self.n

    def to_grid(self) -> GridCopula:
        """Dense checkerboard view (resolution n per axis; small n only)."""
        masses = np.zeros((self.n,) * self.dim)
        masses[tuple((self.ranks - 1).T)] = 1.0 / self.n
        return GridCopula([uniform_breaks(self.n)] * self.dim, masses)

    def margin(self, axes) -> "EmpiricalCopula":
        axes = tuple(int(a) for a in axes)
        return EmpiricalCopula(self.ranks[:, list(axes)])

    def slab_family_fast(self) -> ConditionalFamily:
        """Conditional family w.r.t. the last axis: every slab's conditional
        copula is independence on the collapsed image grid."""
        if self.dim != 3:
            raise DimensionMismatch("slab families are three-dimensional")
        square = BilinearSurface(
            np.array([0.0, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[0.0, 0.0], [0.0, 1.0]]),
            check=False,
        )
        order = np.argsort(self.ranks[:, 2])
        m1, m2 = [], []
        for i in order:
            m1.append(self._ramp(self.ranks[i, 0]))
            m2.append(self._ramp(self.ranks[i, 1]))
        weights = np.full(self.n, 1.0 / self.n)
        return ConditionalFamily(
            uniform_breaks(self.n), weights, [square] * self.n, m1, m2
        )

    def _ramp(self, r: int) -> PiecewiseLinearCdf:
        xs = [0.0]
        vs = [0.0]
        if r > 1:
            xs.append((r - 1) / self.n)
            vs.append(0.0)
        xs.append(r / self.n)
        vs.append(1.0)
        if r < self.n:
            xs.append(1.0)
            vs.append(1.0)
        return PiecewiseLinearCdf(np.array(xs), np.array(vs))

    def __repr__(self):
        return f"EmpiricalCopula(n={self.n}, dim={self.dim})"


def empirical_copula(points, tie_break: str = "error") -> EmpiricalCopula:
    """Empirical copula of a sample (rows are observations).

    Ties are a hard error by default; ``tie_break="stable"`` resolves them
    deterministically by original row order instead.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 1:
        raise DimensionMismatch("sample must be a nonempty (n, d) array")
    n, d = points.shape
    ranks = np.empty((n, d), dtype=np.int64)
    for j in range(d):
        col = points[:, j]
        if tie_break == "error" and len(np.unique(col)) != n:
            raise TiesDetected(f"ties in coordinate {j + 1}")
        order = np.argsort(col, kind="stable")
        ranks[order, j] = np.arange(1, n + 1)
    return EmpiricalCopula(ranks)
