import numpy as np
import pytest
from numpy.testing import assert_allclose

from copulakit import (
    GridCopula,
    bstar,
    conditional_copula,
    conditional_margin,
    discretize,
    disintegration_residual,
    empirical_copula,
    example54_copula,
    independence,
    is_simplified,
    j_functional,
    kernel_cdf,
    partial_copula,
    sample,
    slab_family,
)
from copulakit.conditioning import PiecewiseLinearCdf, _surface_from_joint
from copulakit.errors import BadAxis, DegenerateMargins, ZeroMassSlab
from conftest import a1_cdf, a2_cdf


def riemann_l1(f, g, n=400):
    """Midpoint-rule oracle for the integral of |f - g| over the unit square."""
    mids = (np.arange(n) + 0.5) / n
    U, V = np.meshgrid(mids, mids, indexing="ij")
    return float(np.abs(f(U, V) - g(U, V)).mean())


# Frozen constants, computed from the hand-written block cdfs:
# each quadrant of the unit square contributes 1/32 to the integral of
# |diagonal - antidiagonal|, and half of that to |block - product|.
DELTA_CUBE = 4 * (1 / 32)          # = 1/8
L1_BLOCK_VS_PRODUCT = 4 * (1 / 64)  # = 1/16


def test_oracle_constants_are_consistent():
    pi = lambda u, v: u * v
    assert riemann_l1(a1_cdf, a2_cdf) == pytest.approx(DELTA_CUBE, abs=2e-3)
    assert riemann_l1(a1_cdf, pi) == pytest.approx(L1_BLOCK_VS_PRODUCT, abs=2e-3)
    assert riemann_l1(a2_cdf, pi) == pytest.approx(L1_BLOCK_VS_PRODUCT, abs=2e-3)


class TestKernel:
    def test_cube_first_slab(self, cube):
        assert kernel_cdf(cube, 0.25, [0.5, 0.5]) == 0.5

    def test_bstar_last_slab(self):
        assert kernel_cdf(bstar(), 0.9, [0.5]) == 0.75

    def test_all_ones(self, cube):
        assert kernel_cdf(cube, 0.7, [1.0, 1.0]) == 1.0

    def test_piecewise_constant_in_t(self, cube):
        vals = {kernel_cdf(cube, t, [0.3, 0.8]) for t in (0.01, 0.2, 0.49)}
        assert len(vals) == 1

    def test_zero_mass_cell_raises(self, cube):
        # conditioning on the first two axes: the (0,1/2)x(1/2,1) cell holds
        # mass, but a diagonal fiber of the empty cells does not exist;
        # build a grid with an empty conditioning cell instead
        m = np.zeros((2, 2, 2))
        m[0, 0] = [0.25, 0.25]
        m[1, 1] = [0.25, 0.25]
        g = GridCopula([np.array([0.0, 0.5, 1.0])] * 3, m)
        with pytest.raises(ZeroMassSlab):
            kernel_cdf(g, [0.25, 0.75], [0.5], cond_axes=(0, 1))

    def test_block_conditioning(self, cube):
        # conditioning on the first two coordinates of the block copula:
        # inside a diagonal cell the third coordinate is uniform on (0, 1/2)
        val = kernel_cdf(cube, [0.25, 0.25], [0.25], cond_axes=(0, 1))
        assert val == pytest.approx(0.5, abs=1e-15)

    def test_margin_identity(self, cube, random_grid):
        # kernel of a margin = kernel of the full copula with dropped
        # coordinates pushed to 1
        for g in (cube, random_grid((3, 2, 4))):
            for t in (0.1, 0.55, 0.93):
                for u in (0.2, 0.8):
                    assert kernel_cdf(g.margin((0, 2)), t, [u]) == pytest.approx(
                        kernel_cdf(g, t, [u, 1.0]), abs=1e-14
                    )


class TestConditionalMargin:
    def test_cube_margin_is_identity(self, cube):
        f = conditional_margin(cube, 0, 0.25)
        assert_allclose(f([0.1, 0.5, 0.9]), [0.1, 0.5, 0.9], atol=1e-15)

    def test_bstar_slopes(self):
        f = conditional_margin(bstar(), 0, 0.1)
        # slope 1/2 before the midpoint, 3/2 after
        assert f(0.5) == pytest.approx(0.25, abs=1e-15)
        assert f(0.25) == pytest.approx(0.125, abs=1e-15)
        assert f(0.75) == pytest.approx(0.625, abs=1e-15)

    def test_ends_at_one(self, random_grid):
        g = random_grid((3, 3, 3))
        for t in (0.1, 0.5, 0.9):
            assert conditional_margin(g, 1, t)(1.0) == 1.0

    def test_bad_axis(self, cube):
        with pytest.raises(BadAxis):
            conditional_margin(cube, 2, 0.5)

    def test_quasi_inverse_left_endpoint(self):
        f = PiecewiseLinearCdf(
            np.array([0.0, 0.25, 0.75, 1.0]), np.array([0.0, 0.5, 0.5, 1.0])
        )
        assert f.quasi_inverse(0.5) == 0.25
        assert f.quasi_inverse(0.25) == 0.125
        assert f.quasi_inverse(0.0) == 0.0
        assert f.quasi_inverse(1.0) == 1.0


class TestConditionalCopula:
    def test_cube_slabs_are_the_two_block_copulas(self, cube):
        s0 = conditional_copula(cube, 0)
        s1 = conditional_copula(cube, 1)
        g = np.linspace(0, 1, 9)
        for u in g:
            for v in g:
                assert s0.eval_many([[u, v]])[0] == pytest.approx(a1_cdf(u, v), abs=1e-14)
                assert s1.eval_many([[u, v]])[0] == pytest.approx(a2_cdf(u, v), abs=1e-14)

    def test_independence_slabs(self, pi4):
        s = conditional_copula(pi4, 2)
        assert s.eval_many([[0.3, 0.8]])[0] == pytest.approx(0.24, abs=1e-14)

    def test_uniform_margins_at_nodes(self, random_grid):
        fam = slab_family(random_grid((4, 3, 3)))
        for s in fam.surfaces:
            s.check_margins(1e-12)

    def test_degenerate_margin_reported(self):
        # nondecreasing-from-0-to-1 is enforced on conditional margins; a
        # decreasing candidate is reported, never silently repaired
        with pytest.raises(DegenerateMargins):
            PiecewiseLinearCdf(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.8, 0.5]))
        # flat margins over positive joint mass cannot come from nonnegative
        # cells; a signed fiber (internal misuse) is caught by the inversion
        joint = np.array([[0.5, 0.5], [1.0, -1.0]])
        with pytest.raises(DegenerateMargins):
            _surface_from_joint(np.array([0.0, 0.5, 1.0]),
                                np.array([0.0, 0.5, 1.0]), joint)


class TestPartialCopula:
    def test_cube_partial_is_independence(self, cube):
        p = partial_copula(cube)
        pts = np.random.default_rng(3).random((50, 2))
        assert_allclose(p.eval_many(pts), pts.prod(axis=1), atol=1e-14)

    def test_independence_fixed(self, pi4):
        p = partial_copula(pi4)
        pts = np.random.default_rng(4).random((20, 2))
        assert_allclose(p.eval_many(pts), pts.prod(axis=1), atol=1e-14)

    def test_composite_partial_value(self):
        # the partial copula of the composite construction averages the four
        # shuffles; at (1/4, 1/2) the average is 1/16
        d = discretize(example54_copula(), [64, 64, 4])
        p = partial_copula(d)
        assert p.eval_many([[0.25, 0.5]])[0] == pytest.approx(1 / 16, abs=2e-2)


class TestIsSimplified:
    def test_cube_gap(self, cube):
        flag, delta = is_simplified(cube)
        assert not flag
        assert delta == pytest.approx(DELTA_CUBE, abs=1e-9)

    def test_independence_simplified(self, pi4):
        flag, delta = is_simplified(pi4)
        assert flag and delta <= 1e-12

    def test_empirical_always_simplified(self, cube):
        pts = sample(cube, 50, seed=11)
        flag, delta = is_simplified(empirical_copula(pts))
        assert flag and delta == 0.0

    def test_small_empirical_grid_route(self, cube):
        # same statement through the dense checkerboard machinery
        pts = sample(cube, 12, seed=12)
        flag, delta = is_simplified(empirical_copula(pts).to_grid())
        assert flag and delta <= 1e-12


class TestJFunctional:
    def test_identical_is_zero(self, cube):
        val, err = j_functional(cube, cube)
        assert val == 0.0 and err == 0.0

    def test_independence_vs_cube(self, cube, pi2):
        val, err = j_functional(pi2, cube)
        assert val == pytest.approx(L1_BLOCK_VS_PRODUCT, abs=1e-9)
        assert err <= 1e-9

    def test_lower_bound_for_simplified_operands(self, cube):
        # any simplified operand keeps distance >= delta / slab count
        _, delta = is_simplified(cube)
        for seed in (1, 2, 3):
            emp = empirical_copula(sample(cube, 64, seed=seed))
            val, _ = j_functional(emp, cube)
            assert val >= delta / 2 - 1e-9

    def test_symmetric(self, cube, pi2):
        a, _ = j_functional(pi2, cube)
        b, _ = j_functional(cube, pi2)
        assert a == pytest.approx(b, abs=1e-12)


class TestDisintegrationResidual:
    def test_cube_octant(self, cube):
        assert disintegration_residual(cube, [0, 0, 0], [0.5, 0.5, 0.5]) <= 1e-12

    def test_composite_box(self):
        d = discretize(example54_copula(), [8, 8, 4])
        assert disintegration_residual(d, [0, 0, 0], [0.5, 0.5, 0.75]) <= 1e-12

    def test_random_grid_aligned_boxes(self, random_grid, rng):
        g = random_grid((4, 3, 4))
        for _ in range(100):
            lo, hi = [], []
            for b in g.breaks:
                i, j = sorted(rng.choice(len(b), 2, replace=False))
                lo.append(b[i])
                hi.append(b[j])
            assert disintegration_residual(g, lo, hi) <= 1e-12


class TestReconstruction:
    def test_slab_sum_reproduces_cdf(self, cube, random_grid):
        # summing the per-slab conditional surfaces against the margins
        # reproduces the copula at grid nodes
        for g in (cube, random_grid((3, 2, 3))):
            fam = slab_family(g)
            for u1 in g.breaks[0]:
                for u2 in g.breaks[1]:
                    for ti, t_hi in enumerate(fam.t_breaks[1:]):
                        total = 0.0
                        for k in range(ti + 1):
                            s = fam.surfaces[k]
                            total += fam.weights[k] * s.eval_many(
                                [[fam.margins1[k](u1), fam.margins2[k](u2)]]
                            )[0]
                        assert total == pytest.approx(
                            g.cdf([u1, u2, t_hi]), abs=1e-12
                        )
