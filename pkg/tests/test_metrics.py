import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from copulakit import (
    box_mass,
    comonotone,
    common_refinement,
    convex_combine,
    countermonotone,
    d1,
    d2,
    d_inf,
    d_inf_kernel,
    discretize,
    efgm_quadratic,
    efgm_sequence_member,
    independence,
    independence_analytic,
    kl,
    metric_chain_check,
    tv,
    wcc_profile,
)
from copulakit.errors import ResolutionOverflow, SupportViolation
from copulakit.verify import random_copula_grid
from conftest import a1_cdf, a2_cdf


def riemann_d1_oracle(n=500):
    """Slabwise quadrature oracle for the kernel-L1 distance between the
    block copula and independence: average the two per-slab integrals."""
    mids = (np.arange(n) + 0.5) / n
    U, V = np.meshgrid(mids, mids, indexing="ij")
    pi = U * V
    return 0.5 * np.abs(a1_cdf(U, V) - pi).mean() + 0.5 * np.abs(a2_cdf(U, V) - pi).mean()


# Frozen from the slabwise oracle (exact value 1/16; the oracle reproduces it
# to its resolution).  The kernel fields of the two operands sit at average
# distance (|A1 - pi| + |A2 - pi|) / 2 with pi the exact midpoint of A1, A2.
D1_CUBE_PI = 1 / 16


def test_d1_oracle_consistency():
    assert riemann_d1_oracle() == pytest.approx(D1_CUBE_PI, abs=2e-3)


class TestDInf:
    def test_cube_vs_pi_exact(self, cube, pi2):
        rep = d_inf(cube, pi2)
        assert rep.value == 0.125 and rep.exactness == "exact"

    def test_identity(self, cube):
        assert d_inf(cube, cube).value == 0.0

    def test_frechet_bounds_gap(self):
        rep = d_inf(comonotone(2), countermonotone())
        assert rep.value == 0.5  # attained at the center node of the scan

    def test_efgm_distance(self):
        rep = d_inf(efgm_quadratic(3), independence_analytic(3))
        assert abs(rep.value - 1 / 64) <= 1e-6
        assert rep.exactness == "certified" and rep.error > 0

    def test_brute_force_node_max_bit_exact(self, cube, pi2):
        r1, r2 = common_refinement(cube, pi2)
        axes = r1.breaks
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        brute = np.max(np.abs(r1.cdf_many(grid) - r2.cdf_many(grid)))
        assert d_inf(cube, pi2).value == brute

    def test_symmetry_and_triangle(self, random_grid):
        a = random_grid((2, 3, 2), seed=1)
        b = random_grid((3, 2, 2), seed=2)
        c = random_grid((2, 2, 3), seed=3)
        dab = d_inf(a, b).value
        assert dab == d_inf(b, a).value
        assert dab <= d_inf(a, c).value + d_inf(c, b).value + 1e-12


class TestKernelMetrics:
    def test_d1_cube_pi_matches_oracle(self, cube, pi2):
        rep = d1(cube, pi2)
        assert rep.value == pytest.approx(D1_CUBE_PI, abs=1e-9)
        assert rep.exactness == "exact"

    def test_d1_efgm_sequence(self):
        pi_a = independence_analytic(3)
        for m in range(1, 7):
            rep = d1(efgm_sequence_member(m, 1, 3), pi_a)
            assert rep.value == pytest.approx(2.0**-m / 36, abs=1e-8)

    def test_d2_and_sup_zero_on_identity(self, cube):
        assert d2(cube, cube).value == 0.0
        assert d_inf_kernel(cube, cube).value == 0.0

    def test_sup_kernel_cube_pi(self, cube, pi2):
        assert d_inf_kernel(cube, pi2).value == 0.25

    def test_axis_flag_on_exchangeable_input(self, cube, pi2):
        # the block copula is exchangeable: conditioning axis is immaterial
        vals = {d1(cube, pi2, axis=a).value for a in (0, 1, 2)}
        assert max(vals) - min(vals) <= 1e-12

    def test_d1_symmetry(self, random_grid):
        a = random_grid((2, 2, 3), seed=4)
        b = random_grid((2, 3, 2), seed=5)
        assert d1(a, b).value == pytest.approx(d1(b, a).value, abs=1e-10)


class TestTv:
    def test_cube_pi(self, cube, pi2):
        assert tv(cube, pi2).value == 0.5

    def test_identity(self, cube):
        assert tv(cube, cube).value == 0.0

    def test_mix_linearity(self, cube, pi2):
        mixed = convex_combine([0.75, 0.25], [pi2, cube])
        assert tv(mixed, pi2).value == pytest.approx(0.25 / 2, abs=1e-15)

    def test_dominates_random_aligned_events(self, cube, pi2, rng):
        # the optimal event dominates any probe set of refined cells
        r1, r2 = common_refinement(cube, pi2)
        diff = (r1.masses - r2.masses).ravel()
        best = tv(cube, pi2).value
        for _ in range(10_000):
            mask = rng.random(diff.size) < 0.5
            assert abs(diff[mask].sum()) <= best + 1e-12


class TestKl:
    def test_cube_pi(self, cube, pi2):
        assert kl(cube, pi2).value == pytest.approx(math.log(2), abs=1e-15)

    def test_identity(self, cube):
        assert kl(cube, cube).value == 0.0

    def test_support_violation(self, cube, pi2):
        with pytest.raises(SupportViolation):
            kl(pi2, cube)

    def test_pinsker_on_positive_pairs(self, rng):
        for _ in range(20):
            a = random_copula_grid(rng, (3, 3, 3))
            b = random_copula_grid(rng, (3, 3, 3))
            assert kl(a, b).value >= 2 * tv(a, b).value ** 2 - 1e-12


class TestWccProfile:
    def test_identical_zeros(self, cube):
        prof = wcc_profile(cube, cube, [0.2, 0.8])
        assert all(p == 0 for _, p in prof)

    def test_efgm_window_height(self):
        cop = efgm_sequence_member(2, 1, 3)
        prof = dict(wcc_profile(cop, independence_analytic(3), [0.1, 0.9]))
        assert prof[0.1] == pytest.approx(1 / 16, abs=1e-12)
        assert prof[0.9] == 0.0

    def test_cube_slab_distance(self, cube, pi2):
        prof = dict(wcc_profile(cube, pi2, [0.25]))
        assert prof[0.25] == 0.25


class TestChain:
    def test_cube_pi_chain(self, cube, pi2):
        rep = metric_chain_check(cube, pi2)
        assert rep["ok"]

    def test_random_pairs_with_doubled_budget_oracle(self, rng):
        # metrics recomputed at a tighter budget agree within the reported
        # certificates (independent quadrature route)
        for _ in range(10):
            a = random_copula_grid(rng, tuple(rng.integers(1, 5, size=3)))
            b = random_copula_grid(rng, tuple(rng.integers(1, 5, size=3)))
            coarse = d1(a, b, eps=1e-6)
            fine = d1(a, b, eps=1e-10)
            assert abs(coarse.value - fine.value) <= coarse.error + fine.error + 1e-12

    def test_dinf_below_sup_kernel(self, rng):
        for _ in range(20):
            a = random_copula_grid(rng, (2, 3, 2))
            b = random_copula_grid(rng, (4, 2, 2))
            assert d_inf(a, b).value <= d_inf_kernel(a, b).value + 1e-10


class TestReportFields:
    def test_exact_reports_are_reproducible(self, cube, pi2):
        r1 = d_inf(cube, pi2)
        r2 = d_inf(cube, pi2)
        assert r1.value == r2.value and r1.exactness == r2.exactness

    def test_report_dict(self, cube, pi2):
        d = tv(cube, pi2).to_dict()
        assert d["metric"] == "tv" and d["exactness"] == "exact"
        assert d["value"] >= 0 and d["elapsed_s"] >= 0
