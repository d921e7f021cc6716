"""Numerical toolkit for multivariate copulas: exact checkerboards,
Markov-kernel conditioning, distance metrics and the partial vine operator."""

from .analytic import (
    AnalyticCopula,
    comonotone,
    countermonotone,
    independence_analytic,
)
from .conditioning import (
    BilinearSurface,
    ConditionalFamily,
    PiecewiseLinearCdf,
    conditional_copula,
    conditional_margin,
    disintegration_residual,
    is_simplified,
    j_functional,
    kernel_cdf,
    partial_copula,
    slab_family,
)
from .empirical import (
    EmpiricalCopula,
    empirical_copula,
    load_sample,
    sample,
    save_sample,
)
from .families import (
    EfgmSpec,
    ShuffleSegment,
    ShuffleSpec,
    bstar,
    bstarstar,
    cube_copula,
    discretize,
    efgm,
    efgm_quadratic,
    efgm_sequence_member,
    example54_copula,
    independence,
    rcube_copula,
    shuffle_d,
    shuffle_of_w,
)
from .grid import (
    GridCopula,
    box_mass,
    common_refinement,
    convex_combine,
    new_grid,
    product_extend,
    uniform_breaks,
)
from .metrics import (
    MetricReport,
    d1,
    d2,
    d_inf,
    d_inf_kernel,
    kl,
    metric_chain_check,
    tv,
    wcc_profile,
)
from .pvc import PvcResult, pvc3, pvc3_analytic, pvc_distance_report, pvc_dvine
from .verify import VerificationCase, run_all, run_case

__version__ = "0.1.0"

__all__ = [
    "AnalyticCopula",
    "BilinearSurface",
    "ConditionalFamily",
    "EfgmSpec",
    "EmpiricalCopula",
    "GridCopula",
    "MetricReport",
    "PiecewiseLinearCdf",
    "PvcResult",
    "ShuffleSegment",
    "ShuffleSpec",
    "VerificationCase",
    "box_mass",
    "bstar",
    "bstarstar",
    "comonotone",
    "common_refinement",
    "conditional_copula",
    "conditional_margin",
    "convex_combine",
    "countermonotone",
    "cube_copula",
    "d1",
    "d2",
    "d_inf",
    "d_inf_kernel",
    "discretize",
    "disintegration_residual",
    "efgm",
    "efgm_quadratic",
    "efgm_sequence_member",
    "empirical_copula",
    "example54_copula",
    "independence",
    "independence_analytic",
    "is_simplified",
    "j_functional",
    "kernel_cdf",
    "kl",
    "load_sample",
    "metric_chain_check",
    "new_grid",
    "partial_copula",
    "product_extend",
    "pvc3",
    "pvc3_analytic",
    "pvc_distance_report",
    "pvc_dvine",
    "rcube_copula",
    "run_all",
    "run_case",
    "sample",
    "save_sample",
    "shuffle_d",
    "shuffle_of_w",
    "slab_family",
    "tv",
    "uniform_breaks",
    "wcc_profile",
]
