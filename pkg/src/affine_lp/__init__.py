"""Affine L^p energy on Galerkin subspaces, affine-ball geometry, gauge-ball
zero finding and critical points of the affine functional."""

__version__ = "0.1.0"

from .basis import DomainSpec, BasisSpec, GradField, build_basis, expand, lq_norm, grad_lp_norm, w1pm_norm
from .sphere import SphereRule, build_circle_rule, integrate_sphere
from .energy import (
    EnergyParams,
    EnergyBreakdown,
    unit_ball_volume,
    gamma_np,
    directional_lp_norms,
    affine_energy,
    signed_pow,
    energy_grad,
    h_function,
)
from .geometry import (
    GaugeContext,
    Witness,
    make_context,
    floor_gauge,
    in_affine_ball,
    map_T,
    map_G,
    search_triangle_violation,
    search_nonconvexity,
)
from .fixed_point import GaugeBallSpec, VectorField, ZeroResult, boundary_condition_check, find_zero, find_zero_punctured
from .galerkin import (
    Source,
    ProblemSpec,
    SolveResult,
    phi_m,
    assemble_F,
    estimate_mu,
    rho_bound,
    solve_critical_point,
    convergence_study,
)
