"""ferrobvp: solvers for a 1D coupled nematic-magnetic boundary-value problem.

The package finds, classifies and continues critical points of the coupled
free energy on a channel cross-section: closed-form bulk landscapes, a damped
Newton solver on a piecewise-linear Galerkin discretization, deflation for
solution multiplicity, Hessian-based stability, natural-parameter bifurcation
diagrams, degenerate-metric transition costs and asymptotic limit profiles.
"""

from .bulk import (
    BulkCriticalPoint,
    BulkMinimumInfo,
    CubicRoots,
    ModelParams,
    asymptotic_minimiser,
    bulk_critical_points,
    bulk_energy,
    bulk_minimum_info,
    global_minimiser,
    rho_star,
    solve_branch_cubic,
)
from .discretization import (
    Diagnostics,
    FieldState,
    Mesh,
    ORState,
    diagnostics,
    embed_or_state,
    energy,
    flip_state,
    jacobian,
    make_mesh,
    or_energy,
    residual,
)
from .solver import BandedMatrix, SolveOptions, SolveReport, banded_solve, newton_solve
from .deflation import (
    DeflationOperator,
    default_guess_suite,
    deflated_solve,
    discover_solutions,
)
from .stability import (
    SecondVariationProbe,
    StabilityReport,
    full_hessian_quadratic_form,
    hessian_spectrum,
    or_instability_probe,
    second_variation_probe,
)
from .continuation import Branch, BifurcationEvent, BranchPoint, continue_in_l, diagram_emit
from .gamma_metric import (
    LimitStructure,
    PlanePath,
    PlanePoint,
    TransitionCost,
    f_tilde,
    minimise_limit_functional,
    transition_cost,
)
from .asymptotics import (
    convergence_study,
    laplace_limit_state,
    limit_map_l0,
    or_expansion,
)

__version__ = "0.1.0"
