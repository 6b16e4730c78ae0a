"""Least energy nodal solutions of Henon-Lane-Emden Hamiltonian systems.

The package solves

    -Δu = |x|^β |v|^(q-1) v,   -Δv = |x|^α |u|^(p-1) u   in Ω,
     u = v = 0                                            on ∂Ω,

on radial domains (interval, disk, annulus) for sign-changing solutions of
least energy, using a dual variational formulation: the unknowns are the
nonlinearity densities (w1, w2), the Laplacian enters only through its
inverse K, and candidates are projected onto a nodal Nehari-type set by a
two-parameter fiber scaling before each descent step.

Modules
-------
grids      radial domains, cell-centred grids, quadrature, Henon weights
greenop    discrete Dirichlet Laplacian, Green operator K, eigenpairs
dual       dual/primal conversions, energies, fiber map, Nehari residuals
solver     Nehari projections, nodal/ground minimization, eps sweeps
oracle     independent primal solver for the scalar Henon equation
symmetry   polarization, axis detection, foliated Schwarz diagnostics
reporting  figure rendering and JSON/CSV output helpers
cli        command-line experiment front end
"""

from henon_nodal.grids import (
    Domain,
    Grid,
    GridError,
    ScalarField,
    build_grid,
    build_radial_grid,
    henon_weight,
    integrate,
    load_field,
    save_field,
    split_signs,
)
from henon_nodal.greenop import (
    GreenSolver,
    SolverBreakdown,
    apply_K,
    assemble_laplacian,
    eigenpair,
)
from henon_nodal.dual import (
    Coeffs,
    DualPair,
    Exponents,
    ParamError,
    Params,
    PrimalPair,
    coefficients,
    dual_from_primal,
    energy_E,
    energy_I,
    energy_I_eps,
    exponents,
    grad_I,
    grad_I_eps,
    in_N0,
    nehari_residuals,
    primal_from_dual,
    theta_eval,
)
from henon_nodal.solver import (
    ConvergenceError,
    NodalCollapseError,
    NodalSolution,
    NotInN0Error,
    ProjectionResult,
    SolveOptions,
    eps_sweep,
    minimize_ground,
    minimize_nodal,
    minimize_nodal_radial,
    project_ground,
    project_nehari,
    project_nehari_eps,
)
from henon_nodal.oracle import (
    OracleError,
    ScalarSolution,
    scalar_ground_solve,
    scalar_nodal_solve,
)
from henon_nodal.symmetry import (
    AxisResult,
    HalfSpace,
    SymmetryReport,
    component_gap,
    detect_axis,
    foliated_schwarz_score,
    key_estimate,
    polarize,
    radial_deviation,
    symmetry_report,
)

__version__ = "0.1.0"
