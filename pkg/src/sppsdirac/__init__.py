"""Spectral parameter power series (SPPS) for radial Dirac systems.

Regular solutions of

    v' + p1 u + (kappa/x + q) v = lam (r11 u + r12 v)
   -u' + (kappa/x + q) u + p2 v = lam (r21 u + r22 v)

as power series in the spectral parameter, characteristic polynomials and
eigenvalue sweeps with adaptive complex shifts, perturbed Bessel problems and
hydrogen-like atoms with a finite nucleus.
"""
from .numerics import GridFn, Mesh, cumulative_integral, make_mesh
from .dirac_core import (
    DiracSystem,
    FormalPowers,
    NonConvergenceError,
    SeedSolution,
    check_nonvanishing,
    formal_powers,
    particular_solution,
    residual,
    spps_endpoint,
    spps_solution,
    tail_bound,
)
from .spectral import (
    BoundaryCondition,
    CharPoly,
    EigenPair,
    EigenResult,
    ShiftStrategy,
    adaptive_shift_sweep,
    characteristic_poly,
    poly_roots,
    shift_system,
)
from .bessel import BesselEigen, BesselProblem, bessel_eigenvalues
from .hydrogenic import HydrogenicModel, energy_levels, tricomi_u
from .expr import parse_coeff_expr

__version__ = "0.1.0"
