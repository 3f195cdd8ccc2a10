"""Mixed finite elements with weakly imposed symmetry for the Zener viscoelastic model.

The stress is split into a Maxwell and an elastic part, ``sigma = zeta + gamma``,
and both are approximated in the row-wise BDM_k space of the Arnold-Falk-Winther
family. Rotations act as Lagrange multipliers for the stress symmetry. Time
stepping uses the Newmark trapezoidal rule.

Typical use::

    from zenerfem import *

    mat = IsotropicMaterial(mu=1.0, lam=1.0, a=3.0, b=3.0)
    field = MaterialField(mat, rho=1.0, omega=1.0)
    system = assemble_blocks(Discretization(build_spaces(build_uniform(8), 2), field))
    exact = ExactSolution(mat)
    result = run(TimeGrid(1.0, 8), system, discrete_initial_data(system, exact), F=exact.F)
    print(error_report(system, exact, result))
"""
from .assembly import (
    Discretization,
    Factorization,
    SaddleSystem,
    SolverError,
    assemble_blocks,
    assemble_load,
    build_newmark_matrix,
    inf_sup_constant,
)
from .material import IsotropicMaterial, MaterialError, MaterialField, validate
from .mesh import Mesh, MeshError, build_uniform, refine
from .mms import ErrorReport, ExactSolution, discrete_initial_data, error_report, projected_level
from .projector import bdm_interpolate, elliptic_project, l2_project_Q, l2_project_U
from .refelem import make_bdm_basis, make_quadrature
from .spaces import SpaceSet, build_spaces
from .stepper import InitialData, RunResult, State, TimeGrid, energy, random_initial_data, run, step, startup

__version__ = "0.1.0"

__all__ = [
    "Discretization",
    "ErrorReport",
    "ExactSolution",
    "Factorization",
    "InitialData",
    "IsotropicMaterial",
    "MaterialError",
    "MaterialField",
    "Mesh",
    "MeshError",
    "RunResult",
    "SaddleSystem",
    "SolverError",
    "SpaceSet",
    "State",
    "TimeGrid",
    "assemble_blocks",
    "assemble_load",
    "bdm_interpolate",
    "build_newmark_matrix",
    "build_spaces",
    "build_uniform",
    "discrete_initial_data",
    "elliptic_project",
    "energy",
    "error_report",
    "inf_sup_constant",
    "l2_project_Q",
    "l2_project_U",
    "make_bdm_basis",
    "make_quadrature",
    "projected_level",
    "random_initial_data",
    "refine",
    "run",
    "startup",
    "step",
    "validate",
]
