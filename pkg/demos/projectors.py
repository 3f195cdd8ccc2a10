"""Commuting diagrams of the two stress projections and the inf-sup monitor."""
import numpy as np

from zenerfem import ExactSolution, IsotropicMaterial, bdm_interpolate, elliptic_project, inf_sup_constant
from zenerfem import Discretization, MaterialField, assemble_blocks, build_spaces, build_uniform
from zenerfem.projector import bdm_commuting_residual, commuting_residual
from zenerfem.refelem import MAX_QUADRATURE_DEGREE

mat = IsotropicMaterial(mu=1.0, lam=1.0, a=3.0, b=3.0)
exact = ExactSolution(mat)

# density jump across x2 = 1/2; the projector still commutes with (1/rho) div
field = MaterialField(mat, rho={1: 1.0, 2: 4.0})
mesh = build_uniform(8, subdomain_rule=lambda x: np.where(x[..., 1] < 0.5, 1, 2))
system = assemble_blocks(Discretization(build_spaces(mesh, 2), field))
zeta, gamma, div = exact.stress_pair(0.5)
p = elliptic_project(system, zeta, gamma, div)
print("Xi_h commuting residual:", commuting_residual(system, p, div))

# the BDM interpolant of sigma; integrate accurately so quadrature error does not hide the identity
disc = Discretization(build_spaces(build_uniform(8), 2), MaterialField(mat), MAX_QUADRATURE_DEGREE)
w = bdm_interpolate(disc, lambda x: exact.sigma(x, 0.5))
print("Pi_h commuting residual:", bdm_commuting_residual(disc, w, lambda x: exact.div_sigma(x, 0.5)))

for n in (4, 8, 16):
    s = assemble_blocks(Discretization(build_spaces(build_uniform(n), 1), MaterialField(mat)))
    print(f"inf-sup constant, n={n}: {inf_sup_constant(s):.4f}")
