"""Projections onto the discrete spaces.

* :func:`elliptic_project` -- the mixed projector onto S_h that commutes with
  the density-weighted divergence;
* :func:`l2_project_Q`, :func:`l2_project_U` -- element-local L2 projections;
* :func:`bdm_interpolate` -- the canonical BDM_k interpolant, row by row.

Continuous fields are passed as callables of points (..., 2).
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .assembly import Discretization, Factorization, SaddleSystem
from .mesh import locate
from .refelem import gauss_line, interior_test_functions, shifted_legendre
import scipy.sparse as sp


class ProjectorSystem:
    """Factorised ``[[G, B^T, B_U^T], [B, 0, 0], [B_U, 0, 0]]`` with G the L2 Gram of S_h."""

    def __init__(self, system: SaddleSystem):
        self.system = system
        spc = system.spaces
        C = sp.vstack([system.B, system.B_U], format="csr")
        self.matrix = sp.bmat([[system.G, C.T], [C, None]], format="csc")
        self.n_S, self.n_Q, self.n_U = spc.n_S, spc.n_Q, spc.n_U
        self.factorization = Factorization(
            self.matrix, fixed=spc.constrained, n_multipliers=spc.n_Q + spc.n_U
        )

    def solve(self, rhs_S, rhs_Q, rhs_U):
        x = self.factorization.solve(np.concatenate([rhs_S, rhs_Q, rhs_U]))
        n, q = self.n_S, self.n_Q
        return x[:n], x[n : n + q], x[n + q :]


def projector_system(system: SaddleSystem) -> ProjectorSystem:
    cached = getattr(system, "_projector", None)
    if cached is None:
        cached = ProjectorSystem(system)
        system._projector = cached
    return cached


def _skew_part(G):
    return G[..., 0, 1] - G[..., 1, 0]


def elliptic_project_values(system: SaddleSystem, zeta, gamma, div_plus, return_multipliers=False):
    """Mixed projection from pointwise values at the quadrature points.

    ``zeta``, ``gamma`` are (T, nq, 2, 2), ``div_plus`` is (T, nq, 2).
    """
    disc = system.disc
    rhs_S = np.concatenate([disc.test_W_tensor(zeta), disc.test_W_tensor(gamma)])
    rhs_Q = disc.test_Q(_skew_part(zeta + gamma))
    rhs_U = disc.test_U(div_plus, weight=1.0 / disc.rho)
    p, r, u = projector_system(system).solve(rhs_S, rhs_Q, rhs_U)
    if return_multipliers:
        return p, r, u
    return p


def elliptic_project(system: SaddleSystem, zeta: Callable, gamma: Callable, div_plus: Callable, **kw):
    """S_h coefficients of the mixed projection of ``p = (zeta, gamma)``.

    ``div_plus`` evaluates the row-wise divergence of ``zeta + gamma``.
    """
    disc = system.disc
    return elliptic_project_values(
        system,
        disc.map_function(zeta),
        disc.map_function(gamma),
        disc.map_function(div_plus),
        **kw,
    )


def reproject_discrete(system: SaddleSystem, vec):
    """Mixed projection of a field that already lies in S_h."""
    z, g, d = system.disc.eval_S(vec)
    return elliptic_project_values(system, z, g, d)


def l2_project_Q(disc: Discretization, r12: Callable):
    """Q_h coefficients of the projection of a skew field given by its (1, 2) entry."""
    return disc.project_Q(disc.map_function(r12))


def l2_project_U(disc: Discretization, v: Callable):
    return disc.project_U(disc.map_function(v))


def commuting_residual(system: SaddleSystem, p_vec, div_plus: Callable) -> float:
    """L2 norm of ``(1/rho) div (p_h)+ - U_h((1/rho) div p+)``."""
    disc = system.disc
    inv_rho = 1.0 / disc.rho
    lhs = disc.div_to_U(system.spaces.plus(p_vec)).reshape(-1, 2, disc.psi.shape[1])
    lhs = lhs * inv_rho[:, None, None]
    rhs = disc.project_U(disc.map_function(div_plus) * inv_rho[:, None, None])
    return float(disc.l2_norm(disc.eval_U(lhs.ravel() - rhs)))


# ---------------------------------------------------------------------------
# BDM interpolation


def bdm_interpolate(disc: Discretization, tau: Callable, n_line: int = 8):
    """W_h coefficients of the row-wise BDM_k interpolant of a tensor field."""
    spc = disc.spaces
    mesh = spc.mesh
    k = spc.k
    out = np.zeros(spc.n_W)

    s, ws = gauss_line(n_line)
    a = mesh.vertices[mesh.edges[:, 0]]
    t = mesh.vertices[mesh.edges[:, 1]] - a
    nu = np.column_stack([t[:, 1], -t[:, 0]])
    pts = a[:, None, :] + s[None, :, None] * t[:, None, :]  # (E, ns, 2)
    vals = np.asarray(tau(pts))  # (E, ns, 2, 2)
    flux = np.einsum("esij,ej->esi", vals, nu)
    L = np.stack([shifted_legendre(j, s) for j in range(k + 1)])  # (k+1, ns)
    mom = np.einsum("s,js,esi->eij", ws, L, flux)  # (E, 2, k+1)
    edge_idx = np.arange(mesh.n_edges)[:, None] * (k + 1) + np.arange(k + 1)[None, :]
    for i in range(2):
        out[i * spc.n_bdm + edge_idx] = mom[:, i, :]

    ni = disc.bdm.n_interior
    if ni:
        vals = disc.map_function(tau)  # (T, nq, 2, 2)
        ref = np.einsum("tjk,tqik->tqij", np.linalg.inv(disc.jac), vals)  # J^{-1} rows
        qhat = interior_test_functions(k, disc.rule.points)  # (nq, ni, 2)
        mom = np.einsum("tq,tqij,qmj->tim", disc.wdet, ref, qhat)
        int_idx = spc.bdm_dofs[:, 3 * (k + 1) :]
        for i in range(2):
            out[i * spc.n_bdm + int_idx] = mom[:, i, :]
    return out


def bdm_commuting_residual(disc: Discretization, w_vec, div_tau: Callable) -> float:
    """L2 norm of ``div(Pi_h tau) - U_h div tau``."""
    lhs = disc.div_to_U(w_vec)
    rhs = disc.project_U(disc.map_function(div_tau))
    return float(disc.l2_norm(disc.eval_U(lhs - rhs)))


def evaluate_W(disc: Discretization, vec, points):
    """Point values (P, 2, 2) of a W_h field at arbitrary points (brute-force location)."""
    points = np.atleast_2d(points)
    tri = locate(disc.mesh, points)
    if np.any(tri < 0):
        raise ValueError("point outside the mesh")
    origin, J, det = disc.mesh.jacobians()
    ref = np.einsum("pij,pj->pi", np.linalg.inv(J[tri]), points - origin[tri])
    vals = disc.bdm.values(ref)  # (P, nb, 2)
    phys = np.einsum("pij,pbj->pbi", J[tri], vals) / det[tri, None, None]
    c = disc.spaces.gather_W(vec)[tri]  # (P, 2, nb)
    return np.einsum("pib,pbj->pij", c, phys)
