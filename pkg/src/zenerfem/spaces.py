"""Global numbering for the stress pair space S_h = W_h x W_h, Q_h and U_h.

Layout of the global vectors:

* one BDM_k row space has ``n_bdm = (k+1) E + (k+1)(k-1) T`` dofs, edge dofs
  first (edge-major), interior dofs after (triangle-major);
* ``W_h`` stacks the two tensor rows: ``[row 0 | row 1]``, ``n_W = 2 n_bdm``;
* ``S_h`` stacks the Maxwell and elastic components: ``[zeta | gamma]``;
* ``Q_h`` holds the (1, 2) entry of the skew tensor, P_{k-1} per triangle;
* ``U_h`` holds both vector components, P_{k-1} per triangle.

Edge moment ``j`` of a shared edge is measured against the global normal and the
global (low to high) parameterisation, so the local-to-global sign of edge dof
``j`` is ``1`` when the local traversal agrees and ``(-1)**(j+1)`` otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .refelem import make_bdm_basis, scalar_basis


@dataclass(frozen=True, eq=False)
class SpaceSet:
    mesh: Mesh
    k: int
    n_bdm: int
    bdm_dofs: np.ndarray  # (T, nb) global index inside one BDM row space
    bdm_signs: np.ndarray  # (T, nb) +-1
    n_scalar: int  # dim P_{k-1} on one triangle
    constrained: np.ndarray  # S_h dofs fixed to zero (traction boundary)

    @property
    def n_W(self) -> int:
        return 2 * self.n_bdm

    @property
    def n_S(self) -> int:
        return 2 * self.n_W

    @property
    def n_Q(self) -> int:
        return self.mesh.n_triangles * self.n_scalar

    @property
    def n_U(self) -> int:
        return 2 * self.mesh.n_triangles * self.n_scalar

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_S, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)

    # -- index tables ------------------------------------------------------

    @property
    def w_dofs(self) -> np.ndarray:
        """(T, 2, nb) W_h indices of the local tensor basis (row, bdm function)."""
        return np.stack([self.bdm_dofs, self.bdm_dofs + self.n_bdm], axis=1)

    @property
    def q_dofs(self) -> np.ndarray:
        T = self.mesh.n_triangles
        return np.arange(T * self.n_scalar).reshape(T, self.n_scalar)

    @property
    def u_dofs(self) -> np.ndarray:
        T = self.mesh.n_triangles
        return np.arange(T * 2 * self.n_scalar).reshape(T, 2, self.n_scalar)

    # -- gather / scatter --------------------------------------------------

    def gather_W(self, vec) -> np.ndarray:
        """Signed local coefficients (T, 2, nb) of a W_h vector."""
        vec = np.asarray(vec)
        if vec.shape[0] != self.n_W:
            raise IndexError(f"W_h vector has length {vec.shape[0]}, expected {self.n_W}")
        return vec[self.w_dofs] * self.bdm_signs[:, None, :]

    def scatter_W(self, local, out=None) -> np.ndarray:
        """Add signed local blocks (T, 2, nb) into a W_h vector."""
        local = np.asarray(local)
        if local.shape != (self.mesh.n_triangles, 2, self.bdm_dofs.shape[1]):
            raise IndexError(f"local block has shape {local.shape}")
        if out is None:
            out = np.zeros(self.n_W)
        np.add.at(out, self.w_dofs, local * self.bdm_signs[:, None, :])
        return out

    def split_S(self, vec):
        """``(zeta, gamma)`` halves of an S_h vector."""
        vec = np.asarray(vec)
        if vec.shape[0] != self.n_S:
            raise IndexError(f"S_h vector has length {vec.shape[0]}, expected {self.n_S}")
        return vec[: self.n_W], vec[self.n_W :]

    def plus(self, vec) -> np.ndarray:
        """W_h coefficients of ``zeta + gamma`` (both copies share one basis)."""
        z, g = self.split_S(vec)
        return z + g

    def gather_Q(self, vec) -> np.ndarray:
        vec = np.asarray(vec)
        if vec.shape[0] != self.n_Q:
            raise IndexError(f"Q_h vector has length {vec.shape[0]}, expected {self.n_Q}")
        return vec.reshape(self.mesh.n_triangles, self.n_scalar)

    def gather_U(self, vec) -> np.ndarray:
        vec = np.asarray(vec)
        if vec.shape[0] != self.n_U:
            raise IndexError(f"U_h vector has length {vec.shape[0]}, expected {self.n_U}")
        return vec.reshape(self.mesh.n_triangles, 2, self.n_scalar)


def build_spaces(mesh: Mesh, k: int) -> SpaceSet:
    if k not in (1, 2):
        raise ValueError(f"polynomial degree k={k} not supported (1 or 2)")
    bdm = make_bdm_basis(k)
    T, E = mesh.n_triangles, mesh.n_edges
    ne = k + 1
    ni = bdm.n_interior

    j = np.arange(ne)
    edge_idx = mesh.tri_edges[:, :, None] * ne + j[None, None, :]  # (T, 3, ne)
    agree = mesh.tri_edge_signs[:, :, None] > 0
    edge_sign = np.where(agree, 1, (-1) ** (j + 1)[None, None, :])
    int_idx = ne * E + np.arange(T * ni).reshape(T, ni)

    dofs = np.concatenate([edge_idx.reshape(T, 3 * ne), int_idx], axis=1)
    signs = np.concatenate([edge_sign.reshape(T, 3 * ne), np.ones((T, ni), int)], axis=1)
    n_bdm = ne * E + ni * T

    neumann = mesh.neumann_edges
    bdm_fixed = (neumann[:, None] * ne + j[None, :]).ravel()
    w_fixed = np.concatenate([bdm_fixed, bdm_fixed + n_bdm])
    s_fixed = np.concatenate([w_fixed, w_fixed + 2 * n_bdm])

    return SpaceSet(
        mesh=mesh,
        k=k,
        n_bdm=int(n_bdm),
        bdm_dofs=dofs.astype(np.int64),
        bdm_signs=signs.astype(float),
        n_scalar=scalar_basis(k - 1).dim,
        constrained=np.sort(s_fixed).astype(np.int64),
    )
