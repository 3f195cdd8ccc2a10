"""Sparse blocks of the semi- and fully discrete stress formulation.

On S_h = W_h x W_h, with p = (zeta, gamma), q = (tau, eta) and q+ = tau + eta:

    M       (V zeta, tau) + (A gamma, eta)
    M_omega ((1/omega) V zeta, tau)
    K       ((1/rho) div p+, div q+)
    B       (s, q+)                    s in Q_h
    B_U     ((1/rho) v, div q+)        v in U_h

A skew tensor ``s`` of Q_h is stored through its (1, 2) entry, so
``(s, q+) = int s (q+_12 - q+_21)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .material import MaterialField, isotropic_inverse, validate
from .refelem import make_bdm_basis, make_quadrature, piola_map, scalar_basis
from .spaces import SpaceSet

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class Discretization:
    """Quadrature tables of one (mesh, spaces, material) triple.

    Attributes hold, for every triangle ``t`` and quadrature point ``q``:
    ``points`` (T, nq, 2), ``wdet`` (T, nq) physical weights, ``phi`` (T, nq, nb, 2)
    and ``dphi`` (T, nq, nb) Piola-mapped BDM values and divergences (without
    orientation signs), and ``psi`` (nq, ns) the pulled-back P_{k-1} basis,
    orthonormal up to the factor det J.
    """

    def __init__(self, spaces: SpaceSet, field: MaterialField, quad_degree: Optional[int] = None):
        validate(field)
        self.spaces = spaces
        self.mesh = spaces.mesh
        self.field = field
        self.material = field.material
        k = spaces.k
        self.rule = make_quadrature(quad_degree or 2 * k + 2)
        self.bdm = make_bdm_basis(k)
        self.scalar = scalar_basis(k - 1)

        origin, J, det = self.mesh.jacobians()
        self.jac, self.det = J, det
        pts = self.rule.points
        self.points = origin[:, None, :] + np.einsum("tij,qj->tqi", J, pts)
        self.wdet = self.rule.weights[None, :] * det[:, None]
        self.phi, self.dphi = piola_map(
            J, det, self.bdm.values(pts)[None], self.bdm.divergence(pts)[None]
        )
        self.psi = self.scalar(pts)
        self.rho = field.rho_of(self.mesh.subdomain)
        self.omega = field.omega_of(self.mesh.subdomain)

    # -- evaluation of discrete fields at quadrature points ------------------

    def eval_W(self, vec):
        """Values (T, nq, 2, 2) and row-wise divergence (T, nq, 2) of a W_h field."""
        c = self.spaces.gather_W(vec)
        vals = np.einsum("tib,tqbj->tqij", c, self.phi)
        div = np.einsum("tib,tqb->tqi", c, self.dphi)
        return vals, div

    def eval_S(self, vec):
        """``(zeta, gamma, div p+)`` of an S_h field at quadrature points."""
        z, g = self.spaces.split_S(vec)
        zv, zd = self.eval_W(z)
        gv, gd = self.eval_W(g)
        return zv, gv, zd + gd

    def eval_Q(self, vec):
        return self.spaces.gather_Q(vec) @ self.psi.T

    def eval_U(self, vec):
        c = self.spaces.gather_U(vec)
        return np.einsum("tlc,qc->tql", c, self.psi)

    def integrate(self, values) -> float:
        """Integral of pointwise values (T, nq, ...) summed over trailing axes."""
        v = np.asarray(values)
        return float(np.einsum("tq,tq...->", self.wdet, v))

    def l2_norm(self, values) -> float:
        v = np.asarray(values)
        sq = v**2
        while sq.ndim > 2:
            sq = sq.sum(axis=-1)
        return float(np.sqrt(self.integrate(sq)))

    # -- right-hand sides against test functions ----------------------------

    def test_W_tensor(self, G):
        """W_h vector of ``(G, tau)`` for a tensor field G (T, nq, 2, 2)."""
        loc = np.einsum("tq,tqic,tqbc->tib", self.wdet, G, self.phi)
        return self.spaces.scatter_W(loc)

    def test_W_div(self, g, weight=None):
        """W_h vector of ``(weight g, div tau)`` for a vector field g (T, nq, 2)."""
        w = self.wdet if weight is None else self.wdet * weight[:, None]
        loc = np.einsum("tq,tqi,tqb->tib", w, g, self.dphi)
        return self.spaces.scatter_W(loc)

    def test_W_skew(self, s):
        """W_h vector of ``(s, tau)`` for the skew field with (1, 2) entry ``s`` (T, nq)."""
        G = np.zeros(s.shape + (2, 2))
        G[..., 0, 1] = s
        G[..., 1, 0] = -s
        return self.test_W_tensor(G)

    def test_Q(self, s):
        """Q_h vector of ``int s sbasis`` for scalar values s (T, nq)."""
        return np.einsum("tq,tq,qc->tc", self.wdet, s, self.psi).ravel()

    def test_U(self, v, weight=None):
        w = self.wdet if weight is None else self.wdet * weight[:, None]
        return np.einsum("tq,tql,qc->tlc", w, v, self.psi).ravel()

    # -- local projections onto discontinuous spaces -------------------------

    def project_Q(self, s):
        """Q_h coefficients of the L2 projection of pointwise values s (T, nq)."""
        return (np.einsum("tq,tq,qc->tc", self.wdet, s, self.psi) / self.det[:, None]).ravel()

    def project_U(self, v):
        return (np.einsum("tq,tql,qc->tlc", self.wdet, v, self.psi) / self.det[:, None, None]).ravel()

    def div_to_U(self, vec_W):
        """U_h coefficients of ``div`` of a W_h field (exact: div W_h is in U_h)."""
        _, div = self.eval_W(vec_W)
        return self.project_U(div)

    # -- workspace helpers ---------------------------------------------------

    def map_function(self, fn: Callable, *args):
        """Evaluate ``fn(points, *args)`` at all quadrature points."""
        return np.asarray(fn(self.points, *args))


# ---------------------------------------------------------------------------
# element matrices


def _assemble(row_idx, col_idx, row_sign, col_sign, loc, shape):
    T = loc.shape[0]
    R = row_idx.reshape(T, -1)
    C = col_idx.reshape(T, -1)
    L = loc.reshape(T, R.shape[1], C.shape[1])
    L = L * row_sign.reshape(T, -1)[:, :, None] * col_sign.reshape(T, -1)[:, None, :]
    rows = np.broadcast_to(R[:, :, None], L.shape).ravel()
    cols = np.broadcast_to(C[:, None, :], L.shape).ravel()
    A = sp.coo_matrix((L.ravel(), (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    return A


def _w_tables(disc: Discretization):
    sp_ = disc.spaces
    T, nb = sp_.bdm_dofs.shape
    idx = sp_.w_dofs  # (T, 2, nb)
    sign = np.broadcast_to(sp_.bdm_signs[:, None, :], (T, 2, nb))
    return idx, sign


def tensor_mass(disc: Discretization, m: float, l: float, weight=None):
    """W_h matrix of ``(weight E^{-1} sigma, tau)`` where ``E = 2 m I + l tr I``.

    ``m = 1/2, l = 0`` gives the plain L2 Gram matrix.
    """
    coef = 1.0 / (2.0 * m)
    c = l / (2.0 * m + 2.0 * l)
    w = disc.wdet if weight is None else disc.wdet * weight[:, None]
    base = np.einsum("tq,tqac,tqbc->tab", w, disc.phi, disc.phi)
    cross = np.einsum("tq,tqai,tqbj->tiajb", w, disc.phi, disc.phi)
    eye = np.eye(2)[None, :, None, :, None]
    loc = coef * (eye * base[:, None, :, None, :] - c * cross)
    idx, sign = _w_tables(disc)
    n = disc.spaces.n_W
    return _assemble(idx, idx, sign, sign, loc, (n, n))


def tensor_divdiv(disc: Discretization, weight=None):
    w = disc.wdet if weight is None else disc.wdet * weight[:, None]
    base = np.einsum("tq,tqa,tqb->tab", w, disc.dphi, disc.dphi)
    eye = np.eye(2)[None, :, None, :, None]
    loc = eye * base[:, None, :, None, :]
    idx, sign = _w_tables(disc)
    n = disc.spaces.n_W
    return _assemble(idx, idx, sign, sign, loc, (n, n))


def skew_coupling(disc: Discretization):
    """(n_Q, n_W) matrix of ``(s, tau)``, s skew with (1,2) entry from Q_h."""
    sp_ = disc.spaces
    T = sp_.mesh.n_triangles
    # s:tau = s (tau_01 - tau_10): row 0 contributes phi[1], row 1 contributes -phi[0]
    comp = np.stack([disc.phi[..., 1], -disc.phi[..., 0]], axis=2)  # (T, nq, 2, nb)
    loc = np.einsum("tq,qc,tqib->tcib", disc.wdet, disc.psi, comp)
    idx, sign = _w_tables(disc)
    qidx = sp_.q_dofs
    return _assemble(qidx, idx, np.ones(qidx.shape), sign, loc, (sp_.n_Q, sp_.n_W))


def divergence_coupling(disc: Discretization, weight=None):
    """(n_U, n_W) matrix of ``(weight v, div tau)``."""
    sp_ = disc.spaces
    w = disc.wdet if weight is None else disc.wdet * weight[:, None]
    base = np.einsum("tq,qc,tqb->tcb", w, disc.psi, disc.dphi)
    loc = np.eye(2)[None, :, None, :, None] * base[:, None, :, None, :]
    idx, sign = _w_tables(disc)
    uidx = sp_.u_dofs
    return _assemble(uidx, idx, np.ones(uidx.shape), sign, loc, (sp_.n_U, sp_.n_W))


# ---------------------------------------------------------------------------
# saddle system


@dataclass(eq=False)
class SaddleSystem:
    disc: Discretization
    M: sp.csr_matrix
    M_omega: sp.csr_matrix
    K: sp.csr_matrix
    B: sp.csr_matrix
    B_U: sp.csr_matrix
    G: sp.csr_matrix
    K_plain: sp.csr_matrix  # unweighted div-div, for the S-norm
    B_U_plain: sp.csr_matrix

    @property
    def spaces(self) -> SpaceSet:
        return self.disc.spaces

    def norm_S(self, vec) -> float:
        """Discrete S-norm ``(|q|_0^2 + |div q+|_0^2)^(1/2)`` of an S_h vector."""
        return float(np.sqrt(vec @ (self.G @ vec) + vec @ (self.K_plain @ vec)))


def _pair(Z, G):
    return sp.bmat([[Z, None], [None, G]], format="csr")


def _plus(K):
    return sp.bmat([[K, K], [K, K]], format="csr")


def assemble_blocks(disc: Discretization) -> SaddleSystem:
    mat = disc.material
    inv_rho = 1.0 / disc.rho
    M_V = tensor_mass(disc, *mat.maxwell_coefficients)
    M_A = tensor_mass(disc, *mat.elastic_coefficients)
    M_Vw = tensor_mass(disc, *mat.maxwell_coefficients, weight=1.0 / disc.omega)
    gram = tensor_mass(disc, 0.5, 0.0)
    K_W = tensor_divdiv(disc, weight=inv_rho)
    K1 = tensor_divdiv(disc)
    B_W = skew_coupling(disc)
    BU_W = divergence_coupling(disc, weight=inv_rho)
    BU1 = divergence_coupling(disc)
    zero = sp.csr_matrix(M_A.shape)
    return SaddleSystem(
        disc=disc,
        M=_pair(M_V, M_A),
        M_omega=_pair(M_Vw, zero),
        K=_plus(K_W),
        B=sp.hstack([B_W, B_W], format="csr"),
        B_U=sp.hstack([BU_W, BU_W], format="csr"),
        G=_pair(gram, gram),
        K_plain=_plus(K1),
        B_U_plain=sp.hstack([BU1, BU1], format="csr"),
    )


def assemble_load(disc: Discretization, t: float, F: Optional[Callable]) -> np.ndarray:
    """S_h vector with entries ``-((1/rho) F(t), div q+)``."""
    n_S = disc.spaces.n_S
    if F is None:
        return np.zeros(n_S)
    vals = disc.map_function(F, t)
    lw = -disc.test_W_div(vals, weight=1.0 / disc.rho)
    return np.concatenate([lw, lw])


# ---------------------------------------------------------------------------
# direct solves


class Factorization:
    """Sparse LU of a square (saddle point) system.

    ``fixed`` lists unknowns held at zero; their rows and columns are removed
    before factorising. The last ``n_multipliers`` unknowns form a zero diagonal
    block. That block is shifted by ``-shift * mean|diag|`` so that a minimum
    degree ordering on the symmetric pattern can keep diagonal pivots, which
    keeps the fill small. The shifted factors only precondition the exact
    system: every solve runs iterative refinement against the unshifted matrix
    until the relative residual is below ``tol``. If refinement stalls, the
    unshifted matrix is refactorised with partial pivoting before giving up.
    """

    FAST = dict(permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0)
    ROBUST = dict(permc_spec="COLAMD", diag_pivot_thresh=1.0)
    MAX_REFINE = 10

    def __init__(self, A, fixed=None, tol: float = RESIDUAL_TOL, n_multipliers: int = 0, shift: float = 1e-8):
        A = sp.csc_matrix(A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"matrix must be square, got {A.shape}")
        self.n = n
        self.tol = tol
        keep = np.ones(n, dtype=bool)
        if fixed is not None and len(fixed):
            fixed = np.asarray(fixed)
            if np.any(fixed >= n - n_multipliers):
                raise ValueError("fixed unknowns must lie outside the multiplier block")
            keep[fixed] = False
        self.keep = np.flatnonzero(keep)
        self.A = A[self.keep][:, self.keep].tocsc()
        self.robust = False
        F = self.A
        if n_multipliers:
            m = self.A.shape[0]
            top = np.abs(self.A.diagonal()[: m - n_multipliers])
            d = np.zeros(m)
            d[m - n_multipliers :] = -shift * (top.mean() if top.size else 1.0)
            F = (self.A + sp.diags(d)).tocsc()
        try:
            self.lu = spla.splu(F, **self.FAST)
        except RuntimeError:
            self._refactor()
        self.last_residual = 0.0

    def _refactor(self):
        self.robust = True
        try:
            self.lu = spla.splu(self.A, **self.ROBUST)
        except RuntimeError as exc:
            raise SolverError(f"singular factorization: {exc}") from None

    def _refine(self, rhs, norm_b):
        y = self.lu.solve(rhs)
        res = np.linalg.norm(self.A @ y - rhs) / norm_b
        for _ in range(self.MAX_REFINE):
            # a little below tol so that the accepted solves are not marginal
            if not np.isfinite(res) or res <= 1e-3 * self.tol:
                break
            y_new = y + self.lu.solve(rhs - self.A @ y)
            res_new = np.linalg.norm(self.A @ y_new - rhs) / norm_b
            if not res_new < 0.5 * res:
                if res_new < res:
                    y, res = y_new, res_new
                break
            y, res = y_new, res_new
        return y, res

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has length {b.shape[0]}, expected {self.n}")
        rhs = b[self.keep]
        norm_b = np.linalg.norm(rhs)
        x = np.zeros(b.shape)
        if norm_b == 0.0:
            self.last_residual = 0.0
            return x
        y, res = self._refine(rhs, norm_b)
        if not (np.isfinite(res) and res <= self.tol) and not self.robust:
            self._refactor()
            y, res = self._refine(rhs, norm_b)
        if not np.isfinite(res) or res > self.tol:
            raise SolverError(f"relative residual {res:.3e} exceeds {self.tol:.1e}")
        self.last_residual = res
        x[self.keep] = y
        return x


def solve(factorization: Factorization, rhs) -> np.ndarray:
    return factorization.solve(rhs)


def saddle_matrix(top, B, scale: float = 1.0):
    """``[[top, scale B^T], [scale B, 0]]``."""
    return sp.bmat([[top, scale * B.T], [scale * B, None]], format="csc")


@dataclass(eq=False)
class NewmarkMatrix:
    system: SaddleSystem
    dt: float
    damping: bool
    matrix: sp.csc_matrix
    factorization: Factorization

    def solve(self, rhs):
        return self.factorization.solve(rhs)


def build_newmark_matrix(system: SaddleSystem, dt: float, damping: bool = True) -> NewmarkMatrix:
    """Factorise ``[[M/dt^2 + M_omega/(2 dt) + K/4, B^T/dt^2], [B/dt^2, 0]]`` once.

    ``damping=False`` drops the relaxation block (the elastic limit).
    """
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    top = system.M / dt**2 + system.K / 4.0
    if damping:
        top = top + system.M_omega / (2.0 * dt)
    A = saddle_matrix(top, system.B, 1.0 / dt**2)
    fact = Factorization(A, fixed=system.spaces.constrained, n_multipliers=system.spaces.n_Q)
    return NewmarkMatrix(system, float(dt), damping, A, fact)


def inf_sup_constant(system: SaddleSystem, coupling: str = "full", chunk: int = 512) -> float:
    """Smallest singular value of the coupling block in the natural norms.

    Returns ``beta`` with

        beta^2 = min_y  (C X^{-1} C^T y, y) / (Y y, y),

    where ``X`` is the S-norm Gram of S_h (constrained dofs removed), ``Y``
    the L2 Gram of the multiplier space and ``C`` either ``[B; B_U]`` with
    unit density (``coupling="full"``) or the skew block ``B`` alone
    (``coupling="skew"``). A discrete inf-sup condition means that ``beta``
    stays bounded away from zero under refinement.
    """
    spc = system.spaces
    det = system.disc.det
    ns = spc.n_scalar
    y_q = 2.0 * np.repeat(det, ns)  # |s|^2 = 2 s_12^2
    if coupling == "full":
        C = sp.vstack([system.B, system.B_U_plain], format="csr")
        y = np.concatenate([y_q, np.repeat(det, 2 * ns)])
    elif coupling == "skew":
        C, y = system.B.tocsr(), y_q
    else:
        raise ValueError(f"unknown coupling {coupling!r}")
    free = spc.free
    X = (system.G + system.K_plain).tocsc()[free][:, free]
    Ct = C[:, free].T.tocsc()
    lu = spla.splu(X.tocsc())
    m = C.shape[0]
    S = np.empty((m, m))
    for j0 in range(0, m, chunk):
        cols = Ct[:, j0 : j0 + chunk].toarray()
        S[:, j0 : j0 + chunk] = Ct.T @ lu.solve(cols)
    s = 1.0 / np.sqrt(y)
    S = 0.5 * (S + S.T) * s[:, None] * s[None, :]
    lam = np.linalg.eigvalsh(S)[0]
    return float(np.sqrt(max(lam, 0.0)))
