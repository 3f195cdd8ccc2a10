"""Reference-triangle machinery on ``{(0,0), (1,0), (0,1)}``.

Provides collapsed Gauss quadrature, orthonormal scalar P_m bases, the vector
BDM_k basis dual to its H(div) degrees of freedom, and the contravariant Piola
map. Reference edge ``i`` runs from vertex ``i+1`` to vertex ``i+2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class BasisError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sum 1/2
    degree: int

    def __len__(self):
        return len(self.weights)


MAX_QUADRATURE_DEGREE = 10


@lru_cache(maxsize=None)
def make_quadrature(degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss-Legendre rule exact for total degree ``degree``.

    The square-to-triangle map ``(u, v) -> (u, v (1 - u))`` raises the degree
    in ``u`` by one, hence ``ceil((degree + 2) / 2)`` points per direction.
    """
    if int(degree) != degree or not 1 <= degree <= MAX_QUADRATURE_DEGREE:
        raise ValueError(
            f"unsupported quadrature degree {degree!r} "
            f"(1..{MAX_QUADRATURE_DEGREE})"
        )
    m = (int(degree) + 3) // 2
    g, w = legendre.leggauss(m)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    U, V = np.meshgrid(g, g, indexing="ij")
    WU, WV = np.meshgrid(w, w, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    weights = (WU * WV * (1.0 - U)).ravel()
    return QuadratureRule(np.column_stack([x, y]), weights, int(degree))


def gauss_line(n: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    g, w = legendre.leggauss(n)
    return 0.5 * (g + 1.0), 0.5 * w


def shifted_legendre(j: int, s):
    """Legendre polynomial of degree ``j`` on [0, 1]."""
    c = np.zeros(j + 1)
    c[j] = 1.0
    return legendre.legval(2.0 * np.asarray(s) - 1.0, c)


# ---------------------------------------------------------------------------
# monomials


def monomial_exponents(m: int):
    return [(p, d - p) for d in range(m + 1) for p in range(d, -1, -1)]


def _monomials(points, exps):
    x, y = points[..., 0], points[..., 1]
    return np.stack([x**p * y**q for p, q in exps], axis=-1)


def _monomial_grads(points, exps):
    x, y = points[..., 0], points[..., 1]
    dx = [p * x ** max(p - 1, 0) * y**q for p, q in exps]
    dy = [q * x**p * y ** max(q - 1, 0) for p, q in exps]
    return np.stack(dx, axis=-1), np.stack(dy, axis=-1)


# ---------------------------------------------------------------------------
# scalar bases


@dataclass(frozen=True)
class ScalarBasis:
    """P_m basis orthonormal in L2 of the reference triangle."""

    m: int
    exponents: tuple
    coefficients: np.ndarray  # (n_monomials, n_basis)

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    def __call__(self, points):
        return _monomials(np.asarray(points, float), self.exponents) @ self.coefficients


@lru_cache(maxsize=None)
def scalar_basis(m: int) -> ScalarBasis:
    if m < 0:
        raise ValueError("polynomial degree must be non-negative")
    exps = tuple(monomial_exponents(m))
    rule = make_quadrature(max(2 * m, 1))
    V = _monomials(rule.points, exps)
    gram = V.T @ (rule.weights[:, None] * V)
    L = np.linalg.cholesky(gram)
    coeffs = np.linalg.inv(L).T
    return ScalarBasis(m, exps, coeffs)


# ---------------------------------------------------------------------------
# BDM


def ref_edge(i: int):
    """Start point and tangent (end - start) of reference edge ``i``."""
    a = REF_VERTICES[(i + 1) % 3]
    b = REF_VERTICES[(i + 2) % 3]
    return a, b - a


def ref_edge_normal(i: int):
    """Outward normal of reference edge ``i`` scaled by the edge length."""
    _, t = ref_edge(i)
    return np.array([t[1], -t[0]])


def interior_test_functions(k: int, points):
    """Interior moment weights: rotated lowest-order RT span for k = 2.

    Returns (..., n_interior, 2).
    """
    points = np.asarray(points, float)
    if k == 1:
        return np.zeros(points.shape[:-1] + (0, 2))
    if k == 2:
        x, y = points[..., 0], points[..., 1]
        one, zero = np.ones_like(x), np.zeros_like(x)
        return np.stack(
            [np.stack([one, zero], -1), np.stack([zero, one], -1), np.stack([-y, x], -1)],
            axis=-2,
        )
    raise ValueError(f"BDM degree {k} not supported")


@dataclass(frozen=True)
class BDMBasis:
    """Vector BDM_k basis dual to edge-Legendre and interior moments.

    Local ordering: for each reference edge ``i``, ``k+1`` normal-flux moments
    ``int_0^1 v(x(s)) . nu_i L_j(s) ds`` with ``nu_i`` the length-scaled outward
    normal; then the interior moments against :func:`interior_test_functions`.
    """

    k: int
    exponents: tuple
    coefficients: np.ndarray  # (n_monomial_vectors, dim)
    dof_matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    @property
    def n_edge(self) -> int:
        return 3 * (self.k + 1)

    @property
    def n_interior(self) -> int:
        return (self.k + 1) * (self.k - 1)

    def edge_dofs(self, i: int):
        return np.arange(i * (self.k + 1), (i + 1) * (self.k + 1))

    def values(self, points):
        """(..., dim, 2) basis values."""
        mono = _monomials(np.asarray(points, float), self.exponents)
        nm = mono.shape[-1]
        vx = mono @ self.coefficients[:nm]
        vy = mono @ self.coefficients[nm:]
        return np.stack([vx, vy], axis=-1)

    def divergence(self, points):
        """(..., dim) basis divergences."""
        dx, dy = _monomial_grads(np.asarray(points, float), self.exponents)
        nm = dx.shape[-1]
        return dx @ self.coefficients[:nm] + dy @ self.coefficients[nm:]


def bdm_dof_functionals(k: int, fn, n_line: int = 8, interior_rule=None):
    """Apply the BDM_k degrees of freedom to a vector function ``fn(points) -> (..., m, 2)``.

    Returns an array (n_dofs, m).
    """
    s, ws = gauss_line(n_line)
    rows = []
    for i in range(3):
        a, t = ref_edge(i)
        nu = ref_edge_normal(i)
        vals = fn(a + s[:, None] * t)  # (ns, m, 2)
        flux = vals @ nu  # (ns, m)
        for j in range(k + 1):
            rows.append((ws * shifted_legendre(j, s)) @ flux)
    if k > 1:
        rule = interior_rule or make_quadrature(2 * k)
        vals = fn(rule.points)  # (nq, m, 2)
        q = interior_test_functions(k, rule.points)  # (nq, ni, 2)
        rows.extend(np.einsum("q,qmc,qic->im", rule.weights, vals, q))
    return np.array(rows)


@lru_cache(maxsize=None)
def make_bdm_basis(k: int) -> BDMBasis:
    if k not in (1, 2):
        raise ValueError(f"BDM degree {k} not supported (1 or 2)")
    exps = tuple(monomial_exponents(k))
    nm = len(exps)

    def monomial_vectors(points):
        mono = _monomials(points, exps)
        zero = np.zeros_like(mono)
        return np.concatenate(
            [np.stack([mono, zero], -1), np.stack([zero, mono], -1)], axis=-2
        )

    D = bdm_dof_functionals(k, monomial_vectors)
    if D.shape != (2 * nm, 2 * nm):
        raise BasisError(f"DOF count {D.shape[0]} does not match dimension {2 * nm}")
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > 1e12:
        raise BasisError(f"singular BDM{k} DOF matrix (cond={cond:.3e})")
    return BDMBasis(k, exps, np.linalg.inv(D), D)


# ---------------------------------------------------------------------------
# Piola


def piola_map(jacobian, det, ref_values, ref_divergences=None):
    """Contravariant Piola transform of reference vector values.

    ``v = J vhat / det J`` and ``div v = div vhat / det J``. ``jacobian`` may be
    batched (..., 2, 2) with matching ``det`` (...); ``ref_values`` has shape
    (..., nq, nb, 2), broadcast against the leading batch axes. Tensor (row-wise)
    fields are handled by treating rows as separate vector fields.
    """
    J = np.asarray(jacobian, float)
    det = np.asarray(det, float)
    vals = np.einsum("...ij,...qbj->...qbi", J, ref_values) / det[..., None, None, None]
    if ref_divergences is None:
        return vals
    divs = np.asarray(ref_divergences) / det[..., None, None]
    return vals, divs
