import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zenerfem.refelem import (
    MAX_QUADRATURE_DEGREE,
    bdm_dof_functionals,
    gauss_line,
    interior_test_functions,
    make_bdm_basis,
    make_quadrature,
    piola_map,
    ref_edge,
    ref_edge_normal,
    scalar_basis,
)


def integrate(rule, f):
    return rule.weights @ f(rule.points)


def test_quadrature_examples():
    rule = make_quadrature(4)
    assert integrate(rule, lambda x: np.ones(len(x))) == pytest.approx(0.5, abs=1e-15)
    assert integrate(rule, lambda x: x[:, 0]) == pytest.approx(1 / 6, abs=1e-15)
    assert integrate(rule, lambda x: x[:, 0] ** 2 * x[:, 1]) == pytest.approx(1 / 60, abs=1e-15)


@pytest.mark.parametrize("degree", range(1, MAX_QUADRATURE_DEGREE + 1))
def test_quadrature_exact_for_monomials(degree):
    rule = make_quadrature(degree)
    assert rule.degree == degree
    assert np.all(rule.weights > 0)
    assert np.all(rule.points >= 0) and np.all(rule.points.sum(1) <= 1)
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            exact = math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)
            got = integrate(rule, lambda x: x[:, 0] ** p * x[:, 1] ** q)
            assert got == pytest.approx(exact, rel=1e-13, abs=1e-16)


@pytest.mark.parametrize("degree", [0, -1, MAX_QUADRATURE_DEGREE + 1, 2.5])
def test_quadrature_rejects_bad_degree(degree):
    with pytest.raises(ValueError):
        make_quadrature(degree)


def test_gauss_line():
    s, w = gauss_line(4)
    assert w.sum() == pytest.approx(1.0)
    assert w @ s**7 == pytest.approx(1 / 8)


@pytest.mark.parametrize("m, dim", [(0, 1), (1, 3), (2, 6)])
def test_scalar_basis_orthonormal(m, dim):
    sb = scalar_basis(m)
    assert sb.dim == dim
    rule = make_quadrature(max(2 * m, 1) + 2)
    V = sb(rule.points)
    assert np.allclose(V.T @ (rule.weights[:, None] * V), np.eye(dim), atol=1e-13)


@pytest.mark.parametrize("k, dim, ne, ni", [(1, 6, 6, 0), (2, 12, 9, 3)])
def test_bdm_dimensions(k, dim, ne, ni):
    basis = make_bdm_basis(k)
    assert (basis.dim, basis.n_edge, basis.n_interior) == (dim, ne, ni)
    assert interior_test_functions(k, np.zeros((1, 2))).shape == (1, ni, 2)


@pytest.mark.parametrize("k", [1, 2])
def test_bdm_unisolvent(k):
    basis = make_bdm_basis(k)
    D = bdm_dof_functionals(k, basis.values)
    assert np.allclose(D, np.eye(basis.dim), atol=1e-12)
    assert np.linalg.cond(basis.dof_matrix) < 1e6


@pytest.mark.parametrize("k", [1, 2])
def test_bdm_normal_traces(k):
    basis = make_bdm_basis(k)
    s, _ = gauss_line(10)
    for i in range(3):
        a, t = ref_edge(i)
        nu = ref_edge_normal(i)
        flux = basis.values(a + s[:, None] * t) @ nu  # (ns, dim)
        others = np.setdiff1d(np.arange(basis.dim), basis.edge_dofs(i))
        # only the dofs of edge i have a normal trace on edge i
        assert np.allclose(flux[:, others], 0, atol=1e-12)
        assert np.abs(flux[:, basis.edge_dofs(i)]).max() > 0.5


@pytest.mark.parametrize("k", [1, 2])
def test_bdm_divergence_matches_finite_differences(k):
    basis = make_bdm_basis(k)
    x = np.array([[0.2, 0.3], [0.6, 0.1], [0.1, 0.7]])
    h = 1e-6
    ex, ey = np.array([h, 0]), np.array([0, h])
    fd = (basis.values(x + ex)[..., 0] - basis.values(x - ex)[..., 0]) / (2 * h) + (
        basis.values(x + ey)[..., 1] - basis.values(x - ey)[..., 1]
    ) / (2 * h)
    assert np.allclose(basis.divergence(x), fd, atol=1e-7)


@pytest.mark.parametrize("k", [1, 2])
def test_div_theorem_on_reference(k):
    basis = make_bdm_basis(k)
    rule = make_quadrature(2 * k)
    s, ws = gauss_line(8)
    interior = rule.weights @ basis.divergence(rule.points)
    boundary = sum(ws @ (basis.values(ref_edge(i)[0] + s[:, None] * ref_edge(i)[1]) @ ref_edge_normal(i)) for i in range(3))
    assert np.allclose(interior, boundary, atol=1e-13)


def test_piola_identity():
    basis = make_bdm_basis(2)
    x = make_quadrature(4).points
    v, d = piola_map(np.eye(2), 1.0, basis.values(x), basis.divergence(x))
    assert np.allclose(v, basis.values(x))
    assert np.allclose(d, basis.divergence(x))


jac = st.tuples(*[st.floats(-2, 2)] * 4).map(lambda a: np.array(a).reshape(2, 2)).filter(
    lambda J: abs(np.linalg.det(J)) > 0.1
)


@given(jac, st.integers(1, 2))
@settings(max_examples=30, deadline=None)
def test_piola_preserves_edge_flux(J, k):
    """Flux through a mapped edge equals the reference flux, edge by edge."""
    basis = make_bdm_basis(k)
    det = np.linalg.det(J)
    s, ws = gauss_line(8)
    for i in range(3):
        a, t = ref_edge(i)
        xh = a + s[:, None] * t
        ref_flux = ws @ (basis.values(xh) @ ref_edge_normal(i))
        v = piola_map(J, det, basis.values(xh)[None])[0]
        tp = J @ t
        nu = np.array([tp[1], -tp[0]])  # cof(J) nu_hat
        assert np.allclose(ws @ (v @ nu), ref_flux, atol=1e-11)


@given(jac)
@settings(max_examples=30, deadline=None)
def test_piola_divergence_consistent(J):
    """div of the mapped field, by finite differences in physical space, equals the mapped divergence."""
    basis = make_bdm_basis(2)
    det = np.linalg.det(J)
    Jinv = np.linalg.inv(J)
    xh = np.array([[0.3, 0.3]])
    x = xh @ J.T
    h = 1e-6

    def phys(y):
        return piola_map(J, det, basis.values(y @ Jinv.T)[None])[0]

    fd = sum((phys(x + h * np.eye(2)[c])[..., c] - phys(x - h * np.eye(2)[c])[..., c]) / (2 * h) for c in range(2))
    _, d = piola_map(J, det, basis.values(xh), basis.divergence(xh))
    assert np.allclose(fd, d, atol=1e-6 * (1 + np.abs(d).max()))


def test_bdm_rejects_degree():
    with pytest.raises(ValueError):
        make_bdm_basis(3)
