import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from zenerfem.material import (
    IsotropicMaterial,
    MaterialError,
    MaterialField,
    isotropic,
    isotropic_inverse,
    validate,
)

I = np.eye(2)
UNIT = IsotropicMaterial(mu=1.0, lam=1.0, a=3.0, b=3.0)

moduli = st.floats(0.01, 1e4)
factors = st.floats(1.01, 20.0)
tensors = arrays(np.float64, (2, 2), elements=st.floats(-10, 10))


def test_identity_map():
    tau = np.array([[1.0, 2.0], [3.0, -4.0]])
    assert np.allclose(isotropic(tau, 0.5, 0.0), tau)


def test_unit_material_values():
    assert np.allclose(UNIT.apply_C(I), 4 * I)
    assert np.allclose(UNIT.apply_D(I), 12 * I)
    assert np.allclose(UNIT.apply_DminusC(I), 8 * I)
    assert np.allclose(UNIT.apply_V(I), I / 8)
    assert np.allclose(UNIT.apply_Cinv(I), I / 4)
    dev = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(UNIT.apply_C(dev), 2 * dev)


@given(moduli, moduli, factors, factors, tensors)
@settings(max_examples=60, deadline=None)
def test_round_trips(mu, lam, a, b, tau):
    mat = IsotropicMaterial(mu, lam, a, b)
    scale = 1 + np.abs(tau).max()
    assert np.allclose(mat.apply_Cinv(mat.apply_C(tau)), tau, atol=1e-9 * scale)
    assert np.allclose(mat.apply_C(mat.apply_Cinv(tau)), tau, atol=1e-9 * scale)
    assert np.allclose(mat.apply_V(mat.apply_DminusC(tau)), tau, atol=1e-9 * scale)
    assert np.allclose(mat.apply_D(tau) - mat.apply_C(tau), mat.apply_DminusC(tau), rtol=1e-12, atol=1e-9 * scale)


@given(moduli, moduli, factors, factors, tensors)
@settings(max_examples=60, deadline=None)
def test_positive_and_bounded(mu, lam, a, b, tau):
    mat = IsotropicMaterial(mu, lam, a, b)
    sym = 0.5 * (tau + tau.T)
    nrm = np.sum(sym * sym)
    bounds = mat.bounds()
    for op, lo, hi in [
        (mat.apply_C, bounds["C_min"], bounds["C_max"]),
        (mat.apply_DminusC, bounds["DminusC_min"], bounds["DminusC_max"]),
    ]:
        q = np.sum(op(sym) * sym)
        assert q >= lo * nrm * (1 - 1e-12) - 1e-12
        assert q <= hi * nrm * (1 + 1e-12) + 1e-12


@given(moduli, moduli, tensors)
@settings(max_examples=40, deadline=None)
def test_commutes_with_transpose(m, l, tau):
    assert np.allclose(isotropic(tau.T, m, l), isotropic(tau, m, l).T)
    assert np.allclose(isotropic_inverse(tau.T, m, l), isotropic_inverse(tau, m, l).T)


def test_batched_application():
    taus = np.random.default_rng(0).normal(size=(5, 7, 2, 2))
    out = UNIT.apply_C(taus)
    assert out.shape == taus.shape
    assert np.allclose(out[3, 4], UNIT.apply_C(taus[3, 4]))


def test_validate_accepts_and_reports_bounds():
    bounds = validate(MaterialField(UNIT, rho={1: 1.0, 2: 4.0}, omega=1.0))
    assert bounds["C_min"] == 2.0
    assert bounds["alpha"] == pytest.approx(1 / 8)


@pytest.mark.parametrize(
    "mat, rho, omega, word",
    [
        (IsotropicMaterial(1, 1, 1.0, 3), 1.0, 1.0, "a > 1"),
        (IsotropicMaterial(1, 1, 3, 0.5), 1.0, 1.0, "b > 1"),
        (IsotropicMaterial(0, 1, 3, 3), 1.0, 1.0, "mu > 0"),
        (IsotropicMaterial(1, -1, 3, 3), 1.0, 1.0, "lambda > 0"),
        (UNIT, {1: 1.0, 2: -1.0}, 1.0, "rho > 0"),
        (UNIT, 1.0, 0.0, "omega > 0"),
    ],
)
def test_validate_rejects(mat, rho, omega, word):
    with pytest.raises(MaterialError, match=word):
        validate(MaterialField(mat, rho=rho, omega=omega))


def test_field_lookup():
    f = MaterialField(UNIT, rho={1: 1.0, 2: 4.0}, omega=2.0)
    assert f.rho_of([1, 2, 2]).tolist() == [1.0, 4.0, 4.0]
    assert f.omega_of([1, 2]).tolist() == [2.0, 2.0]
    with pytest.raises(MaterialError):
        f.rho_of([3])
