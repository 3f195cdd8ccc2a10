"""Isotropic Zener material: tensors C, D, their inverses, and per-subdomain rho, omega.

All tensor arguments are arrays of shape (..., 2, 2). The inverse formulas are
applied to general (not necessarily symmetric) tensors; trace and identity only
see the symmetric part.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class MaterialError(ValueError):
    pass


_I = np.eye(2)


def _trace(tau):
    return tau[..., 0, 0] + tau[..., 1, 1]


def isotropic(tau, m, l):
    """``2 m tau + l tr(tau) I``."""
    tau = np.asarray(tau, dtype=float)
    return 2.0 * m * tau + l * _trace(tau)[..., None, None] * _I


def isotropic_inverse(tau, m, l):
    """Inverse of :func:`isotropic` in two dimensions."""
    if 2.0 * m <= 0.0 or 2.0 * m + 2.0 * l <= 0.0:
        raise MaterialError(f"isotropic tensor with m={m}, l={l} is not invertible")
    tau = np.asarray(tau, dtype=float)
    c = l / (2.0 * m + 2.0 * l)
    return (tau - c * _trace(tau)[..., None, None] * _I) / (2.0 * m)


@dataclass(frozen=True)
class IsotropicMaterial:
    """``C tau = 2 mu tau + lam tr(tau) I`` and ``D tau = 2 a mu tau + b lam tr(tau) I``."""

    mu: float
    lam: float
    a: float
    b: float

    # effective (m, l) coefficients of C and of D - C
    @property
    def elastic_coefficients(self):
        return self.mu, self.lam

    @property
    def maxwell_coefficients(self):
        return (self.a - 1.0) * self.mu, (self.b - 1.0) * self.lam

    def apply_C(self, tau):
        return isotropic(tau, self.mu, self.lam)

    def apply_D(self, tau):
        return isotropic(tau, self.a * self.mu, self.b * self.lam)

    def apply_DminusC(self, tau):
        return isotropic(tau, *self.maxwell_coefficients)

    def apply_Cinv(self, tau):
        """The compliance ``A = C^{-1}``."""
        return isotropic_inverse(tau, *self.elastic_coefficients)

    def apply_V(self, tau):
        """``V = (D - C)^{-1}``."""
        return isotropic_inverse(tau, *self.maxwell_coefficients)

    def bounds(self) -> dict:
        """Spectral bounds of the constitutive operators on 2x2 tensors.

        ``alpha`` is the smallest eigenvalue of the pair (V, A), i.e. the
        coercivity constant of ``(V zeta, tau) + (A gamma, eta)`` in L2.
        """
        mu, lam = self.elastic_coefficients
        m, l = self.maxwell_coefficients
        return {
            "C_min": 2.0 * mu,
            "C_max": 2.0 * mu + 2.0 * lam,
            "DminusC_min": 2.0 * m,
            "DminusC_max": 2.0 * m + 2.0 * l,
            "alpha": min(1.0 / (2.0 * mu + 2.0 * lam), 1.0 / (2.0 * m + 2.0 * l)),
            "M": max(1.0 / (2.0 * mu), 1.0 / (2.0 * m)),
        }


@dataclass(frozen=True)
class MaterialField:
    """Homogeneous isotropic tensors with piecewise-constant density and relaxation time.

    ``rho`` and ``omega`` map subdomain labels to values; a plain float applies
    to every subdomain.
    """

    material: IsotropicMaterial
    rho: Mapping[int, float] | float = 1.0
    omega: Mapping[int, float] | float = 1.0
    omega0: float = field(default=0.0)

    def _lookup(self, table, labels):
        labels = np.asarray(labels)
        if np.isscalar(table) or isinstance(table, (int, float)):
            return np.full(labels.shape, float(table))
        try:
            return np.array([float(table[int(j)]) for j in labels.ravel()]).reshape(
                labels.shape
            )
        except KeyError as exc:
            raise MaterialError(f"no value given for subdomain {exc.args[0]}") from None

    def rho_of(self, labels) -> np.ndarray:
        return self._lookup(self.rho, labels)

    def omega_of(self, labels) -> np.ndarray:
        return self._lookup(self.omega, labels)

    def _values(self, table):
        if np.isscalar(table) or isinstance(table, (int, float)):
            return {None: float(table)}
        return {j: float(v) for j, v in table.items()}


def validate(field_: MaterialField | IsotropicMaterial) -> dict:
    """Check admissibility and return the spectral bounds of the material.

    Raises :class:`MaterialError` naming the first violated constraint.
    """
    if isinstance(field_, IsotropicMaterial):
        mat, rho, omega, omega0 = field_, {}, {}, 0.0
    else:
        mat = field_.material
        rho = field_._values(field_.rho)
        omega = field_._values(field_.omega)
        omega0 = field_.omega0
    checks = [
        (mat.mu > 0, f"mu > 0 violated (mu={mat.mu})"),
        (mat.lam > 0, f"lambda > 0 violated (lambda={mat.lam})"),
        (mat.a > 1, f"a > 1 violated (a={mat.a}); D - C is not positive definite"),
        (mat.b > 1, f"b > 1 violated (b={mat.b}); D - C is not positive definite"),
    ]
    for j, r in rho.items():
        checks.append((r > 0, f"rho > 0 violated on subdomain {j} (rho={r})"))
    for j, w in omega.items():
        checks.append((w > 0, f"omega > 0 violated on subdomain {j} (omega={w})"))
        checks.append((w >= omega0, f"omega >= omega0 violated on subdomain {j}"))
    for ok, message in checks:
        if not ok:
            raise MaterialError(message)
    return mat.bounds()
