"""Manufactured solution on the unit square and the relative error functionals.

The displacement is separable,

    u(x, t) = cos(t) u_A(x) + (1 + t) u_B(x),
    u_A = ((1 - x1) x1^2 sin(pi x2), 0),   u_B = (0, sin(pi x1) sin(pi x2)),

and the Maxwell stress is the time-periodic particular solution of
``zeta' + zeta / omega = (D - C) eps(u')`` (constant omega), i.e.

    zeta = (alpha cos t + beta sin t) (D - C) eps(u_A) + omega (D - C) eps(u_B),
    alpha = omega^2 / (1 + omega^2),  beta = -omega / (1 + omega^2),

so no exponential transient appears. The body force is ``F = rho u'' - div sigma``.
All fields accept points of shape (..., 2); ``d`` selects a time derivative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .material import IsotropicMaterial, isotropic

PI = np.pi


def _cos_t(t, d):
    return [np.cos, lambda s: -np.sin(s), lambda s: -np.cos(s), np.sin][d % 4](t)


def _sin_t(t, d):
    return [np.sin, np.cos, lambda s: -np.sin(s), lambda s: -np.cos(s)][d % 4](t)


# spatial parts and their derivatives ------------------------------------------


def _grad_A(x):
    x1, x2 = x[..., 0], x[..., 1]
    f, fp = x1**2 - x1**3, 2 * x1 - 3 * x1**2
    g, gp = np.sin(PI * x2), PI * np.cos(PI * x2)
    G = np.zeros(x.shape[:-1] + (2, 2))
    G[..., 0, 0] = fp * g
    G[..., 0, 1] = f * gp
    return G


def _grad_B(x):
    x1, x2 = x[..., 0], x[..., 1]
    G = np.zeros(x.shape[:-1] + (2, 2))
    G[..., 1, 0] = PI * np.cos(PI * x1) * np.sin(PI * x2)
    G[..., 1, 1] = PI * np.sin(PI * x1) * np.cos(PI * x2)
    return G


def _lap_graddiv_A(x):
    """(Laplacian, grad div) of u_A."""
    x1, x2 = x[..., 0], x[..., 1]
    f, fp, fpp = x1**2 - x1**3, 2 * x1 - 3 * x1**2, 2 - 6 * x1
    g, gp = np.sin(PI * x2), PI * np.cos(PI * x2)
    gpp = -(PI**2) * g
    zero = np.zeros_like(x1)
    lap = np.stack([fpp * g + f * gpp, zero], axis=-1)
    gd = np.stack([fpp * g, fp * gp], axis=-1)
    return lap, gd


def _lap_graddiv_B(x):
    x1, x2 = x[..., 0], x[..., 1]
    s1, s2 = np.sin(PI * x1), np.sin(PI * x2)
    c1, c2 = np.cos(PI * x1), np.cos(PI * x2)
    zero = np.zeros_like(x1)
    lap = np.stack([zero, -2 * PI**2 * s1 * s2], axis=-1)
    gd = np.stack([PI**2 * c1 * c2, -(PI**2) * s1 * s2], axis=-1)
    return lap, gd


def _sym(G):
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def _div_isotropic(lap, gd, m, l):
    """div(2 m eps(w) + l div(w) I) = m lap w + (m + l) grad div w."""
    return m * lap + (m + l) * gd


@dataclass(frozen=True)
class ExactSolution:
    material: IsotropicMaterial
    rho: float = 1.0
    omega: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (np.isscalar(self.omega) and np.isscalar(self.rho)):
            raise ValueError("the manufactured solution needs constant rho and omega")

    # time factors
    @property
    def alpha(self):
        w = self.omega
        return w**2 / (1.0 + w**2)

    @property
    def beta(self):
        w = self.omega
        return -w / (1.0 + w**2)

    def _cA(self, t, d):
        return self.amplitude * _cos_t(t, d)

    def _cB(self, t, d):
        return self.amplitude * ((1.0 + t) if d == 0 else (1.0 if d == 1 else 0.0))

    def _zA(self, t, d):
        return self.amplitude * (self.alpha * _cos_t(t, d) + self.beta * _sin_t(t, d))

    def _zB(self, t, d):
        return self.amplitude * (self.omega if d == 0 else 0.0)

    # displacement
    def u(self, x, t, d=0):
        x = np.asarray(x, float)
        x1, x2 = x[..., 0], x[..., 1]
        uA = (1 - x1) * x1**2 * np.sin(PI * x2)
        uB = np.sin(PI * x1) * np.sin(PI * x2)
        return np.stack([self._cA(t, d) * uA, self._cB(t, d) * uB], axis=-1)

    def udot(self, x, t):
        return self.u(x, t, 1)

    def uddot(self, x, t):
        return self.u(x, t, 2)

    def grad_u(self, x, t, d=0):
        x = np.asarray(x, float)
        return self._cA(t, d) * _grad_A(x) + self._cB(t, d) * _grad_B(x)

    def strain(self, x, t, d=0):
        return _sym(self.grad_u(x, t, d))

    # stresses
    def gamma(self, x, t, d=0):
        """Elastic part ``C eps(u)``."""
        return self.material.apply_C(self.strain(x, t, d))

    def zeta(self, x, t, d=0):
        """Maxwell part ``sigma - C eps(u)``."""
        x = np.asarray(x, float)
        m, l = self.material.maxwell_coefficients
        eA, eB = _sym(_grad_A(x)), _sym(_grad_B(x))
        return self._zA(t, d) * isotropic(eA, m, l) + self._zB(t, d) * isotropic(eB, m, l)

    def sigma(self, x, t, d=0):
        return self.zeta(x, t, d) + self.gamma(x, t, d)

    def div_gamma(self, x, t, d=0):
        x = np.asarray(x, float)
        mu, lam = self.material.elastic_coefficients
        dA = _div_isotropic(*_lap_graddiv_A(x), mu, lam)
        dB = _div_isotropic(*_lap_graddiv_B(x), mu, lam)
        return self._cA(t, d) * dA + self._cB(t, d) * dB

    def div_zeta(self, x, t, d=0):
        x = np.asarray(x, float)
        m, l = self.material.maxwell_coefficients
        dA = _div_isotropic(*_lap_graddiv_A(x), m, l)
        dB = _div_isotropic(*_lap_graddiv_B(x), m, l)
        return self._zA(t, d) * dA + self._zB(t, d) * dB

    def div_sigma(self, x, t, d=0):
        return self.div_zeta(x, t, d) + self.div_gamma(x, t, d)

    def r(self, x, t, d=0):
        """(1, 2) entry of the rotation ``(grad u - grad u^T) / 2``."""
        G = self.grad_u(x, t, d)
        return 0.5 * (G[..., 0, 1] - G[..., 1, 0])

    def r_tensor(self, x, t, d=0):
        G = self.grad_u(x, t, d)
        return 0.5 * (G - np.swapaxes(G, -1, -2))

    def F(self, x, t):
        return self.rho * self.uddot(x, t) - self.div_sigma(x, t)

    # initial data, built from u0, u1, sigma0 the same way as for arbitrary data
    def initial_data(self, x):
        """Dictionary of the compatible initial fields at points ``x``."""
        mat = self.material
        e0, e1 = self.strain(x, 0.0), self.strain(x, 0.0, 1)
        gamma0, gamma1 = mat.apply_C(e0), mat.apply_C(e1)
        zeta0 = self.sigma(x, 0.0) - gamma0
        zeta1 = mat.apply_D(e1) - gamma1 - zeta0 / self.omega
        G0, G1 = self.grad_u(x, 0.0), self.grad_u(x, 0.0, 1)
        return {
            "gamma0": gamma0,
            "gamma1": gamma1,
            "zeta0": zeta0,
            "zeta1": zeta1,
            "r0": G0 - e0,
            "r1": G1 - e1,
        }

    # callables of points only, for the projectors
    def stress_pair(self, t, d=0):
        """``(zeta, gamma, div p+)`` callables at fixed time."""
        return (
            lambda x: self.zeta(x, t, d),
            lambda x: self.gamma(x, t, d),
            lambda x: self.div_sigma(x, t, d),
        )


# ---------------------------------------------------------------------------
# discrete data and errors


def discrete_initial_data(system, exact: ExactSolution):
    """Projected initial data: mixed projection for the stresses, L2 for rotations."""
    from .projector import elliptic_project_values
    from .stepper import InitialData

    disc = system.disc
    x = disc.points
    init = exact.initial_data(x)
    p0 = elliptic_project_values(system, init["zeta0"], init["gamma0"], exact.div_sigma(x, 0.0))
    p1 = elliptic_project_values(system, init["zeta1"], init["gamma1"], exact.div_sigma(x, 0.0, 1))
    r0 = disc.project_Q(init["r0"][..., 0, 1])
    r1 = disc.project_Q(init["r1"][..., 0, 1])
    return InitialData(p0, p1, r0, r1)


def projected_level(system, exact: ExactSolution, t: float):
    """``(Xi_h p(t), Q_h r(t))``, e.g. to seed the first time level."""
    from .projector import elliptic_project_values

    disc = system.disc
    x = disc.points
    p = elliptic_project_values(system, exact.zeta(x, t), exact.gamma(x, t), exact.div_sigma(x, t))
    return p, disc.project_Q(exact.r(x, t))


@dataclass(frozen=True)
class ErrorReport:
    e_p: float
    e_r: float
    e_accel: float
    norm_p: float
    norm_r: float
    norm_accel: float


def error_levels(system, exact: ExactSolution, p_half, r_half, t_half, accel=None, t_accel=None):
    """Relative errors of a half-step stress/rotation pair and an acceleration.

    ``p_half`` is an S_h vector compared in the S-norm with ``p(t_half)``;
    ``r_half`` a Q_h vector compared in L2 with ``r(t_half)``; ``accel`` a U_h
    vector compared in L2 with ``u''(t_accel)``.
    """
    disc = system.disc
    x = disc.points
    zh, gh, dh = disc.eval_S(p_half)
    z, g, d = exact.zeta(x, t_half), exact.gamma(x, t_half), exact.div_sigma(x, t_half)
    err_p = np.sqrt(disc.l2_norm(z - zh) ** 2 + disc.l2_norm(g - gh) ** 2 + disc.l2_norm(d - dh) ** 2)
    norm_p = np.sqrt(disc.l2_norm(z) ** 2 + disc.l2_norm(g) ** 2 + disc.l2_norm(d) ** 2)
    # skew tensors: |r|^2 = 2 r_12^2
    r = exact.r(x, t_half)
    err_r = np.sqrt(2.0) * disc.l2_norm(r - disc.eval_Q(r_half))
    norm_r = np.sqrt(2.0) * disc.l2_norm(r)
    if accel is not None:
        a = exact.uddot(x, t_accel)
        err_a = disc.l2_norm(a - disc.eval_U(accel))
        norm_a = disc.l2_norm(a)
    else:
        err_a, norm_a = np.nan, np.nan
    return ErrorReport(
        float(err_p / norm_p),
        float(err_r / norm_r),
        float(err_a / norm_a) if accel is not None else np.nan,
        float(norm_p),
        float(norm_r),
        float(norm_a),
    )


def error_report(system, exact: ExactSolution, result) -> ErrorReport:
    """Errors at ``t_{L-1/2}`` (stresses, rotation) and ``t_{L-1}`` (acceleration)."""
    grid = result.grid
    st = result.state
    if st.k != grid.L or result.accel is None:
        raise ValueError(f"run incomplete: reached level {st.k} of {grid.L}")
    p_half = 0.5 * (st.p_curr + st.p_prev)
    r_half = 0.5 * (st.r_curr + st.r_prev)
    return error_levels(
        system, exact, p_half, r_half, grid.t_half(grid.L - 1), result.accel, grid.t(grid.L - 1)
    )
