"""Acceptance criteria, one PASS/FAIL line per check (see the terminal summary).

The heavy runs are module-scoped fixtures, so each mesh sequence is computed
once. The full module takes about two minutes on one core.
"""
import numpy as np
import pytest

import _oracle
from zenerfem import ExactSolution, TimeGrid, build_newmark_matrix, elliptic_project, inf_sup_constant, run
from zenerfem.assembly import assemble_load
from zenerfem.cli import RunConfig, run_convergence, run_energy_decay
from zenerfem.projector import bdm_commuting_residual, bdm_interpolate, commuting_residual
from zenerfem.refelem import MAX_QUADRATURE_DEGREE
from zenerfem.stepper import State, random_initial_data, step

from _helpers import UNIT, halves, make_system

pytestmark = pytest.mark.slow

BAND = (1.8, 2.3)
# published convergence history, second-order element, dt = h
TABLE1 = {
    8: (1.06e-02, 1.74e-02, 2.57e01),
    16: (2.44e-03, 3.95e-03, 6.48e00),
    32: (5.89e-04, 9.69e-04, 1.63e00),
    64: (1.46e-04, 2.37e-04, 4.19e-01),
}
CONSTRAINT_TOL = 1e-9


def in_band(value, band):
    return band[0] <= value <= band[1]


def rates_line(rows, names=("r_p", "r_r", "r_accel")):
    return ", ".join(f"{n}={getattr(rows[-1], n):.2f}" for n in names)


@pytest.fixture(scope="module")
def table1():
    return run_convergence(RunConfig(k=2, n_min=8, n_max=64))


@pytest.fixture(scope="module")
def locking():
    cfg = RunConfig(experiment="locking", k=2, n_min=8, n_max=32)
    return {pair: run_convergence(cfg, *pair) for pair in cfg.locking}


@pytest.fixture(scope="module")
def degree_one():
    return run_convergence(RunConfig(k=1, n_min=8, n_max=32))


# -- 1 -------------------------------------------------------------------------


def test_c1_rates(table1, verdict):
    last = table1[-1]
    ok = all(in_band(getattr(last, n), BAND) for n in ("r_p", "r_r", "r_accel"))
    detail = f"k=2, n=8..64, final pair 32->64: {rates_line(table1)} (band [{BAND[0]}, {BAND[1]}])"
    penultimate = table1[-2]
    detail += f"; pair 16->32 r_accel={penultimate.r_accel:.2f}"
    assert verdict("1 (rates)", ok, detail)


@pytest.mark.parametrize("column, index", [("e_p", 0), ("e_r", 1), ("e_accel", 2)])
def test_c1_magnitudes(table1, verdict, column, index):
    ratios = [getattr(row, column) / TABLE1[row.n][index] for row in table1]
    ok = all(1 / 3 <= r <= 3 for r in ratios)
    detail = f"{column} ratio to the published column: " + ", ".join(f"{r:.3g}" for r in ratios)
    assert verdict(f"1 (magnitude {column})", ok, detail + " (allowed [1/3, 3])")


def test_c1_constraint(table1, verdict):
    worst = max(r.max_constraint_residual for r in table1)
    assert verdict("6 (constraint, criterion-1 runs)", worst <= CONSTRAINT_TOL, f"max {worst:.2e}")


# -- 2 -------------------------------------------------------------------------


def test_c2_rates(locking, verdict):
    details, ok = [], True
    for (lam, mu), rows in locking.items():
        r = rows[-1].r_p
        ok &= in_band(r, (1.8, 2.4))
        details.append(f"(lam, mu)=({lam:g}, {mu:g}) r_p={r:.2f}")
    assert verdict("2 (locking rates)", ok, "; ".join(details) + " (band [1.8, 2.4])")


def test_c2_ratio(locking, verdict):
    a, b = locking.values()
    ratios = [max(x.e_p, y.e_p) / min(x.e_p, y.e_p) for x, y in zip(a, b)]
    ok = max(ratios) <= 2.0
    assert verdict("2 (locking e_p ratio)", ok, "max/min e_p per h: " + ", ".join(f"{r:.3f}" for r in ratios))


def test_c2_constraint(locking, verdict):
    worst = max(r.max_constraint_residual for rows in locking.values() for r in rows)
    assert verdict("6 (constraint, criterion-2 runs)", worst <= CONSTRAINT_TOL, f"max {worst:.2e}")


# -- 3 -------------------------------------------------------------------------


def test_c3_degree_one(degree_one, verdict):
    r = degree_one[-1].r_p
    worst = max(row.max_constraint_residual for row in degree_one)
    ok = in_band(r, (0.85, 1.25)) and worst <= CONSTRAINT_TOL
    assert verdict("3 (k=1 rate)", ok, f"r_p={r:.2f} (band [0.85, 1.25]); constraint max {worst:.2e}")


# -- 4 -------------------------------------------------------------------------


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_c4_dissipation(verdict, seed):
    decay = run_energy_decay(RunConfig(experiment="energy_decay", k=1, n_energy=8, steps=200, seed=seed))
    worst_res = max(decay.residuals)
    ok = decay.passed and worst_res <= CONSTRAINT_TOL and len(decay.energies) == 200
    detail = f"seed {seed}: max (E_k+1/2 - E_k-1/2)/E_1/2 = {decay.worst_increase:.2e}; constraint {worst_res:.2e}"
    assert verdict("4 (energy non-increasing)", ok, detail)


def test_c4_conservation(verdict):
    decay = run_energy_decay(RunConfig(experiment="energy_decay", k=1, n_energy=8, steps=200, damping=False))
    ok = decay.passed and max(decay.residuals) <= CONSTRAINT_TOL
    assert verdict("4 (undamped energy conserved)", ok, f"max |E - E_1/2|/E_1/2 = {decay.worst_increase:.2e}")


# -- 5 -------------------------------------------------------------------------


def smooth_tensor(x):
    s, c = np.sin(np.pi * x[..., 0]), np.cos(np.pi * x[..., 1])
    return np.stack([np.stack([s * c, x[..., 1] ** 3], -1), np.stack([np.exp(x[..., 0]), c], -1)], -2)


def smooth_tensor_div(x):
    pi = np.pi
    c = np.cos(pi * x[..., 1])
    d0 = pi * np.cos(pi * x[..., 0]) * c + 3 * x[..., 1] ** 2
    d1 = np.exp(x[..., 0]) - pi * np.sin(pi * x[..., 1])
    return np.stack([d0, d1], -1)


def test_c5_elliptic_projector(verdict):
    exact = ExactSolution(UNIT)
    worst = 0.0
    for k in (1, 2):
        for n in (4, 8):
            for kw in ({}, dict(rho={1: 1.0, 2: 4.0}, subdomain_rule=halves)):
                system = make_system(n, k, **kw)
                zeta, gamma, div = exact.stress_pair(0.6)
                p = elliptic_project(system, zeta, gamma, div)
                worst = max(worst, commuting_residual(system, p, div))
    assert verdict("5a (Xi_h commuting)", worst <= 1e-10, f"max residual {worst:.2e} over k=1,2, n=4,8, with and without rho jump")


def test_c5_interpolant(verdict):
    worst = 0.0
    for k in (1, 2):
        for n in (4, 8):
            disc = make_system(n, k, quad_degree=MAX_QUADRATURE_DEGREE).disc
            w = bdm_interpolate(disc, smooth_tensor)
            worst = max(worst, bdm_commuting_residual(disc, w, smooth_tensor_div))
    assert verdict("5b (Pi_h commuting)", worst <= 1e-10, f"max residual {worst:.2e} over k=1,2, n=4,8")


# -- 6 -------------------------------------------------------------------------


def test_c6_element_matrices(verdict):
    exact = ExactSolution(UNIT)
    worst = 0.0
    for k in (1, 2):
        system = make_system(1, k)
        ref = _oracle.dense_blocks(system.spaces.mesh, k, UNIT, F=exact.F, t=0.0)
        for name in ("G", "M", "M_omega", "K", "B", "B_U"):
            A = getattr(system, name).toarray()
            worst = max(worst, np.abs(A - ref[name]).max() / np.abs(ref[name]).max())
        load = assemble_load(system.disc, 0.0, exact.F)
        worst = max(worst, np.abs(load - ref["load"]).max() / np.abs(ref["load"]).max())
    assert verdict("6 (matrices vs dense oracle)", worst <= 1e-12, f"max relative difference {worst:.2e} on n=1, k=1,2")


def test_c6_newmark_step(verdict):
    exact = ExactSolution(UNIT)
    system = make_system(1, 1)
    dt = 0.25
    ref = _oracle.dense_blocks(system.spaces.mesh, 1, UNIT, F=exact.F, t=dt)
    M, Mw, K, B = ref["M"], ref["M_omega"], ref["K"], ref["B"]
    data = random_initial_data(system, np.random.default_rng(0))
    nQ = B.shape[0]
    A = np.block([[M / dt**2 + Mw / (2 * dt) + K / 4, B.T / dt**2], [B / dt**2, np.zeros((nQ, nQ))]])
    rhs = (ref["load"] + M @ (2 * data.p1 - data.p0) / dt**2 + Mw @ data.p0 / (2 * dt)
           - K @ (2 * data.p1 + data.p0) / 4 + B.T @ (2 * data.r1 - data.r0) / dt**2)
    x = np.linalg.solve(A, np.concatenate([rhs, np.zeros(nQ)]))
    new = step(State(data.p0, data.p1, data.r0, data.r1), build_newmark_matrix(system, dt),
               assemble_load(system.disc, dt, exact.F))
    diff = np.linalg.norm(np.concatenate([new.p_curr, new.r_curr]) - x) / np.linalg.norm(x)
    assert verdict("6 (Newmark step vs dense solve)", diff <= 1e-10, f"relative difference {diff:.2e} on n=1, k=1")


# -- 7 -------------------------------------------------------------------------


def test_c7_interpolant_rates(verdict):
    ok, parts = True, []
    for k in (1, 2):
        e = []
        for n in (4, 8, 16):
            disc = make_system(n, k).disc
            vals, _ = disc.eval_W(bdm_interpolate(disc, smooth_tensor))
            e.append(disc.l2_norm(vals - smooth_tensor(disc.points)))
        r = np.log2(np.array(e[:-1]) / np.array(e[1:]))
        ok &= bool(np.all(np.abs(r - (k + 1)) <= 0.3))
        parts.append(f"k={k}: " + ", ".join(f"{v:.2f}" for v in r) + f" (target {k + 1})")
    assert verdict("7 (Pi_h rates)", ok, "; ".join(parts))


def test_c7_projector_rates(verdict):
    exact = ExactSolution(UNIT)
    zeta, gamma, div = exact.stress_pair(0.5)
    ok, parts = True, []
    for k in (1, 2):
        e = []
        for n in (4, 8, 16):
            system = make_system(n, k)
            disc = system.disc
            zh, gh, dh = disc.eval_S(elliptic_project(system, zeta, gamma, div))
            x = disc.points
            e.append(np.sqrt(disc.l2_norm(zh - zeta(x)) ** 2 + disc.l2_norm(gh - gamma(x)) ** 2
                             + disc.l2_norm(dh - div(x)) ** 2))
        r = np.log2(np.array(e[:-1]) / np.array(e[1:]))
        ok &= bool(np.all(np.abs(r - k) <= 0.3))
        parts.append(f"k={k}: " + ", ".join(f"{v:.2f}" for v in r) + f" (target {k})")
    assert verdict("7 (Xi_h rates, S-norm)", ok, "; ".join(parts))


# -- 8 -------------------------------------------------------------------------


def test_c8_inf_sup(verdict):
    betas = {n: inf_sup_constant(make_system(n, 1)) for n in (4, 8, 16)}
    drop = 1 - betas[16] / betas[4]
    detail = ", ".join(f"n={n}: {b:.4f}" for n, b in betas.items()) + f"; decrease 4->16 {100 * drop:.1f}% (allowed 20%)"
    assert verdict("8 (inf-sup, k=1)", drop <= 0.2 and betas[16] > 0, detail)
