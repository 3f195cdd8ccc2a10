"""Newmark trapezoidal time stepping for the stress/rotation unknowns.

For k = 1, ..., L-1 the step solves

    M dd p + M_omega d0 p + B^T dd r + K (p^{k+1} + 2 p^k + p^{k-1}) / 4 = load(t_k),
    B p^{k+1} = 0,

with ``dd`` the centred second difference and ``d0`` the centred first
difference. The half-step energy

    E^{k+1/2} = 1/2 |(p^{k+1} - p^k)/dt|_M^2 + 1/2 |(p^{k+1} + p^k)/2|_K^2

is non-increasing when the load vanishes.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assembly import (
    Factorization,
    NewmarkMatrix,
    SaddleSystem,
    SolverError,
    assemble_load,
    build_newmark_matrix,
    saddle_matrix,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"need at least two time steps, got L={self.L}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got T={self.T}")

    @property
    def dt(self) -> float:
        return self.T / self.L

    def t(self, k) -> float:
        # k == L returns T exactly
        return self.T if k == self.L else k * self.dt

    def t_half(self, k) -> float:
        """``t_{k+1/2}``."""
        return 0.5 * (self.t(k) + self.t(k + 1))


@dataclass
class InitialData:
    """Discrete initial data: S_h vectors ``p0, p1`` and Q_h vectors ``r0, r1``.

    ``p1``/``r1`` are the initial velocities.
    """

    p0: np.ndarray
    p1: np.ndarray
    r0: np.ndarray
    r1: np.ndarray

    @classmethod
    def zeros(cls, system: SaddleSystem):
        s = system.spaces
        return cls(np.zeros(s.n_S), np.zeros(s.n_S), np.zeros(s.n_Q), np.zeros(s.n_Q))

    def scaled(self, c: float):
        return InitialData(c * self.p0, c * self.p1, c * self.r0, c * self.r1)


@dataclass
class State:
    """Two consecutive time levels ``k-1`` and ``k``."""

    p_prev: np.ndarray
    p_curr: np.ndarray
    r_prev: np.ndarray
    r_curr: np.ndarray
    k: int = 1


def constrained_projection(system: SaddleSystem, vectors):
    """L2-orthogonal projection of S_h vectors onto ``{B p = 0}`` with the traction dofs zeroed."""
    spc = system.spaces
    fact = getattr(system, "_kernel_projector", None)
    if fact is None:
        fact = Factorization(saddle_matrix(system.G, system.B), fixed=spc.constrained, n_multipliers=spc.n_Q)
        system._kernel_projector = fact
    out = []
    for v in vectors:
        x = fact.solve(np.concatenate([system.G @ v, np.zeros(spc.n_Q)]))
        out.append(x[: spc.n_S])
    return out


def random_initial_data(system: SaddleSystem, rng: np.random.Generator) -> InitialData:
    """Random admissible data: stresses satisfy the skew constraint, rotations are free."""
    spc = system.spaces
    p0, p1 = constrained_projection(system, rng.standard_normal((2, spc.n_S)))
    r0, r1 = rng.standard_normal((2, spc.n_Q))
    return InitialData(p0, p1, r0, r1)


def constraint_residual(system: SaddleSystem, p) -> float:
    """``max_s |(s, p+)|`` over the Q_h basis, divided by the coefficient norm of p."""
    norm = np.linalg.norm(p)
    if norm == 0.0:
        return 0.0
    return float(np.max(np.abs(system.B @ p)) / norm)


def initial_acceleration(system: SaddleSystem, data: InitialData, load0, damping: bool = True):
    """Solve the semi-discrete equations at t = 0 for ``(p'', r'')``."""
    rhs_top = load0 - system.K @ data.p0
    if damping:
        rhs_top = rhs_top - system.M_omega @ data.p1
    A = saddle_matrix(system.M, system.B)
    fact = Factorization(A, fixed=system.spaces.constrained, n_multipliers=system.spaces.n_Q)
    x = fact.solve(np.concatenate([rhs_top, np.zeros(system.spaces.n_Q)]))
    n = system.spaces.n_S
    return x[:n], x[n:]


def startup(
    system: SaddleSystem,
    data: InitialData,
    dt: float,
    F: Optional[Callable] = None,
    first_level: Optional[tuple] = None,
    damping: bool = True,
) -> State:
    """State holding levels 0 and 1.

    By default level 1 is the second-order Taylor expansion with the discrete
    initial acceleration; ``first_level = (p1, r1)`` injects it directly (for
    instance the projected exact solution at ``t_1``).
    """
    if first_level is not None:
        p_1, r_1 = first_level
    else:
        load0 = assemble_load(system.disc, 0.0, F)
        pdd, rdd = initial_acceleration(system, data, load0, damping)
        p_1 = data.p0 + dt * data.p1 + 0.5 * dt**2 * pdd
        r_1 = data.r0 + dt * data.r1 + 0.5 * dt**2 * rdd
    return State(data.p0.copy(), np.asarray(p_1, float), data.r0.copy(), np.asarray(r_1, float), 1)


def step_rhs(system: SaddleSystem, state: State, dt: float, load, damping: bool = True):
    p0, p1 = state.p_prev, state.p_curr
    r0, r1 = state.r_prev, state.r_curr
    top = (
        load
        + system.M @ (2.0 * p1 - p0) / dt**2
        - system.K @ (2.0 * p1 + p0) / 4.0
        + system.B.T @ (2.0 * r1 - r0) / dt**2
    )
    if damping:
        top = top + system.M_omega @ p0 / (2.0 * dt)
    return np.concatenate([top, np.zeros(system.spaces.n_Q)])


def step(state: State, newmark: NewmarkMatrix, load) -> State:
    """Advance ``state`` by one step; ``load`` is the S_h load vector at ``t_k``."""
    system = newmark.system
    x = newmark.solve(step_rhs(system, state, newmark.dt, load, newmark.damping))
    n = system.spaces.n_S
    return State(state.p_curr, x[:n], state.r_curr, x[n:], state.k + 1)


def half_step_energy(system: SaddleSystem, p_lo, p_hi, dt: float) -> float:
    """``1/2 |(p_hi - p_lo)/dt|_M^2 + 1/2 |(p_hi + p_lo)/2|_K^2``."""
    v = (p_hi - p_lo) / dt
    a = 0.5 * (p_hi + p_lo)
    return float(0.5 * v @ (system.M @ v) + 0.5 * a @ (system.K @ a))


def energy(state: State, system: SaddleSystem, dt: float) -> float:
    """Energy at the half step between the two stored levels."""
    return half_step_energy(system, state.p_prev, state.p_curr, dt)


def acceleration(system: SaddleSystem, p_prev, p_curr, p_next, F: Optional[Callable], t: float):
    """U_h coefficients of ``(1/rho) (div((p^{n+1} + 2 p^n + p^{n-1})/4)+ + U_h F(t_n))``."""
    disc = system.disc
    avg = 0.25 * (p_next + 2.0 * p_curr + p_prev)
    div = disc.div_to_U(system.spaces.plus(avg))
    if F is not None:
        div = div + disc.project_U(disc.map_function(F, t))
    inv_rho = np.repeat(1.0 / disc.rho, 2 * disc.psi.shape[1])
    return inv_rho * div


@dataclass
class RunResult:
    grid: TimeGrid
    state: State
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    accel: Optional[np.ndarray] = None  # U_h acceleration at t_{L-1}
    initial_residual: float = 0.0  # constraint residual of p^0

    def write_series(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time", "energy", "constraint_residual"])
            for row in zip(self.steps, self.times, self.energies, self.residuals):
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])


def run(
    grid: TimeGrid,
    system: SaddleSystem,
    data: InitialData,
    F: Optional[Callable] = None,
    callbacks: Sequence[Callable] = (),
    stride: int = 1,
    damping: bool = True,
    first_level: Optional[tuple] = None,
    newmark: Optional[NewmarkMatrix] = None,
) -> RunResult:
    """Startup followed by ``L - 1`` Newmark steps.

    The series record, for every level ``k >= 1``, the energy at ``t_{k-1/2}``
    and the constraint residual of ``p^k`` (level 0 is checked first).
    ``callbacks`` are called as ``cb(state, result)`` every ``stride`` steps and
    must not modify the state.
    """
    dt = grid.dt
    if newmark is None:
        newmark = build_newmark_matrix(system, dt, damping=damping)
    elif abs(newmark.dt - dt) > 1e-14 * dt or newmark.damping != damping:
        raise ValueError("Newmark matrix was built for a different dt or damping mode")
    state = startup(system, data, dt, F, first_level=first_level, damping=damping)
    result = RunResult(grid, state)

    def record(st):
        result.steps.append(st.k)
        result.times.append(grid.t(st.k) - 0.5 * dt)
        result.energies.append(energy(st, system, dt))
        result.residuals.append(constraint_residual(system, st.p_curr))

    result.initial_residual = constraint_residual(system, state.p_prev)
    record(state)
    for k in range(1, grid.L):
        load = assemble_load(system.disc, grid.t(k), F)
        try:
            new = step(state, newmark, load)
        except SolverError as exc:
            raise SolverError(f"step {k}: {exc}") from None
        if k == grid.L - 1:
            result.accel = acceleration(
                system, state.p_prev, state.p_curr, new.p_curr, F, grid.t(k)
            )
        state = new
        record(state)
        if callbacks and (k % stride == 0 or k == grid.L - 1):
            for cb in callbacks:
                cb(state, result)
    result.state = state
    log.debug("run finished: L=%d dt=%.3e final energy %.6e", grid.L, dt, result.energies[-1])
    return result
