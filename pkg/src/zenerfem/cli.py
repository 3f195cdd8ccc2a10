"""Configuration-driven experiment driver.

Three experiments are available:

* ``convergence``: manufactured-solution runs on a doubling mesh sequence with
  ``dt = h``, written as a rate table;
* ``locking``: the convergence table repeated for several ``(lam, mu)`` pairs,
  one CSV per pair;
* ``energy_decay``: unforced run from random admissible data, written as an
  energy/constraint time series.

The configuration is a flat ``key = value`` text file::

    # second-order element, dt = h
    experiment = convergence
    k = 2
    n_min = 8
    n_max = 32
    mu = 1
    lam = 1

Per-subdomain values of ``rho`` and ``omega`` are written ``1:1.0, 2:4.0``
together with ``subdomains = halves``.

Exit codes: 0 when the acceptance check of the experiment passes, 1 when it
fails, 2 on invalid input or a numerical error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import mms
from .assembly import Discretization, SolverError, assemble_blocks, build_newmark_matrix
from .material import IsotropicMaterial, MaterialError, MaterialField, validate
from .mesh import MeshError, build_uniform
from .spaces import build_spaces
from .stepper import TimeGrid, random_initial_data, run

log = logging.getLogger(__name__)

EXPERIMENTS = ("convergence", "locking", "energy_decay")
TABLE_HEADER = ("h", "e_p", "r_p", "e_r", "r_r", "e_accel", "r_accel")

# acceptance bands on the last refinement pair
RATE_BANDS = {
    2: {"r_p": (1.8, 2.3), "r_r": (1.8, 2.3), "r_accel": (1.8, 2.3)},
    1: {"r_p": (0.85, 1.25)},
}
LOCKING_BAND = (1.8, 2.4)
LOCKING_RATIO = 2.0
CONSTRAINT_TOL = 1e-9
ENERGY_SLACK = 1e-10
ENERGY_CONSERVATION = 1e-9


class ConfigError(ValueError):
    pass


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _parse_table(text: str):
    """``"1.5"`` -> 1.5, ``"1:1.0, 2:4.0"`` -> {1: 1.0, 2: 4.0}."""
    if ":" not in text:
        return float(text)
    out = {}
    for item in text.split(","):
        label, value = item.split(":")
        out[int(label)] = float(value)
    return out


def _parse_pairs(text: str):
    """``"150:3, 15000:3"`` -> [(150.0, 3.0), (15000.0, 3.0)] as (lam, mu)."""
    pairs = []
    for item in text.split(","):
        lam, mu = item.split(":")
        pairs.append((float(lam), float(mu)))
    return tuple(pairs)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "convergence"
    k: int = 2
    n_min: int = 8
    n_max: int = 32
    dt: str = "h"  # "h" or a fixed step size
    T: float = 1.0
    mu: float = 1.0
    lam: float = 1.0
    a: float = 3.0
    b: float = 3.0
    rho: object = 1.0
    omega: object = 1.0
    subdomains: str = "none"
    startup: str = "taylor"
    locking: tuple = ((150.0, 3.0), (15000.0, 3.0))
    n_energy: int = 8
    steps: int = 200
    seed: int = 0
    damping: bool = True
    out: str = "out.csv"

    _PARSERS = {
        "k": int,
        "n_min": int,
        "n_max": int,
        "n_energy": int,
        "steps": int,
        "seed": int,
        "T": float,
        "mu": float,
        "lam": float,
        "a": float,
        "b": float,
        "rho": _parse_table,
        "omega": _parse_table,
        "locking": _parse_pairs,
        "damping": _parse_bool,
    }

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.k not in (1, 2):
            raise ConfigError(f"k must be 1 or 2, got {self.k}")
        if not (_is_power_of_two(self.n_min) and _is_power_of_two(self.n_max)):
            raise ConfigError(f"n_min={self.n_min} and n_max={self.n_max} must be powers of two")
        if self.n_min > self.n_max:
            raise ConfigError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        if self.dt != "h":
            try:
                dt = float(self.dt)
            except ValueError:
                raise ConfigError(f"dt must be 'h' or a number, got {self.dt!r}") from None
            if not dt > 0:
                raise ConfigError(f"dt must be positive, got {dt}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.subdomains not in ("none", "halves"):
            raise ConfigError(f"subdomains must be 'none' or 'halves', got {self.subdomains!r}")
        if self.startup not in ("taylor", "exact"):
            raise ConfigError(f"startup must be 'taylor' or 'exact', got {self.startup!r}")
        if self.steps < 2:
            raise ConfigError(f"steps must be at least 2, got {self.steps}")
        # material admissibility, for every (lam, mu) this config will use
        for lam, mu in self.materials():
            try:
                validate(self.field(lam, mu))
            except MaterialError as exc:
                raise ConfigError(str(exc)) from None

    @classmethod
    def from_text(cls, text: str, **overrides) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in names:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = cls._PARSERS.get(key, str)(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        return cls.from_text(Path(path).read_text(), **overrides)

    def materials(self):
        if self.experiment == "locking":
            return list(self.locking)
        return [(self.lam, self.mu)]

    def field(self, lam: Optional[float] = None, mu: Optional[float] = None) -> MaterialField:
        mat = IsotropicMaterial(
            mu=self.mu if mu is None else mu, lam=self.lam if lam is None else lam, a=self.a, b=self.b
        )
        return MaterialField(mat, rho=self.rho, omega=self.omega)

    def mesh_sizes(self):
        n, out = self.n_min, []
        while n <= self.n_max:
            out.append(n)
            n *= 2
        return out

    def time_step(self, n: int) -> float:
        return 1.0 / n if self.dt == "h" else float(self.dt)

    def subdomain_rule(self):
        if self.subdomains == "halves":
            return lambda x: np.where(np.asarray(x)[..., 0] < 0.5, 1, 2)
        return None


@dataclass
class ConvergenceRow:
    h: float
    e_p: float
    e_r: float
    e_accel: float
    r_p: Optional[float] = None
    r_r: Optional[float] = None
    r_accel: Optional[float] = None
    n: int = 0
    max_constraint_residual: float = 0.0


def rate(e: float, e_hat: float, h: float, h_hat: float) -> float:
    """``log(e/e_hat) / log(h/h_hat)`` for consecutive meshes ``h`` (coarse), ``h_hat`` (fine)."""
    return math.log(e / e_hat) / math.log(h / h_hat)


def fill_rates(rows):
    for prev, row in zip(rows, rows[1:]):
        row.r_p = rate(prev.e_p, row.e_p, prev.h, row.h)
        row.r_r = rate(prev.e_r, row.e_r, prev.h, row.h)
        row.r_accel = rate(prev.e_accel, row.e_accel, prev.h, row.h)
    return rows


def convergence_row(config: RunConfig, n: int, lam=None, mu=None) -> ConvergenceRow:
    """One manufactured-solution run on the ``n x n`` mesh."""
    fld = config.field(lam, mu)
    if not (np.isscalar(fld.rho) and np.isscalar(fld.omega)):
        raise ConfigError("the manufactured solution needs constant rho and omega")
    exact = mms.ExactSolution(fld.material, rho=float(fld.rho), omega=float(fld.omega))
    mesh = build_uniform(n, subdomain_rule=config.subdomain_rule())
    system = assemble_blocks(Discretization(build_spaces(mesh, config.k), fld))
    dt = config.time_step(n)
    L = int(round(config.T / dt))
    if abs(L * dt - config.T) > 1e-12 * config.T:
        raise ConfigError(f"T={config.T} is not a multiple of dt={dt}")
    grid = TimeGrid(config.T, L)
    data = mms.discrete_initial_data(system, exact)
    first = mms.projected_level(system, exact, grid.t(1)) if config.startup == "exact" else None
    result = run(grid, system, data, F=exact.F, first_level=first)
    err = mms.error_report(system, exact, result)
    worst = max([result.initial_residual] + result.residuals)
    log.info("n=%d e_p=%.3e e_r=%.3e e_accel=%.3e", n, err.e_p, err.e_r, err.e_accel)
    return ConvergenceRow(
        h=1.0 / n, e_p=err.e_p, e_r=err.e_r, e_accel=err.e_accel, n=n, max_constraint_residual=worst
    )


def run_convergence(config: RunConfig, lam=None, mu=None):
    rows = []
    for n in config.mesh_sizes():
        try:
            rows.append(convergence_row(config, n, lam, mu))
        except (SolverError, MeshError, MaterialError) as exc:
            raise type(exc)(f"n={n}: {exc}") from None
    return fill_rates(rows)


def run_locking(config: RunConfig):
    """``{(lam, mu): rows}`` for every pair of ``config.locking``."""
    return {pair: run_convergence(config, *pair) for pair in config.locking}


@dataclass
class EnergyDecay:
    times: list
    energies: list
    residuals: list
    passed: bool
    worst_increase: float
    result: object = field(repr=False, default=None)


def energy_verdict(energies, damping: bool = True):
    """``(passed, worst)``: monotone decay within slack, or conservation when undamped."""
    E = np.asarray(energies, float)
    ref = E[0]
    if ref == 0.0:
        return bool(np.all(E == 0.0)), 0.0
    if damping:
        worst = float(np.max(np.diff(E)) / ref) if len(E) > 1 else 0.0
        return worst <= ENERGY_SLACK, worst
    worst = float(np.max(np.abs(E - ref)) / ref)
    return worst <= ENERGY_CONSERVATION, worst


def run_energy_decay(config: RunConfig, data=None) -> EnergyDecay:
    n = config.n_energy
    mesh = build_uniform(n, subdomain_rule=config.subdomain_rule())
    system = assemble_blocks(Discretization(build_spaces(mesh, config.k), config.field()))
    dt = config.time_step(n)
    grid = TimeGrid(config.steps * dt, config.steps)
    if data is None:
        data = random_initial_data(system, np.random.default_rng(config.seed))
    nm = build_newmark_matrix(system, grid.dt, damping=config.damping)
    result = run(grid, system, data, F=None, damping=config.damping, newmark=nm)
    passed, worst = energy_verdict(result.energies, config.damping)
    return EnergyDecay(result.times, result.energies, result.residuals, passed, worst, result)


# -- output -----------------------------------------------------------------


def _fmt_err(e: float) -> str:
    return f"{e:.2e}"


def _fmt_rate(r: Optional[float]) -> str:
    return "" if r is None else f"{r:.2f}"


def emit_table(rows, path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for r in rows:
            w.writerow(
                [
                    repr(float(r.h)),
                    _fmt_err(r.e_p),
                    _fmt_rate(r.r_p),
                    _fmt_err(r.e_r),
                    _fmt_rate(r.r_r),
                    _fmt_err(r.e_accel),
                    _fmt_rate(r.r_accel),
                ]
            )


def read_table(path):
    """Rows of a rate table as dictionaries of floats (None for blank rates)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TABLE_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in reader]


def locking_paths(out, pairs):
    out = Path(out)
    return {p: out.with_name(f"{out.stem}_lam{p[0]:g}_mu{p[1]:g}{out.suffix or '.csv'}") for p in pairs}


# -- acceptance verdicts -------------------------------------------------------


def _in(band, value) -> bool:
    return value is not None and band[0] <= value <= band[1]


def convergence_verdict(rows, k: int):
    """List of ``(name, passed, detail)`` for the last refinement pair."""
    checks = []
    last = rows[-1]
    worst = max(r.max_constraint_residual for r in rows)
    checks.append(("constraint residual", worst <= CONSTRAINT_TOL, f"{worst:.2e}"))
    if len(rows) < 2:
        checks.append(("rates", False, "need at least two meshes"))
        return checks
    for name, band in RATE_BANDS[k].items():
        value = getattr(last, name)
        checks.append((name, _in(band, value), f"{value:.2f} (band [{band[0]}, {band[1]}])"))
    return checks


def locking_verdict(tables):
    checks = []
    for pair, rows in tables.items():
        worst = max(r.max_constraint_residual for r in rows)
        checks.append((f"constraint residual {pair}", worst <= CONSTRAINT_TOL, f"{worst:.2e}"))
        value = rows[-1].r_p if len(rows) > 1 else None
        detail = "n/a" if value is None else f"{value:.2f} (band [{LOCKING_BAND[0]}, {LOCKING_BAND[1]}])"
        checks.append((f"r_p {pair}", _in(LOCKING_BAND, value), detail))
    tabs = list(tables.values())
    for i, rows in enumerate(tabs):
        for other in tabs[i + 1 :]:
            for a, b in zip(rows, other):
                ratio = max(a.e_p, b.e_p) / min(a.e_p, b.e_p)
                checks.append((f"e_p ratio h=1/{a.n}", ratio <= LOCKING_RATIO, f"{ratio:.3f}"))
    return checks


def _report(checks, stream) -> bool:
    ok = True
    for name, passed, detail in checks:
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}", file=stream)
    return ok


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zenerfem", description=__doc__.splitlines()[0])
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("--experiment", choices=EXPERIMENTS, help="overrides the configured experiment")
    p.add_argument("--k", type=int, help="polynomial degree (1 or 2)")
    p.add_argument("--nmax", type=int, help="finest mesh (power of two)")
    p.add_argument("--out", metavar="PATH", help="output CSV path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage and 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    overrides = dict(experiment=args.experiment, k=args.k, n_max=args.nmax, out=args.out)
    try:
        if args.config:
            config = RunConfig.from_file(args.config, **overrides)
        else:
            config = RunConfig(**{k: v for k, v in overrides.items() if v is not None})
        if config.experiment == "convergence":
            rows = run_convergence(config)
            emit_table(rows, config.out)
            ok = _report(convergence_verdict(rows, config.k), stream)
        elif config.experiment == "locking":
            tables = run_locking(config)
            for pair, path in locking_paths(config.out, config.locking).items():
                emit_table(tables[pair], path)
            ok = _report(locking_verdict(tables), stream)
        else:
            decay = run_energy_decay(config)
            decay.result.write_series(config.out)
            label = "energy non-increasing" if config.damping else "energy conserved"
            worst_res = max(decay.residuals)
            ok = _report(
                [
                    (label, decay.passed, f"worst relative change {decay.worst_increase:.2e}"),
                    ("constraint residual", worst_res <= CONSTRAINT_TOL, f"{worst_res:.2e}"),
                ],
                stream,
            )
    except (ConfigError, MaterialError, MeshError, SolverError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
