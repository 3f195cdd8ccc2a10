"""Nearly incompressible material: the stress error does not depend on lambda.

Compares lam = 150 and lam = 15000 at mu = 3 (Poisson ratio close to 1/2).
"""
from zenerfem.cli import RunConfig, run_convergence

cfg = RunConfig(experiment="locking", k=2, n_min=8, n_max=16)
for lam, mu in cfg.locking:
    rows = run_convergence(cfg, lam, mu)
    print(f"lam={lam:g} mu={mu:g}")
    for r in rows:
        rate = "" if r.r_p is None else f"{r.r_p:.2f}"
        print(f"  h=1/{r.n:<3d} e_p={r.e_p:.3e} {rate}")
