"""Manufactured-solution convergence with the second-order element and dt = h.

Run with ``python3 demos/convergence.py``. Takes about 10 s (n up to 32).
"""
import numpy as np

from zenerfem import (
    Discretization,
    ExactSolution,
    IsotropicMaterial,
    MaterialField,
    TimeGrid,
    assemble_blocks,
    build_spaces,
    build_uniform,
    discrete_initial_data,
    error_report,
    run,
)

mat = IsotropicMaterial(mu=1.0, lam=1.0, a=3.0, b=3.0)
field = MaterialField(mat, rho=1.0, omega=1.0)
exact = ExactSolution(mat)

rows = []
for n in (8, 16, 32):
    system = assemble_blocks(Discretization(build_spaces(build_uniform(n), 2), field))
    data = discrete_initial_data(system, exact)  # Xi_h for stresses, L2 for rotations
    result = run(TimeGrid(1.0, n), system, data, F=exact.F)
    rep = error_report(system, exact, result)
    rows.append((1 / n, rep.e_p, rep.e_r, rep.e_accel))

print(f"{'h':>7} {'e_p':>10} {'e_r':>10} {'e_accel':>10}   rates")
for i, (h, *err) in enumerate(rows):
    rates = ""
    if i:
        prev = rows[i - 1]
        rates = "  ".join(f"{np.log(prev[j + 1] / e) / np.log(prev[0] / h):.2f}" for j, e in enumerate(err))
    print(f"{h:7.4f} " + " ".join(f"{e:10.3e}" for e in err) + "   " + rates)
