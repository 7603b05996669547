"""Constant states at the reference parameters and the instability certificate.

Run: python3 demos/01_constant_states_and_ddi.py
"""
import math

from ddilab.model import (ModelParams, a12_eigenvalues, constant_states, ddi_check, relative_residual,
                          theta)
from ddilab.pattern import nonexistence_guard
from ddilab.potential import potential_spec

p = ModelParams()  # a=3, d_c=d_b=d=d_g=1, kappa0=2, gamma=20
print(f"Theta = {theta(p):g}, kappa0^2 = {p.kappa0**2:g}: two positive states exist")
for s in constant_states(p):
    print(f"  {s.kind:7s} u={s.u:.10f} v={s.v:.10f} w={s.w:.10f}  residual {relative_residual(p, s):.1e}")

# The minus state is stable for the kinetics but the (v, w) block alone is not.
r = ddi_check(p)
print(f"\nconditions: {r.cond1:.4f} {r.cond2:.4f} {r.cond3:.4f} {r.cond4:.4f} -> DDI = {r.ddi}")
l0, lneg = a12_eigenvalues(p)
print(f"lambda0 = {l0:.12f} (closed form {(2 / 3) * (math.sqrt(7) - 2):.12f}), other root {lneg:.6f}")

# Below gamma0 no non-constant pattern exists; above it the mode count grows like sqrt(gamma).
spec = potential_spec(p)
print(f"\ngamma0 = {spec.gamma0:.7f}")
for g in (1.0, 10.0, 20.0, 50.0):
    rep = nonexistence_guard(p.replace(gamma=g))
    print(f"  gamma = {g:5.1f}: {rep.regime:15s} max modes {rep.max_modes}")
