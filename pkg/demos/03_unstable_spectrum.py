"""Unstable eigenvalues accumulating at lambda0, for a constant state and a pattern.

Run: python3 demos/03_unstable_spectrum.py
"""
from ddilab.model import ModelParams
from ddilab.pattern import build_pattern, constant_pattern
from ddilab.spectral import constant_case_lambda, find_unstable_eigenvalues

p = ModelParams(gamma=10.0)
pat = constant_pattern(p, "minus")
rep = find_unstable_eigenvalues(p, pat, range(1, 11))
print(f"constant minus state, gamma = 10, lambda0 = {rep.lambda0:.8f}")
for e in rep.entries:
    ref = constant_case_lambda(p, 10.0, e.n)
    shown = f"{e.lam:.10f}" if e.found else "none"
    print(f"  n = {e.n:2d}: {shown:>14s}  closed form {ref if ref is None else f'{ref:.10f}'}")

# Around a k = 2 pattern the low modes shift, but the ladder still climbs to lambda0.
p = ModelParams()
rep = find_unstable_eigenvalues(p, build_pattern(p, 2), range(1, 13))
print("\nk = 2 pattern, gamma = 20")
for e in rep.found:
    print(f"  n = {e.n:2d}: lambda = {e.lam:.10f}  gap {rep.lambda0 - e.lam:.2e}  ({e.note})")
