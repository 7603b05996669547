"""Time map, continuous k-mode patterns and one glued (discontinuous) pattern.

Run: python3 demos/02_patterns.py [OUT_DIR]
Writes pattern CSVs to OUT_DIR when given.
"""
import sys
from pathlib import Path

import numpy as np

from ddilab.errors import BelowCriticalError
from ddilab.model import ModelParams
from ddilab.pattern import (build_discontinuous_pattern, build_pattern, outer_energy_for_junction,
                            verify_pattern)
from ddilab.potential import potential_spec, time_map

out = Path(sys.argv[1]) if len(sys.argv) > 1 else None
p = ModelParams()
spec = potential_spec(p)

# The half-period rises from pi/sqrt(h'(w-)) at the well bottom and diverges only logarithmically.
print(f"well [{spec.H_min:.6f}, {spec.H_max:.6f}]")
for d in (1e-6, 0.1, 0.3, 0.5):
    E = spec.H_min + d * (spec.H_max - spec.H_min)
    print(f"  T({E:.6f}) = {time_map(spec, E).value:.6f}")
for j in (4, 6, 8):
    print(f"  T(H_max - 1e-{j}) = {time_map(spec, spec.H_max - 10.0**-j).value:.4f}")

# A k-mode pattern needs T(E) = sqrt(gamma)/k.
for k in (1, 2, 3, 4):
    try:
        pat = build_pattern(p, k)
    except BelowCriticalError as exc:
        print(f"k = {k}: rejected ({exc})")
        continue
    r = verify_pattern(p, pat)
    print(f"k = {k}: E = {pat.energy.E:.8f}, W in [{pat.W.min():.5f}, {pat.W.max():.5f}], residual {r.relative:.1e}")
    if out:
        out.mkdir(parents=True, exist_ok=True)
        pat.to_csv(out / f"pattern_k{k}.csv")

# Outer arcs at the junction energy, glued to an inner arc through the null set.
E_out = outer_energy_for_junction(spec, 1.4, spec.w_minus)
glued = build_discontinuous_pattern(p, f"outer {E_out!r}\ninner 1.4\nouter {E_out!r}\n")
r = verify_pattern(p, glued)
x = np.linspace(0, 1, 2001)
print(f"\nglued: gamma = {glued.gamma:.6f}, null set fraction {glued.in_null_set(x).mean():.3f}, "
      f"weak residual {r.weak_residual:.1e}, slope jump {r.junction_jump:.1e}")
if out:
    glued.to_csv(out / "pattern_glued.csv")
