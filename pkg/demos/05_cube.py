"""Three-dimensional runs on the cube (0, pi)^3.

Two discretizations of the first-order least-squares system:

* the three-field system (edge elements for both vector fields plus a nodal
  multiplier enforcing the weighted divergence gauge) -- the multiplier
  component of every computed mode vanishes to roundoff;
* the ungauged two-field nodal system, outside the covered theory, whose
  exactly singular pencil exercises the degenerate-mode filtering.
"""

import numpy as np

from lsmaxwell import (FormulationSpec, build_pencil, build_structured_cube,
                       shift_invert_eigs)

exact = np.array([2, 2, 2, 3, 3], dtype=float)

print("=== three-field system, edge elements ===")
for n in (2, 4):
    mesh = build_structured_cube(n)
    pen = build_pencil(mesh, FormulationSpec(kind="ls3d_threefield",
                                             elements_q="ned0"))
    sol = shift_invert_eigs(pen, nev=5)
    w = np.linalg.norm(sol.vectors["w"])
    print(f"  n={n}: lambda = {np.round(sol.eigenvalues[:5], 5)}"
          f"  multiplier norm = {w:.1e}")
print(f"  exact limits:    {exact}")

print("\n=== two-field nodal system (no gauge) ===")
for n in (2, 4):
    mesh = build_structured_cube(n)
    pen = build_pencil(mesh, FormulationSpec(
        kind="ls3d_twofield_nodal", elements_v="p1", elements_q="p1",
        gauge="none"))
    sol = shift_invert_eigs(pen, nev=5)
    reasons = sorted(set(r for r, _ in sol.discarded))
    print(f"  n={n}: lambda = {np.round(sol.eigenvalues[:5], 5)}"
          f"  (discard reasons seen: {reasons or 'none'})")
print("  the curl-free nodal directions satisfy K z = 0 = M z; the solver")
print("  regularizes the factorization and the filter keeps them out.")
