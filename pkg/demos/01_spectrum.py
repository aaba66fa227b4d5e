"""Exact modified transmission eigenvalues of the unit ball.

Walks through the determinant functions: how the two branches behave, how
the standard branch-b roots pile up next to eta = eps, and how the modified
branch-b roots move away from that accumulation point.

Run: python demos/01_spectrum.py
"""

import numpy as np

from modtev import spectrum
from modtev.modal import MediumParams
from modtev.spectrum import Branch

params = MediumParams(k=1.0, eps=2.0, gamma=0.5, eta=1.0)

# The modified branch a is the same function as the standard one; branch b
# differs by the term (n + 1) eps j_n(k sqrt eps) j_n(k sqrt(gamma eta)).
eta = 3.0
for n in (1, 2, 3):
    print(
        f"n={n}: det_b={spectrum.det_b(n, eta, params).real:+.6e}  "
        f"mdet_b={spectrum.mdet_b(n, eta, params).real:+.6e}  "
        f"det_a==mdet_a: {spectrum.det_a(n, eta, params) == spectrum.mdet_a(n, eta, params)}"
    )

# Standard branch-b roots approach eps = 2 from above as n grows.
print("\nstandard branch-b roots nearest to eps = 2:")
recs = spectrum.eigenvalues(params, (2.0 + 1e-9, 2.5), n_max=15, modified=False)
for r in recs:
    if r.branch.branch is Branch.B:
        print(f"  n={r.n:2d}  eta={r.eta:.6f}  |eta-2|={abs(r.eta - 2):.2e}")

# The modified family has no roots near eps at all.
mod = spectrum.eigenvalues(params, (0.05, 60.0), n_max=15, modified=True)
print("\nmodified eigenvalues at k=1 in (0.05, 60]:")
for r in mod:
    print(f"  eta={r.eta:9.4f}  n={r.n:2d}  branch {r.branch.branch.value}")
print("any modified root in (1.5, 2.5)?", any(1.5 < r.eta < 2.5 for r in mod))

# At k = 2 (the LSM scenario) the window [0.5, 25] holds the roots the
# sampling method should find.
params2 = MediumParams(k=2.0, eps=2.0, gamma=0.5, eta=1.0)
window = [r for r in spectrum.eigenvalues(params2, (0.5, 25.0), 6) if r.n >= 1]
print("\nk=2 modified eigenvalues in [0.5, 25] (n >= 1):")
print("  " + ", ".join(f"{r.eta:.4f}(n{r.n}{r.branch.branch.value})" for r in window))
print("  spacing check:", np.all(np.diff([r.eta for r in window]) > 0))
