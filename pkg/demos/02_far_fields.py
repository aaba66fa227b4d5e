"""Plane-wave scattering by the ball and the discretized far field operators.

Builds the physical operator F, the auxiliary operator F0(eta) and their
difference on the default 7 x 14 Gauss grid, and checks reciprocity, the
zero-contrast case and the effect of multiplicative noise.

Run: python demos/02_far_fields.py
"""

import numpy as np

from modtev import modal, operators
from modtev.modal import MediumParams, PlaneWave

params = MediumParams(k=2.0, eps=2.0, gamma=0.5, eta=7.0)

# One incident plane wave: modal expansion against the closed form.
wave = PlaneWave(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
c = modal.solve_plane_wave(params, wave, nmax=20)
x = np.array([[0.2, -0.1, 0.3]])
err = np.abs(modal.modal_field(20, x, c.a, c.b, "j", params.k) - wave.field(x, params.k)).max()
print(f"plane-wave expansion error at an interior point: {err:.1e}")

# Far field pattern in the forward and backward directions.
for xhat in ([0, 0, 1.0], [0, 0, -1.0]):
    print(f"E_inf({xhat}) tangent components:", np.round(modal.far_field_pattern(c, np.array(xhat)), 6))

grid = operators.direction_grid(7, 14)
print(f"\ngrid: {grid.size} directions, weights sum to {grid.weights.sum():.15f} (4 pi = {4 * np.pi:.15f})")
F = operators.assemble_F(params, grid)
F0 = operators.assemble_F0(params, grid)
M = operators.modified_operator(F, F0)
for name, A in (("F", F), ("F0", F0), ("F - F0", M)):
    s = np.linalg.svd(A.matrix, compute_uv=False)
    print(
        f"{name:7s} ||.||={np.linalg.norm(A.matrix):.4f}  s1={s[0]:.3e}  s_min={s[-1]:.3e}  "
        f"reciprocity defect={operators.reciprocity_defect(A):.1e}"
    )

empty = operators.assemble_F(MediumParams(2.0, 1.0), grid)
print("\nzero contrast (eps = 1): max |F| =", np.abs(empty.matrix).max())

for seed in range(3):
    noisy = operators.add_noise(F, 0.02, seed)
    rel = np.linalg.norm(noisy.matrix - F.matrix) / np.linalg.norm(F.matrix)
    print(f"2% noise, seed {seed}: relative Frobenius perturbation {rel:.4f}")
