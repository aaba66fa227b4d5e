"""Detecting eigenvalues with the linear sampling method.

Runs short indicator sweeps around the two lowest excitable modified
eigenvalues at k = 2 for eps = 2 and eps = 1.9, prints the detected peaks
next to the exact roots and, if matplotlib is available, saves a plot.

Run: python demos/03_lsm_sweep.py        (about 25 s on one core)
"""

import os

import numpy as np

from modtev import lsm, operators, spectrum
from modtev.modal import MediumParams

grid = operators.direction_grid(7, 14)
etas = np.round(np.arange(3.0, 7.0 + 1e-9, 0.05), 12)
sampling = lsm.SamplingConfig(
    lsm.default_sampling_points(8, 0.5, seed=0),
    np.eye(3),
    etas,
    lsm.Regularization("discrepancy", noise_level=0.02),
)

curves = {}
for eps in (2.0, 1.9):
    params = MediumParams(k=2.0, eps=eps, gamma=0.5, eta=1.0)
    curve = lsm.indicator_sweep(params, grid, sampling, noise_level=0.02, noise_seed=0, workers=os.cpu_count())
    exact = [r.eta for r in spectrum.eigenvalues(params, (etas[0], etas[-1]), 6) if r.n >= 1]
    curves[eps] = (curve, exact)
    print(f"eps={eps}: exact {np.round(exact, 4)}  peaks {np.round(curve.peak_locations(), 4)}")

(c2, e2), (c19, e19) = curves[2.0], curves[1.9]
print("exact shifts:", np.round(np.subtract(e19, e2), 4))
print("peak shifts: ", np.round(c19.peak_locations() - c2.peak_locations(), 4))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(8, 3.5))
    for eps, (curve, exact) in curves.items():
        line = ax.semilogy(curve.eta, curve.g, label=f"eps = {eps}")[0]
        for e in exact:
            ax.axvline(e, color=line.get_color(), ls=":", lw=0.8)
    ax.set_xlabel("eta")
    ax.set_ylabel("g_eta")
    ax.legend()
    fig.tight_layout()
    fig.savefig("lsm_sweep.png", dpi=150)
    print("saved lsm_sweep.png")
