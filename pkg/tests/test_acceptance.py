"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``CRITERION <n> PASS|FAIL`` line to the terminal
(also with output capture on) and then asserts.  Criteria that cannot be
met are left failing; see the project notes for the analysis.
"""

import os
import time

import numpy as np
import pytest
from conftest import curl, random_unit

from modtev import cli, linalg, lsm, modal, operators, specfun, spectrum
from modtev.modal import MediumParams
from modtev.spectrum import Branch


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {label} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return emit


# ---------------------------------------------------------------- 1


def test_criterion_1_eigenvalue_anchor(report):
    params = MediumParams(1.0, 2.0, 0.5, 1.0)
    t0 = time.perf_counter()
    recs = spectrum.eigenvalues(params, (1e-3, 60.0), 15, modified=True)
    elapsed = time.perf_counter() - t0
    smallest = recs[0]
    ok = abs(smallest.eta - 18.317) <= 0.01 and elapsed < 10
    detail = (
        f"k=1 smallest modified root {smallest.eta:.4f} (n={smallest.n}, branch {smallest.branch.branch.value}), "
        f"target 18.317 +- 0.01, {elapsed:.1f} s"
    )
    report("1", ok, detail)
    assert ok, detail


def test_criterion_1_companion_k2(report):
    # not a criterion of its own: the same anchor value occurs at k = 2
    params = MediumParams(2.0, 2.0, 0.5, 1.0)
    recs = spectrum.eigenvalues(params, (18.0, 18.6), 15, modified=True)
    near = min(recs, key=lambda r: abs(r.eta - 18.317))
    ok = abs(near.eta - 18.317) <= 0.01 and near.n == 1 and near.branch.branch is Branch.B
    report("1-companion", ok, f"k=2 modified root {near.eta:.4f} (n={near.n}, branch {near.branch.branch.value})")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion_2_branch_a_invariance(report):
    rng = np.random.Generator(np.random.PCG64(2))
    mismatches = 0
    for _ in range(10_000):
        n = int(rng.integers(0, 16))
        eta = float(rng.uniform(1e-3, 60.0))
        params = MediumParams(rng.uniform(0.2, 4.0), rng.uniform(1.01, 6.0), rng.uniform(0.05, 0.95), 1.0)
        a, b = spectrum.mdet_a(n, eta, params), spectrum.det_a(n, eta, params)
        if not (a == b or (np.isnan(a) and np.isnan(b))):
            mismatches += 1
    ok = mismatches == 0
    report("2", ok, f"{mismatches} bitwise mismatches in 10^4 random inputs")
    assert ok


# ---------------------------------------------------------------- 3


def test_criterion_3_accumulation(report):
    params = MediumParams(1.0, 2.0, 0.5, 1.0)
    unmod = spectrum.eigenvalues(params, (0.05, 60.0), 15, modified=False)
    dist = {}
    for r in unmod:
        if r.branch.branch is Branch.B:
            dist[r.n] = min(dist.get(r.n, np.inf), abs(r.eta - 2.0))
    seq = [dist.get(n, np.inf) for n in (5, 8, 11, 14)]
    decreasing = all(a > b for a, b in zip(seq, seq[1:]))
    mod = spectrum.eigenvalues(params, (1.5, 2.5), 15, modified=True)
    mod_b = [r for r in mod if r.branch.branch is Branch.B]
    ok = decreasing and not mod_b
    detail = "|root-2| for n=5,8,11,14: " + ", ".join(f"{d:.2e}" for d in seq)
    detail += f"; modified branch-b roots in (1.5, 2.5): {len(mod_b)}"
    report("3", ok, detail)
    assert ok


# ---------------------------------------------------------------- 4


def far_field_dot(params, problem, xh, d, p, q):
    c = modal.solve_plane_wave(params, modal.PlaneWave(d, p), modal.truncation_order(params.k), problem)
    ff = modal.far_field_pattern(c, xh)
    th, ph = specfun.tangent_basis(*specfun.direction_to_angles(xh))
    return np.dot(q, ff[0] * th + ff[1] * ph)


def test_criterion_4_reciprocity(report):
    rng = np.random.Generator(np.random.PCG64(4))
    params = MediumParams(2.0, 2.0, 0.5, 3.3)
    worst = {}
    for problem in ("physical", "auxiliary"):
        w = 0.0
        for _ in range(50):
            xh, d = random_unit(rng), random_unit(rng)
            p, q = rng.normal(size=3), rng.normal(size=3)
            lhs = far_field_dot(params, problem, xh, d, p, q)
            rhs = far_field_dot(params, problem, -d, -xh, q, p)
            w = max(w, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
        worst[problem] = w
    ok = max(worst.values()) < 1e-8
    report("4", ok, ", ".join(f"{k} worst relative defect {v:.1e}" for k, v in worst.items()))
    assert ok


# ---------------------------------------------------------------- 5


def test_criterion_5_auxiliary_solver(report):
    rng = np.random.Generator(np.random.PCG64(5))
    worst_modal, worst_bc = 0.0, 0.0
    for eta in (0.7, 1.0, 3.0):
        params = MediumParams(1.0, 2.0, 0.5, eta)
        nmax = modal.truncation_order(1.0)
        for n in range(1, nmax + 1):
            a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
            sol = np.array(modal.aux_solve_mode(n, params, a, b))
            M = modal.aux_matrix(n, params)
            jk, rjk = specfun.sph_bessel_j(n, 1.0), specfun.riccati_j_deriv(n, 1.0)
            rhs = np.array([-a * rjk, -b * jk, -b * rjk, -a * jk, 0])
            res = np.linalg.norm(M @ sol - rhs) / (np.linalg.norm(M) * np.linalg.norm(sol) + np.linalg.norm(rhs))
            worst_modal = max(worst_modal, res)

        wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
        c = modal.solve_plane_wave(params, wave, nmax, "auxiliary")
        k = params.k
        E0s = lambda y: modal.modal_field(nmax, y, c.alpha, c.beta, "h", k)  # noqa: E731
        E0 = lambda y: modal.modal_field(nmax, y, c.delta, c.phi, "j", params.kappa_aux)  # noqa: E731
        Ei = lambda y: modal.modal_field(nmax, y, c.a, c.b, "j", k)  # noqa: E731
        full = lambda y: E0(y) + modal.pressure_gradient(c, y) / eta  # noqa: E731
        x = random_unit(rng, 20)
        scale = np.abs(Ei(x)).max()
        normal = np.abs(np.sum(x * full(x), axis=1)).max() / scale
        tang = np.abs(np.cross(x, full(x) - E0s(x) - Ei(x))).max() / scale
        ci = curl(Ei, x, 2e-3, 6)
        jump = np.cross(x, curl(E0, x, 2e-3, 6) / params.gamma - curl(E0s, x, 2e-3, 6) - ci)
        worst_bc = max(worst_bc, normal, tang, np.abs(jump).max() / np.abs(ci).max())
    ok = worst_modal < 1e-12 and worst_bc < 1e-10
    report("5", ok, f"worst 5x5 residual {worst_modal:.1e}, worst transmission residual {worst_bc:.1e}")
    assert ok


# ---------------------------------------------------------------- 6


def test_criterion_6_plane_wave(report):
    rng = np.random.Generator(np.random.PCG64(6))
    k = 2.0
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    nmax = 25
    c = modal.solve_plane_wave(MediumParams(k, 2.0), wave, nmax)
    x = random_unit(rng, 20) * rng.uniform(0.05, 1.0, size=(20, 1))
    approx = modal.modal_field(nmax, x, c.a, c.b, "j", k)
    d, p = wave.d, wave.p
    exact = 1j * k * (p - np.dot(d, p) * d)[None, :] * np.exp(1j * k * (x @ d))[:, None]
    err = np.abs(approx - exact).max() / np.abs(exact).max()
    ok = err < 1e-8
    report("6", ok, f"max relative error {err:.1e} at 20 interior points")
    assert ok


# ---------------------------------------------------------------- 7


def run_sweep(eps):
    params = MediumParams(2.0, eps, 0.5, 1.0)
    grid = operators.direction_grid(7, 14)
    sampling = lsm.SamplingConfig(
        lsm.default_sampling_points(8, 0.5, seed=0),
        np.eye(3),
        np.round(np.arange(0.5, 25.0 + 1e-9, 0.05), 12),
        lsm.Regularization("discrepancy", noise_level=0.02),
    )
    return lsm.indicator_sweep(params, grid, sampling, 0.02, 0, workers=os.cpu_count() or 1)


def exact_roots(eps):
    recs = spectrum.eigenvalues(MediumParams(2.0, eps, 0.5, 1.0), (0.5, 25.0), 6, modified=True)
    return [r for r in recs if 1 <= r.n <= 6]


def test_criterion_7_lsm_detection(report):
    t0 = time.perf_counter()
    curve2, curve19 = run_sweep(2.0), run_sweep(1.9)
    elapsed = time.perf_counter() - t0
    peaks2, peaks19 = curve2.peak_locations(), curve19.peak_locations()
    exact2, exact19 = exact_roots(2.0), exact_roots(1.9)

    missed, matched = [], []
    for r in exact2:
        dist = np.abs(peaks2 - r.eta)
        if len(dist) and dist.min() <= 0.10:
            matched.append((r, peaks2[np.argmin(dist)]))
        else:
            missed.append(r)

    bad_shift = []
    shifts = []
    for r, p2 in matched:
        partner = [s for s in exact19 if s.n == r.n and s.branch.branch is r.branch.branch]
        s = min(partner, key=lambda s: abs(s.eta - r.eta))
        exact_shift = s.eta - r.eta
        p19 = peaks19[np.argmin(np.abs(peaks19 - s.eta))] if len(peaks19) else np.nan
        peak_shift = p19 - p2
        good = np.sign(peak_shift) == np.sign(exact_shift) and abs(peak_shift - exact_shift) <= 0.5 * abs(exact_shift)
        shifts.append(f"{r.eta:.3f}: exact {exact_shift:+.3f} peak {peak_shift:+.3f}")
        if not good:
            bad_shift.append(r)

    ok = not missed and not bad_shift and elapsed < 600
    detail = (
        f"{len(matched)}/{len(exact2)} exact roots (1<=n<=6) within 0.10 of a peak; missed "
        + (", ".join(f"{r.eta:.3f}(n={r.n},{r.branch.branch.value})" for r in missed) or "none")
        + f"; shifts [{'; '.join(shifts)}]; bad shifts {len(bad_shift)}; {elapsed:.0f} s"
    )
    report("7", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 8


def test_criterion_8_tikhonov(report):
    rng = np.random.Generator(np.random.PCG64(8))
    worst = 0.0
    for _ in range(5):
        A = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
        b = rng.normal(size=50) + 1j * rng.normal(size=50)
        alpha = 10.0 ** rng.uniform(-6, 0)
        g = linalg.tikhonov_solve(linalg.svd(A), b, alpha)
        rhs = A.conj().T @ b
        worst = max(worst, np.linalg.norm(A.conj().T @ (A @ g) + alpha * g - rhs) / np.linalg.norm(rhs))
    scalar = linalg.tikhonov_solve(linalg.SvdFactors(np.ones((1, 1)), np.array([2.0]), np.ones((1, 1))), [4.0], 2.0)
    ok = worst < 1e-9 and scalar[0] == 4 / 3
    report("8", ok, f"worst normal-equation residual {worst:.1e}; scalar filter 4/3 exact: {scalar[0] == 4 / 3}")
    assert ok


# ---------------------------------------------------------------- 9


def test_criterion_9_zero_contrast(report):
    M = operators.assemble_F(MediumParams(2.0, 1.0, 0.5, 1.0), operators.direction_grid(7, 14))
    worst = np.abs(M.matrix).max()
    ok = worst < 1e-14
    report("9", ok, f"max |entry| = {worst:.1e}")
    assert ok


# ---------------------------------------------------------------- 10


SCENARIO_10 = """\
k = 2
eps = 2
gamma = 0.5
n_polar = 7
n_azimuth = 14
noise_level = 0.02
noise_seed = 3
eta_min = 3.0
eta_max = 6.5
eta_step = 0.05
"""


def test_criterion_10_determinism(tmp_path, report):
    path = tmp_path / "scenario.txt"
    path.write_text(SCENARIO_10 + f"output_dir = {tmp_path / 'out'}\n")
    names = ("indicator.csv", "peaks.csv", "plot_indicator.py")
    runs = []
    for workers in ("1", str(max(2, os.cpu_count() or 1))):
        assert cli.main(["sweep", str(path), "--workers", workers]) == 0
        runs.append({n: (tmp_path / "out" / n).read_bytes() for n in names})
    same = [n for n in names if runs[0][n] == runs[1][n]]
    ok = len(same) == len(names)
    report("10", ok, f"byte-identical outputs: {', '.join(same)}")
    assert ok
