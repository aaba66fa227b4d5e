"""Command line front end.

Usage::

    python -m modtev eigs     [SCENARIO] [--KEY VALUE ...]
    python -m modtev sweep    [SCENARIO] [--KEY VALUE ...] [--workers N]
    python -m modtev operator [SCENARIO] --which {F,F0,modified}
    python -m modtev selftest

A scenario file is flat ``key = value`` text; ``#`` starts a comment.  Every
key can also be given as a flag (``--noise-level 0.01``), which wins over the
file.  Unknown keys are rejected.  Every output file embeds the fully
resolved scenario.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 failed
self-test.
"""

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import linalg, lsm, modal, operators, specfun, spectrum

__all__ = ["ConfigError", "SCHEMA", "parse_scenario", "resolve_scenario", "main", "run_selftest"]

log = logging.getLogger("modtev")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(conv):
    def parse(text):
        t = str(text).strip()
        return None if t.lower() in ("auto", "none", "") else conv(t)

    return parse


# key: (parser, default, help)
SCHEMA = {
    "k": (float, 2.0, "wave number"),
    "eps": (float, 2.0, "relative permittivity of the ball"),
    "gamma": (float, 0.5, "auxiliary parameter gamma (must differ from 1)"),
    "eta": (float, 1.0, "eta used by 'operator --which F0/modified'"),
    "n_polar": (int, 7, "Gauss-Legendre nodes in cos(theta)"),
    "n_azimuth": (int, 14, "uniform azimuthal nodes"),
    "n_max": (_opt(int), None, "modal truncation order (auto: ceil(k + 4 k^(1/3) + 6))"),
    "noise_level": (float, 0.02, "relative multiplicative noise on F"),
    "noise_seed": (int, 0, "seed of the noise generator"),
    "eta_min": (float, 0.5, "first eta of the sweep grid"),
    "eta_max": (float, 25.0, "last eta of the sweep grid"),
    "eta_step": (float, 0.05, "eta grid spacing"),
    "z_count": (int, 8, "random sampling points (the origin is always added)"),
    "z_max": (float, 0.5, "radius of the sampling ball"),
    "z_seed": (int, 0, "seed for the sampling points"),
    "q_set": (str, "axes", "'axes' or 'x y z; x y z; ...' unit polarizations"),
    "regularization": (str, "discrepancy", "'discrepancy' or 'fixed'"),
    "alpha": (_opt(float), None, "fixed Tikhonov parameter (auto: 1e-8 s_1^2)"),
    "prominence": (float, 1.5, "peak prominence relative to the local median"),
    "eig_min": (float, 0.05, "lower end of the eigenvalue search interval"),
    "eig_max": (float, 60.0, "upper end of the eigenvalue search interval"),
    "eig_n_max": (int, 15, "largest order n in the eigenvalue search"),
    "eig_scan_step": (float, 1e-3, "sign-change scan step"),
    "modified": (_bool, True, "modified (true) or standard (false) determinants"),
    "output_dir": (str, "out", "directory for output files"),
}


def parse_scenario(text):
    """Parse ``key = value`` lines into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(key, value, f"line {lineno}")
    return out


def _convert(key, value, where):
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return SCHEMA[key][0](value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def resolve_scenario(file_values=None, overrides=None):
    """Defaults, then file values, then flag overrides; validated."""
    sc = {key: spec[1] for key, spec in SCHEMA.items()}
    for src in (file_values or {}, overrides or {}):
        for key, value in src.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            if value is not None or key in ("n_max", "alpha"):
                sc[key] = value
    _validate(sc)
    return sc


def _validate(sc):
    try:
        modal.MediumParams(sc["k"], sc["eps"], sc["gamma"], sc["eta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if sc["n_polar"] < 2 or sc["n_azimuth"] < 4:
        raise ConfigError("need n_polar >= 2 and n_azimuth >= 4")
    if sc["n_max"] is not None and sc["n_max"] < 1:
        raise ConfigError("n_max must be >= 1")
    if not 0 <= sc["noise_level"] < 1:
        raise ConfigError("noise_level must lie in [0, 1)")
    if not (0 < sc["eta_min"] <= sc["eta_max"]) or not sc["eta_step"] > 0:
        raise ConfigError("need 0 < eta_min <= eta_max and eta_step > 0")
    if not 0 < sc["z_max"] < 1 or sc["z_count"] < 0:
        raise ConfigError("need 0 < z_max < 1 and z_count >= 0")
    if sc["regularization"] not in ("discrepancy", "fixed"):
        raise ConfigError("regularization must be 'discrepancy' or 'fixed'")
    if sc["alpha"] is not None and not sc["alpha"] > 0:
        raise ConfigError("alpha must be positive")
    if not (0 < sc["eig_min"] < sc["eig_max"]) or not sc["eig_scan_step"] > 0:
        raise ConfigError("need 0 < eig_min < eig_max and eig_scan_step > 0")
    if sc["eig_n_max"] < 0:
        raise ConfigError("eig_n_max must be >= 0")
    polarizations(sc)


def polarizations(sc):
    text = sc["q_set"].strip()
    if text == "axes":
        return np.eye(3)
    try:
        q = np.array([[float(v) for v in item.split()] for item in text.split(";") if item.strip()])
    except ValueError:
        raise ConfigError(f"cannot parse q_set {text!r}") from None
    if q.ndim != 2 or q.shape[1] != 3 or len(q) == 0:
        raise ConfigError("q_set needs one or more 3-vectors")
    if not np.allclose(np.linalg.norm(q, axis=1), 1.0, atol=1e-12):
        raise ConfigError("q_set vectors must be unit vectors")
    return q


def eta_grid(sc):
    count = int(math.floor((sc["eta_max"] - sc["eta_min"]) / sc["eta_step"] + 1e-9)) + 1
    return np.round(sc["eta_min"] + sc["eta_step"] * np.arange(count), 12)


def medium(sc):
    return modal.MediumParams(sc["k"], sc["eps"], sc["gamma"], sc["eta"])


def sampling_config(sc):
    reg = lsm.Regularization(
        rule=sc["regularization"],
        noise_level=sc["noise_level"],
        alpha=sc["alpha"],
    )
    z = lsm.default_sampling_points(sc["z_count"], sc["z_max"], sc["z_seed"])
    return lsm.SamplingConfig(z, polarizations(sc), eta_grid(sc), reg, prominence=sc["prominence"])


# ---------------------------------------------------------------- output


def _num(x):
    return format(float(x), ".17g")


def scenario_lines(sc, prefix="# "):
    return [f"{prefix}{key} = {_fmt_value(sc[key])}" for key in SCHEMA]


def _fmt_value(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _num(v)
    return str(v)


def write_csv(path, sc, header, rows):
    lines = scenario_lines(sc) + [",".join(header)]
    lines += [",".join(row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot LSM indicator curves written by ``modtev sweep``.

Usage: python {name} [indicator.csv ...]

Without arguments the curve next to this script is plotted.  Vertical
dotted lines mark the exact eigenvalues of the scenario below.
"""
{scenario}
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

EXACT = {exact}

files = sys.argv[1:] or [str(Path(__file__).with_name("indicator.csv"))]
fig, ax = plt.subplots(figsize=(8, 3.5))
for f in files:
    data = np.genfromtxt(f, delimiter=",", comments="#", names=True)
    ax.semilogy(data["eta"], data["g_eta"], label=Path(f).parent.name or f)
for e in EXACT:
    ax.axvline(e, color="k", ls=":", lw=0.8)
ax.set_xlabel("eta")
ax.set_ylabel("g_eta")
ax.legend()
fig.tight_layout()
fig.savefig(str(Path(files[0]).with_suffix(".png")), dpi=150)
plt.show()
'''


# ---------------------------------------------------------------- commands


def cmd_eigs(sc, out=None):
    out = out or sys.stdout
    params = medium(sc)
    if params.gamma == 1:
        raise ConfigError("gamma must differ from 1")
    recs = spectrum.eigenvalues(
        params,
        (sc["eig_min"], sc["eig_max"]),
        sc["eig_n_max"],
        sc["modified"],
        sc["eig_scan_step"],
    )
    outdir = Path(sc["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [
        [_num(r.eta), str(r.n), r.branch.branch.value, "true" if sc["modified"] else "false", _num(r.residual)]
        for r in recs
    ]
    path = outdir / "eigenvalues.csv"
    write_csv(path, sc, ["eta", "n", "branch", "modified", "residual"], rows)
    if recs:
        r = recs[0]
        print(f"minimum eta = {r.eta:.6f} (n = {r.n}, branch {r.branch.branch.value})", file=out)
    else:
        print("no eigenvalues in the interval", file=out)
    print(f"wrote {len(recs)} eigenvalues to {path}", file=out)
    return recs


def _exact_in_window(params, sc, nmax):
    if params.gamma == 1:
        return []
    recs = spectrum.eigenvalues(params, (sc["eta_min"], sc["eta_max"]), nmax, True, 1e-3)
    return sorted({round(r.eta, 12) for r in recs if r.n >= 1})


def cmd_sweep(sc, workers=None, out=None):
    out = out or sys.stdout
    params = medium(sc)
    if params.gamma == 1:
        raise ConfigError("gamma must differ from 1")
    try:
        sampling = sampling_config(sc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    grid = operators.direction_grid(sc["n_polar"], sc["n_azimuth"])
    t0 = time.perf_counter()
    curve = lsm.indicator_sweep(
        params,
        grid,
        sampling,
        noise_level=sc["noise_level"],
        noise_seed=sc["noise_seed"],
        nmax=sc["n_max"],
        workers=workers or os.cpu_count() or 1,
    )
    exact = _exact_in_window(params, sc, curve.meta["n_max"])
    outdir = Path(sc["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)

    rows = []
    for i, eta in enumerate(curve.eta):
        finite = np.isfinite(curve.norms[i])
        alpha = np.median(curve.alphas[i][finite]) if finite.any() else float("nan")
        rows.append([_num(eta), _num(curve.g[i]), str(int(finite.sum())), _num(alpha), curve.flags[i]])
    write_csv(outdir / "indicator.csv", sc, ["eta", "g_eta", "n_solves", "alpha_median", "flags"], rows)

    prow = []
    for p in curve.peaks:
        near = min(exact, key=lambda e: abs(e - p.eta)) if exact else None
        prow.append([_num(p.eta), _num(p.prominence), "" if near is None else _num(near)])
    write_csv(outdir / "peaks.csv", sc, ["eta_peak", "prominence", "nearest_exact_eta"], prow)

    script = PLOT_TEMPLATE.format(
        name="plot_indicator.py",
        scenario="\n".join(scenario_lines(sc)),
        exact="[" + ", ".join(_num(e) for e in exact) + "]",
    )
    (outdir / "plot_indicator.py").write_text(script, encoding="utf-8")
    print(
        f"{len(curve.eta)} eta values, {len(curve.peaks)} peaks, "
        f"{time.perf_counter() - t0:.1f} s; output in {outdir}",
        file=out,
    )
    for p in curve.peaks:
        print(f"  peak at eta = {p.eta:.4f} (prominence {p.prominence:.2f})", file=out)
    return curve


def cmd_operator(sc, which, out=None):
    out = out or sys.stdout
    params = medium(sc)
    grid = operators.direction_grid(sc["n_polar"], sc["n_azimuth"])
    if which == "F":
        M = operators.assemble_F(params, grid, sc["n_max"])
        if sc["noise_level"] > 0:
            M = operators.add_noise(M, sc["noise_level"], sc["noise_seed"])
    else:
        F0 = operators.assemble_F0(params, grid, sc["n_max"])
        if which == "F0":
            M = F0
        else:
            F = operators.assemble_F(params, grid, sc["n_max"])
            if sc["noise_level"] > 0:
                F = operators.add_noise(F, sc["noise_level"], sc["noise_seed"])
            M = operators.modified_operator(F, F0)
    outdir = Path(sc["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{which}.mtev"
    operators.write_matrix(M, path, scenario={key: sc[key] for key in SCHEMA})
    print(f"wrote {M.matrix.shape[0]}x{M.matrix.shape[1]} matrix to {path}", file=out)
    return path


# ---------------------------------------------------------------- self-test


def _check_wronskian(bessel_j):
    worst = 0.0
    n = np.arange(1, 21)
    for x in (0.3, 1.0, 4.5, 17.0):
        j = np.asarray(bessel_j(20, x), dtype=complex)
        y = specfun.sph_bessel_y_all(20, x)
        jp = np.concatenate([[-j[1]], j[n - 1] - (n + 1) / x * j[n]])
        yp = np.concatenate([[-y[1]], y[n - 1] - (n + 1) / x * y[n]])
        w = j * yp - jp * y
        worst = max(worst, float(np.max(np.abs(w * x * x - 1.0))))
    return worst < 1e-10, f"max |x^2 W - 1| = {worst:.2e}"


def _check_mdet(seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(200):
        p = modal.MediumParams(rng.uniform(0.2, 4), rng.uniform(1.1, 5), rng.uniform(0.1, 0.9))
        n = int(rng.integers(0, 12))
        eta = complex(rng.uniform(0.05, 40), rng.uniform(-1, 1))
        a, b = spectrum.det_a(n, eta, p), spectrum.mdet_a(n, eta, p)
        if a != b and not (math.isnan(a.real) and math.isnan(b.real)):
            return False, f"mdet_a != det_a at n={n}, eta={eta}"
    return True, "200 random inputs bitwise equal"


def _check_reciprocity():
    grid = operators.direction_grid(4, 8)
    p = modal.MediumParams(1.0, 2.0, 0.5, 1.3)
    d1 = operators.reciprocity_defect(operators.assemble_F(p, grid, 6))
    d2 = operators.reciprocity_defect(operators.assemble_F0(p, grid, 6))
    worst = max(d1, d2)
    return worst < 1e-10, f"defect F {d1:.1e}, F0 {d2:.1e}"


def _check_tikhonov(seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    A = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    b = rng.normal(size=30) + 1j * rng.normal(size=30)
    alpha = 0.37
    g = linalg.tikhonov_solve(linalg.svd(A), b, alpha)
    lhs = A.conj().T @ (A @ g) + alpha * g
    rhs = A.conj().T @ b
    rel = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    return rel < 1e-9, f"normal-equation residual {rel:.1e}"


def _check_plane_wave():
    k = 2.0
    d = np.array([0.0, 0.6, 0.8])
    p = np.array([1.0, 0.0, 0.0])
    wave = modal.PlaneWave(d, p)
    nmax = 25
    theta, phi = specfun.direction_to_angles(d)
    _, U, V = specfun.vsh_table(nmax, np.atleast_1d(theta), np.atleast_1d(phi))
    th, ph = specfun.tangent_basis(np.atleast_1d(theta), np.atleast_1d(phi))
    pt = np.stack([th @ p, ph @ p], axis=1)
    a, b = modal.incident_coefficients(nmax, k, U, V, pt)
    x = np.array([[0.3, -0.2, 0.5], [0.0, 0.05, 0.0], [-0.7, 0.1, 0.2]])
    approx = modal.modal_field(nmax, x, a[:, 0], b[:, 0], "j", k)
    exact = wave.field(x, k)
    err = float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))
    return err < 1e-8, f"max relative error {err:.1e}"


def run_selftest(bessel_j=None, out=None):
    """Run the invariant checks; returns ``{name: (ok, detail)}``.

    ``bessel_j(nmax, x)`` replaces the Bessel table used by the Wronskian
    check (to exercise the check with a deliberately broken routine).
    """
    out = out or sys.stdout
    bessel_j = bessel_j or specfun.sph_bessel_j_all
    checks = [
        ("wronskian", lambda: _check_wronskian(bessel_j)),
        ("mdet_a identity", _check_mdet),
        ("reciprocity", _check_reciprocity),
        ("tikhonov normal equations", _check_tikhonov),
        ("plane-wave expansion", _check_plane_wave),
    ]
    report = {}
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        report[name] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    return report


# ---------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(prog="modtev", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("scenario", nargs="?", help="scenario file (key = value lines)")
        g = p.add_argument_group("scenario keys (override the file)")
        for key, (_, default, help_) in SCHEMA.items():
            g.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar="VALUE", help=help_)

    scenario_args(sub.add_parser("eigs", help="exact eigenvalues from the determinant functions"))
    sw = sub.add_parser("sweep", help="LSM indicator sweep")
    scenario_args(sw)
    sw.add_argument("--workers", type=int, default=None, help="worker threads (default: CPU count)")
    op = sub.add_parser("operator", help="assemble and store a far field matrix")
    scenario_args(op)
    op.add_argument("--which", choices=("F", "F0", "modified"), default="F")
    st = sub.add_parser("selftest", help="fast invariant checks")
    st.add_argument("--perturb-bessel", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _scenario_from_args(args):
    file_values = {}
    if args.scenario:
        try:
            text = Path(args.scenario).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scenario file: {exc}") from None
        file_values = parse_scenario(text)
    overrides = {}
    for key in SCHEMA:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = _convert(key, value, "--" + key.replace("_", "-"))
    return resolve_scenario(file_values, overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            bessel = None
            if args.perturb_bessel:
                eps = args.perturb_bessel

                def bessel(nmax, x):
                    j = specfun.sph_bessel_j_all(nmax, x)
                    return j * (1 + eps * np.arange(len(j)))

            report = run_selftest(bessel)
            return EXIT_OK if all(ok for ok, _ in report.values()) else EXIT_FAIL
        sc = _scenario_from_args(args)
        if args.command == "eigs":
            cmd_eigs(sc)
        elif args.command == "sweep":
            cmd_sweep(sc, workers=args.workers)
        else:
            cmd_operator(sc, args.which)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
