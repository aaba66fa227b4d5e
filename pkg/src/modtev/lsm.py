"""Linear sampling method for detecting modified transmission eigenvalues.

For every ``eta`` on a grid the modified far field equation
``(F - F0(eta)) g = E_e,inf(., z, q)`` is solved by Tikhonov regularization
for a set of sampling points ``z`` and polarizations ``q``.  The averaged
solution norm ``g_eta`` peaks at eigenvalues.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg, modal, operators
from .specfun import direction_to_angles, tangent_basis

__all__ = [
    "SamplingConfig",
    "Regularization",
    "IndicatorCurve",
    "Peak",
    "default_sampling_points",
    "dipole_far_field",
    "dipole_rhs",
    "discrepancy_alpha",
    "discrepancy_alphas",
    "solve_far_field_equation",
    "find_peaks",
    "indicator_sweep",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Regularization:
    """``rule`` is ``"discrepancy"`` (Morozov, needs ``noise_level``) or ``"fixed"``.

    For the fixed rule ``alpha`` is absolute when given, otherwise
    ``rel_alpha * s_1^2``.  The relative value is also the fallback of the
    discrepancy rule, and is used directly when ``noise_level`` is zero
    (the discrepancy target would then be a zero residual).
    """

    rule: str = "discrepancy"
    noise_level: float = 0.02
    alpha: float = None
    rel_alpha: float = 1e-8
    tol: float = 0.05

    def __post_init__(self):
        if self.rule not in ("discrepancy", "fixed"):
            raise ValueError(f"unknown regularization rule {self.rule!r}")
        if not 0 <= self.noise_level < 1:
            raise ValueError("noise_level must lie in [0, 1)")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass
class SamplingConfig:
    z_points: np.ndarray
    polarizations: np.ndarray
    eta_grid: np.ndarray
    regularization: Regularization = field(default_factory=Regularization)
    prominence: float = 1.5
    median_window: int = 21

    def __post_init__(self):
        self.z_points = np.atleast_2d(np.asarray(self.z_points, dtype=float))
        self.polarizations = np.atleast_2d(np.asarray(self.polarizations, dtype=float))
        self.eta_grid = np.asarray(self.eta_grid, dtype=float)
        if np.any(np.linalg.norm(self.z_points, axis=1) >= 1.0):
            raise ValueError("sampling points must lie strictly inside the unit ball")
        if not np.allclose(np.linalg.norm(self.polarizations, axis=1), 1.0, atol=1e-12):
            raise ValueError("polarizations must be unit vectors")
        if np.any(self.eta_grid <= 0) or np.any(np.diff(self.eta_grid) <= 0):
            raise ValueError("eta grid must be positive and strictly increasing")


def default_sampling_points(count=8, z_max=0.5, seed=0):
    """The origin plus ``count`` points uniform in the ball of radius ``z_max``."""
    if not 0 < z_max < 1:
        raise ValueError("z_max must lie in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    r = z_max * rng.uniform(size=count) ** (1.0 / 3.0)
    return np.vstack([np.zeros(3), v * r[:, None]])


def dipole_far_field(xhat, z, q, k):
    """``(ik/4pi) (xhat x q) x xhat e^{-ik xhat.z}`` in the tangent basis.

    ``xhat`` may be ``(3,)`` or ``(N, 3)``; returns ``(2,)`` or ``(N, 2)``.
    """
    xhat = np.asarray(xhat, dtype=float)
    single = xhat.ndim == 1
    xh = np.atleast_2d(xhat)
    theta, phi = direction_to_angles(xh)
    th_hat, ph_hat = tangent_basis(theta, phi)
    q = np.asarray(q, dtype=float)
    phase = 1j * k / (4 * np.pi) * np.exp(-1j * k * (xh @ np.asarray(z, dtype=float)))
    # (xhat x q) x xhat is the tangential projection of q
    out = phase[:, None] * np.stack([th_hat @ q, ph_hat @ q], axis=1)
    return out[0] if single else out


def dipole_rhs(grid, z, q, k):
    """Weighted right-hand side vector on a direction grid."""
    return grid.weight(dipole_far_field(grid.directions, z, q, k))


def _residuals(s, coef, perp2, alpha):
    damp = alpha / (s[:, None] ** 2 + alpha)
    return np.sqrt(np.sum(np.abs(damp * coef) ** 2, axis=0) + perp2)


def discrepancy_alphas(svdf, B, noise_level, tol=0.05, max_iter=200):
    """Morozov parameters for the columns of ``B``.

    For every right-hand side ``b`` the parameter solves
    ``||A g_alpha - b|| = noise_level ||b||`` to relative accuracy ``tol``
    by bisection in ``log alpha``, all columns advancing together.  Columns
    whose target is not bracketed by ``alpha in [1e-30, 1e4] s_1^2`` get
    ``nan``.
    """
    B = np.asarray(B, dtype=complex)
    if B.ndim == 1:
        B = B[:, None]
    s = svdf.s
    coef = svdf.u.conj().T @ B
    bnorm = np.linalg.norm(B, axis=0)
    perp2 = np.maximum(bnorm**2 - np.sum(np.abs(coef) ** 2, axis=0), 0.0)
    target = noise_level * bnorm
    lo = np.full(B.shape[1], math.log(s[0] ** 2 * 1e-30))
    hi = np.full(B.shape[1], math.log(s[0] ** 2 * 1e4))
    ok = (_residuals(s, coef, perp2, np.exp(lo)) <= target) & (target <= _residuals(s, coef, perp2, np.exp(hi)))
    ok &= bnorm > 0
    out = np.full(B.shape[1], np.nan)
    active = ok.copy()
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        r = _residuals(s, coef, perp2, np.exp(mid))
        done = active & (np.abs(r - target) <= tol * target)
        out[done] = np.exp(mid[done])
        active &= ~done
        below = r < target
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    out[active] = np.exp(mid[active])
    return out


def discrepancy_alpha(svdf, b, noise_level, tol=0.05, max_iter=200):
    """Scalar version of :func:`discrepancy_alphas`; ``None`` if not bracketed."""
    a = discrepancy_alphas(svdf, b, noise_level, tol, max_iter)[0]
    return None if np.isnan(a) else float(a)


def _alphas_for(svdf, B, reg):
    """Regularization parameters for the columns of ``B`` and a fallback mask."""
    nrhs = B.shape[1]
    fixed = reg.alpha if reg.alpha is not None else reg.rel_alpha * svdf.s[0] ** 2
    if reg.rule == "fixed" or reg.noise_level <= 0:
        return np.full(nrhs, fixed), np.zeros(nrhs, dtype=bool)
    alphas = discrepancy_alphas(svdf, B, reg.noise_level, reg.tol)
    failed = np.isnan(alphas)
    if failed.any():
        log.warning("discrepancy principle failed for %d right-hand side(s); using fixed alpha", failed.sum())
        alphas[failed] = reg.rel_alpha * svdf.s[0] ** 2
    return alphas, failed


def _alpha_for(svdf, b, reg):
    alphas, failed = _alphas_for(svdf, np.asarray(b)[:, None], reg)
    return float(alphas[0]), bool(failed[0])


def _tikhonov_norms(svdf, B, alphas):
    coef = svdf.u.conj().T @ B
    filt = svdf.s[:, None] / (svdf.s[:, None] ** 2 + alphas[None, :])
    return np.linalg.norm(filt * coef, axis=0)


def solve_far_field_equation(Fmod, z, q, reg=None, svdf=None, svd_method="lapack"):
    """Regularized solution of ``Fmod g = E_e,inf(., z, q)``.

    Returns ``(g, norm, alpha)`` where ``g`` is the weighted density vector
    and ``norm`` its discrete ``L^2_t`` norm.
    """
    reg = reg or Regularization()
    if Fmod.matrix.shape[0] != Fmod.matrix.shape[1]:
        raise ValueError("modified operator must be square")
    if svdf is None:
        svdf = linalg.svd(Fmod.matrix, method=svd_method)
    b = dipole_rhs(Fmod.grid, z, q, Fmod.k)
    if not np.any(b):
        return np.zeros_like(b), 0.0, float("nan")
    alpha, _ = _alpha_for(svdf, b, reg)
    g = linalg.tikhonov_solve(svdf, b, alpha)
    return g, float(np.linalg.norm(g)), alpha


@dataclass(frozen=True)
class Peak:
    index: int
    eta: float
    value: float
    prominence: float


@dataclass
class IndicatorCurve:
    eta: np.ndarray
    g: np.ndarray
    peaks: list
    norms: np.ndarray
    alphas: np.ndarray
    flags: list
    meta: dict = field(default_factory=dict)

    def peak_locations(self):
        return np.array([p.eta for p in self.peaks])


def _moving_median(y, window):
    half = window // 2
    out = np.empty_like(y)
    for i in range(len(y)):
        lo, hi = max(0, i - half), min(len(y), i + half + 1)
        out[i] = np.median(y[lo:hi])
    return out


def find_peaks(eta, values, prominence=1.5, window=21):
    """Strict local maxima standing ``prominence`` times above the local median.

    The peak position is refined by a parabola through the three samples
    around the maximum (in ``log`` of the indicator).
    """
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(y) < 3:
        return []
    base = _moving_median(y, window)
    logy = np.log(np.maximum(y, np.finfo(float).tiny))
    peaks = []
    for i in range(1, len(y) - 1):
        if not (y[i] > y[i - 1] and y[i] > y[i + 1]):
            continue
        ratio = y[i] / base[i] if base[i] > 0 else np.inf
        if ratio < prominence:
            continue
        y0, y1, y2 = logy[i - 1], logy[i], logy[i + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        shift = min(max(shift, -0.5), 0.5)
        h = 0.5 * (eta[i + 1] - eta[i - 1])
        peaks.append(Peak(i, float(eta[i] + shift * h), float(y[i]), float(ratio)))
    return peaks


def _eta_task(F, params, grid, nmax, eta, sampling, B, svd_method):
    nz, nq = len(sampling.z_points), len(sampling.polarizations)
    try:
        F0 = operators.assemble_F0(params.with_eta(eta), grid, nmax)
    except modal.SingularModalSystem as exc:
        return np.full((nz, nq), np.nan), np.full((nz, nq), np.nan), f"singular:n={exc.n}"
    svdf = linalg.svd(F.matrix - F0.matrix, method=svd_method)
    alphas, failed = _alphas_for(svdf, B, sampling.regularization)
    norms = _tikhonov_norms(svdf, B, alphas)
    flag = "alpha_fallback" if failed.any() else ""
    return norms.reshape(nz, nq), alphas.reshape(nz, nq), flag


def indicator_sweep(
    params,
    grid,
    sampling,
    noise_level=0.02,
    noise_seed=0,
    nmax=None,
    workers=1,
    svd_method="lapack",
):
    """Run the LSM over ``sampling.eta_grid``.

    The physical operator is assembled and noised once; each ``eta`` then
    assembles its own auxiliary operator.  Points where the auxiliary modal
    system is singular are flagged (and reported as candidate peaks) instead
    of aborting the sweep.
    """
    if params.gamma == 1:
        raise ValueError("gamma must differ from 1")
    nmax = modal.truncation_order(params.k, nmax)
    F = operators.assemble_F(params, grid, nmax)
    if noise_level > 0:
        F = operators.add_noise(F, noise_level, noise_seed)
    B = np.stack(
        [dipole_rhs(grid, z, q, params.k) for z in sampling.z_points for q in sampling.polarizations], axis=1
    )

    def task(eta):
        return _eta_task(F, params, grid, nmax, eta, sampling, B, svd_method)

    etas = list(sampling.eta_grid)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, etas))
    else:
        results = [task(e) for e in etas]

    norms = np.stack([r[0] for r in results])
    alphas = np.stack([r[1] for r in results])
    flags = [r[2] for r in results]
    singular = np.array([f.startswith("singular") for f in flags])
    g = np.ones(len(etas))
    g[~singular] = norms[~singular].reshape(int((~singular).sum()), -1).mean(axis=1)
    if singular.any():
        g[singular] = g[~singular].max() if (~singular).any() else 1.0
        log.warning("auxiliary system singular at eta = %s", sampling.eta_grid[singular])
    peaks = find_peaks(sampling.eta_grid, g, sampling.prominence, sampling.median_window)
    meta = {
        "k": params.k,
        "eps": params.eps,
        "gamma": params.gamma,
        "n_max": nmax,
        "grid": grid.spec,
        "noise_level": noise_level,
        "noise_seed": noise_seed,
        "noise_generator": operators.NOISE_GENERATOR,
        "n_z": len(sampling.z_points),
        "n_q": len(sampling.polarizations),
        "regularization": sampling.regularization.rule,
    }
    return IndicatorCurve(sampling.eta_grid.copy(), g, peaks, norms, alphas, flags, meta)
