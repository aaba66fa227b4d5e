"""Determinant functions of the separated interior problems and their real roots.

For the unit ball with constant ``eps`` the (modified) transmission
eigenvalues are the ``eta`` at which one of two families of scalar
determinants vanishes for some order ``n``.  Branch ``A`` is shared by the
standard and modified problems; branch ``B`` differs by the factor in front
of the ``j_n j_n`` product.

All evaluators accept a scalar or an array ``eta`` and use the principal
square root.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .specfun import sph_bessel_j_deriv_array

__all__ = [
    "Branch",
    "DeterminantBranch",
    "EigenvalueRecord",
    "det_a",
    "det_b",
    "mdet_a",
    "mdet_b",
    "determinant",
    "find_real_roots",
    "eigenvalues",
]


class Branch(enum.Enum):
    A = "a"
    B = "b"


@dataclass(frozen=True)
class DeterminantBranch:
    branch: Branch
    modified: bool
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("order n must be >= 0")

    @property
    def label(self):
        return ("m" if self.modified else "") + "det_" + self.branch.value


@dataclass(frozen=True)
class EigenvalueRecord:
    eta: float
    n: int
    branch: DeterminantBranch
    residual: float
    coincident: bool = False


def _tables(n, eta, params):
    """Bessel values at ``k sqrt(eps)`` and ``k sqrt(gamma eta)``."""
    k, eps, gamma = params.k, params.eps, params.gamma
    eta = np.asarray(eta, dtype=complex)
    se = np.sqrt(complex(eps))
    sge = np.sqrt(gamma * eta)
    jq, dq = sph_bessel_j_deriv_array(n, k * se)
    jk, dk = sph_bessel_j_deriv_array(n, k * sge)
    return eta, se, sge, jq[n], dq[n], jk[n], dk[n]


def _scalar(out, eta):
    return complex(out) if np.ndim(eta) == 0 else out


def det_a(n, eta, params):
    """``(1 - 1/gamma) j j + k sqrt(eps) j' j - k sqrt(eta/gamma) j j'``.

    The first factor of each product is evaluated at ``k sqrt(eps)``, the
    second at ``k sqrt(gamma eta)``.
    """
    k, gamma = params.k, params.gamma
    e, se, _, jq, dq, jk, dk = _tables(n, eta, params)
    out = (1 - 1 / gamma) * jq * jk + k * se * dq * jk - k * np.sqrt(e / gamma) * jq * dk
    return _scalar(out, eta)


def _det_b(n, eta, params, lead):
    k, eps = params.k, params.eps
    e, se, sge, jq, dq, jk, dk = _tables(n, eta, params)
    out = lead(e) * jq * jk + k * e * se * dq * jk - k * eps * sge * jq * dk
    return _scalar(out, eta)


def det_b(n, eta, params):
    """``(eta - eps) j j + k eta sqrt(eps) j' j - k eps sqrt(gamma eta) j j'``."""
    return _det_b(n, eta, params, lambda e: e - params.eps)


def mdet_a(n, eta, params):
    """Modified branch ``A``: the same function as :func:`det_a`."""
    return det_a(n, eta, params)


def mdet_b(n, eta, params):
    """Modified branch ``B``: :func:`det_b` with ``eta - eps`` replaced by ``eta + n eps``."""
    return _det_b(n, eta, params, lambda e: e + n * params.eps)


_EVALUATORS = {
    (Branch.A, False): det_a,
    (Branch.B, False): det_b,
    (Branch.A, True): mdet_a,
    (Branch.B, True): mdet_b,
}


def determinant(which, eta, params):
    """Evaluate the determinant described by a :class:`DeterminantBranch`."""
    return _EVALUATORS[(which.branch, which.modified)](which.n, eta, params)


def _refine(f, a, b, fa, fb, xtol):
    """Bracketed root refinement: false-position steps safeguarded by bisection.

    The interpolated point is used only if it lies inside the bracket and
    the previous step at least halved the bracket; otherwise bisect.
    """
    width_prev = abs(b - a)
    for _ in range(400):
        if abs(b - a) <= xtol:
            break
        x = b - fb * (b - a) / (fb - fa) if fb != fa else 0.5 * (a + b)
        lo, hi = min(a, b), max(a, b)
        if not (lo < x < hi) or abs(b - a) > 0.5 * width_prev:
            x = 0.5 * (a + b)
        width_prev = abs(b - a)
        fx = f(x)
        if fx == 0:
            return x
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
    return a if abs(fa) <= abs(fb) else b


def find_real_roots(f, interval, scan_step, xtol=1e-12, vectorized=False):
    """Real roots of ``f`` on ``[lo, hi]`` located by a sign-change scan.

    Parameters
    ----------
    f : callable
        Real-valued function.  With ``vectorized=True`` it is called once on
        the whole scan grid.
    interval : (lo, hi)
    scan_step : float
        Scan resolution.  Pairs of roots closer than this can be missed.
    xtol : float
        Final bracket width.

    Returns
    -------
    list of float, ascending.
    """
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not scan_step > 0:
        raise ValueError("scan_step must be positive")
    count = int(math.ceil((hi - lo) / scan_step))
    xs = lo + scan_step * np.arange(count + 1)
    xs[-1] = hi
    if vectorized:
        ys = np.asarray(f(xs), dtype=float)
    else:
        ys = np.array([f(x) for x in xs], dtype=float)
    if not np.all(np.isfinite(ys)):
        raise ValueError("function is not finite on the scan grid")

    def fs(x):
        if vectorized:
            return float(np.asarray(f(np.array([x])), dtype=float)[0])
        return float(f(x))

    roots = []
    for i in np.flatnonzero(ys == 0):
        roots.append(float(xs[i]))
    s = np.sign(ys)
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        roots.append(_refine(fs, float(xs[i]), float(xs[i + 1]), ys[i], ys[i + 1], xtol))
    return sorted(roots)


def eigenvalues(params, interval=(0.05, 60.0), n_max=15, modified=True, scan_step=1e-3):
    """Real (modified) transmission eigenvalues of the unit ball.

    Roots of both branches for ``n = 0..n_max``.  Records whose ``eta``
    agree within ``1e-9`` are all kept and flagged ``coincident``.

    Notes
    -----
    Only the vector modes ``n >= 1`` can be excited by plane waves; ``n = 0``
    roots are included for completeness and can be filtered on ``record.n``.
    """
    lo, hi = interval
    if lo <= 0 or hi <= lo:
        raise ValueError("interval must lie in (0, inf) with lo < hi")
    if params.gamma == 1:
        raise ValueError("gamma must differ from 1")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    records = []
    for n in range(n_max + 1):
        for br in (Branch.A, Branch.B):
            which = DeterminantBranch(br, modified, n)

            def f(x, which=which):
                return np.real(determinant(which, x, params))

            for r in find_real_roots(f, (lo, hi), scan_step, vectorized=True):
                res = abs(determinant(which, r, params))
                records.append(EigenvalueRecord(float(r), n, which, float(res)))
    records.sort(key=lambda r: (r.eta, r.n, r.branch.branch.value))
    flagged = []
    for i, r in enumerate(records):
        near = (i > 0 and abs(r.eta - records[i - 1].eta) <= 1e-9) or (
            i + 1 < len(records) and abs(records[i + 1].eta - r.eta) <= 1e-9
        )
        flagged.append(EigenvalueRecord(r.eta, r.n, r.branch, r.residual, near))
    return flagged
