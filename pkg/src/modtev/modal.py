"""Separation-of-variables solvers for scattering by the unit ball.

Fields are expanded in the vector modes

    T_n^m[f](x) = sqrt(n(n+1)) f(r)/r Y_n^m xhat + (r f(r))'/r U_n^m,
    S_n^m[f](x) = f(r) V_n^m,

with ``f`` a spherical Bessel or Hankel function of the appropriate wave
number.  Incident field: ``a T[j_n(k.)] + b S[j_n(k.)]``; scattered field:
``alpha T[h_n(k.)] + beta S[h_n(k.)]``; interior field:
``delta T[j_n(kappa.)] + phi S[j_n(kappa.)]``.  The auxiliary problem adds
a harmonic pressure ``P = sum p r^n Y_n^m`` and uses ``kappa = k sqrt(gamma
eta)``; the physical problem uses ``kappa = k sqrt(eps)``.

Useful identities: ``curl S[f] = -T[f]`` and ``curl T[f] = -kappa^2 S[f]``.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, specfun

__all__ = [
    "MediumParams",
    "PlaneWave",
    "ModalCoefficients",
    "NearSingularMode",
    "SingularModalSystem",
    "truncation_order",
    "plane_wave_coeffs",
    "incident_coefficients",
    "mie_solve_mode",
    "mie_transfer",
    "aux_matrix",
    "aux_solve_mode",
    "aux_transfer",
    "solve_plane_wave",
    "far_field_pattern",
    "far_field_from_transfer",
    "modal_field",
    "pressure_field",
    "pressure_gradient",
    "herglotz_field",
]


class NearSingularMode(ArithmeticError):
    """A physical 2x2 transmission system is numerically singular."""


class SingularModalSystem(ArithmeticError):
    """The auxiliary 5x5 modal matrix is singular at the requested eta."""

    def __init__(self, msg, n=None, eta=None):
        super().__init__(msg)
        self.n = n
        self.eta = eta


@dataclass(frozen=True)
class MediumParams:
    """Wave number, permittivity and the auxiliary parameters.

    ``gamma`` and ``eta`` are only needed for the auxiliary problem and the
    determinant functions; ``gamma = 1`` is allowed here so that degenerate
    cases can be probed, but the eigenvalue search refuses it.
    """

    k: float
    eps: float = 1.0
    gamma: float = 0.5
    eta: complex = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def with_eta(self, eta):
        return MediumParams(self.k, self.eps, self.gamma, eta)

    @property
    def kappa_phys(self):
        return self.k * math.sqrt(self.eps)

    @property
    def kappa_aux(self):
        return self.k * cmath.sqrt(self.gamma * complex(self.eta))


@dataclass(frozen=True)
class PlaneWave:
    d: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("propagation direction must be a unit vector")
        if not np.linalg.norm(p) > 0:
            raise ValueError("polarization must be nonzero")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", p)

    def field(self, x, k):
        """Closed form ``(i/k) curl curl p e^{ik x.d} = ik (p - (d.p) d) e^{ik x.d}``."""
        x = np.asarray(x, dtype=float)
        pt = self.p - np.dot(self.d, self.p) * self.d
        return 1j * k * pt * np.exp(1j * k * (x @ self.d))[..., None]


@dataclass
class ModalCoefficients:
    """Per-mode coefficients in :func:`specfun.mode_indices` order."""

    nmax: int
    k: float
    a: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    phi: np.ndarray
    p: np.ndarray = None
    problem: str = "physical"
    params: MediumParams = None
    ns: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.ns, _ = specfun.mode_indices(self.nmax)

    def decay_ratio(self):
        """Largest exterior coefficient at ``n = nmax`` relative to the overall max."""
        mag = np.maximum(np.abs(self.alpha), np.abs(self.beta))
        top = mag.max()
        if top == 0:
            return 0.0
        return float(mag[self.ns == self.nmax].max() / top)


def truncation_order(k, requested=None):
    """Number of retained vector orders for the unit ball."""
    if not k > 0:
        raise ValueError("k must be positive")
    if requested is not None:
        return int(requested)
    return int(math.ceil(k + 4.0 * k ** (1.0 / 3.0) + 6.0))


def plane_wave_coeffs(n, m, wave, k):
    """Expansion coefficients ``(a_n^m, b_n^m)`` of a plane wave.

    Normalized to the incident field ``ik (p - (d.p) d) e^{ik x.d}``:
    ``a = 4 pi i^n conj(U_n^m(d)).p`` and ``b = 4 pi k i^(n+1) conj(V_n^m(d)).p``.
    """
    if n < 1:
        raise ValueError("plane-wave expansion starts at n = 1")
    theta, phi = specfun.direction_to_angles(wave.d)
    th_hat, ph_hat = specfun.tangent_basis(theta, phi)
    pt = np.array([np.dot(th_hat, wave.p), np.dot(ph_hat, wave.p)])
    u = specfun.vsh_U(n, m, (theta, phi))
    v = specfun.vsh_V(n, m, (theta, phi))
    a = 4 * np.pi * 1j**n * np.dot(np.conj(u), pt)
    b = 4 * np.pi * k * 1j ** (n + 1) * np.dot(np.conj(v), pt)
    return complex(a), complex(b)


def incident_coefficients(nmax, k, U, V, pt):
    """Vectorized plane-wave coefficients.

    ``U, V`` are ``(ndir, nmodes, 2)`` tables at the propagation directions
    and ``pt`` holds tangential polarization components ``(ndir, 2)``.
    Returns ``a, b`` with shape ``(nmodes, ndir)``.
    """
    ns, _ = specfun.mode_indices(nmax)
    ca = 4 * np.pi * 1j**ns
    cb = 4 * np.pi * k * 1j ** (ns + 1)
    a = ca[:, None] * np.einsum("dmc,dc->md", np.conj(U), pt)
    b = cb[:, None] * np.einsum("dmc,dc->md", np.conj(V), pt)
    return a, b


def _radial(n, k, kappa):
    """Bessel/Hankel values and Riccati derivatives at r = 1 for one order."""
    jk = specfun.sph_bessel_j_all(n, k)
    rjk = specfun.riccati_j_deriv(n, k)
    hk = specfun.sph_hankel1(n, k)
    rhk = specfun.riccati_h1_deriv(n, k)
    jq = specfun.sph_bessel_j(n, kappa)
    rjq = specfun.riccati_j_deriv(n, kappa)
    return jk[n], rjk, hk, rhk, jq, rjq


def _solve2(M, rhs, scale_tol=1e-13):
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    # Hadamard bound over columns; row norms are swamped by h_n at large n
    scale = np.linalg.norm(M[:, 0]) * np.linalg.norm(M[:, 1])
    if abs(det) < scale_tol * scale:
        raise NearSingularMode(f"2x2 modal system near singular (|det| = {abs(det):.3e})")
    x0 = (rhs[0] * M[1, 1] - M[0, 1] * rhs[1]) / det
    x1 = (M[0, 0] * rhs[1] - M[1, 0] * rhs[0]) / det
    return x0, x1


def mie_solve_mode(n, params, a, b):
    """Exterior and interior coefficients for the penetrable unit ball.

    Continuity of tangential ``E`` and tangential ``curl E`` at ``r = 1``
    gives, per order, two decoupled 2x2 systems::

        [ (r j_q)'   -(r h)' ] [delta]   [a (r j)']
        [ eps j_q    -h      ] [alpha] = [a j     ]

        [ j_q        -h      ] [phi ]   [b j     ]
        [ (r j_q)'   -(r h)' ] [beta] = [b (r j)']

    with ``q = k sqrt(eps)``.  ``a`` and ``b`` may be arrays.

    Returns
    -------
    alpha, beta, delta, phi
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k, eps = params.k, params.eps
    jk, rjk, hk, rhk, jq, rjq = _radial(n, k, params.kappa_phys)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    Ma = np.array([[rjq, -rhk], [eps * jq, -hk]])
    Mb = np.array([[jq, -hk], [rjq, -rhk]])
    delta, alpha = _solve2(Ma, (a * rjk, a * jk))
    phi, beta = _solve2(Mb, (b * jk, b * rjk))
    return alpha, beta, delta, phi


def mie_transfer(nmax, params):
    """``(t_alpha[n], t_beta[n])`` so that ``alpha = t_alpha a`` and ``beta = t_beta b``.

    Index 0 of each array is unused (zero).
    """
    ta = np.zeros(nmax + 1, dtype=complex)
    tb = np.zeros(nmax + 1, dtype=complex)
    for n in range(1, nmax + 1):
        alpha, beta, _, _ = mie_solve_mode(n, params, 1.0, 1.0)
        ta[n], tb[n] = alpha, beta
    return ta, tb


def aux_matrix(n, params):
    """The 5x5 auxiliary modal matrix for unknowns ``(alpha, beta, delta, phi, p)``.

    Rows: tangential ``E`` (U and V parts), tangential ``gamma^-1 curl E``
    (U and V parts), and the normal condition on the pressure.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eta = complex(params.eta)
    if eta == 0:
        raise ValueError("eta must be nonzero")
    g = params.gamma
    _, _, hk, rhk, jq, rjq = _radial(n, params.k, params.kappa_aux)
    s = math.sqrt(n * (n + 1))
    return np.array(
        [
            [rhk, 0, -rjq, 0, -s / eta],
            [0, hk, 0, -jq, 0],
            [0, rhk, 0, -rjq / g, 0],
            [hk, 0, -eta * jq, 0, 0],
            [0, 0, s * jq, 0, n / eta],
        ],
        dtype=complex,
    )


def _aux_rhs(n, k, a, b):
    jk = specfun.sph_bessel_j(n, k)
    rjk = specfun.riccati_j_deriv(n, k)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    zero = np.zeros(np.broadcast(a, b).shape, dtype=complex)
    return np.stack([-a * rjk + zero, -b * jk + zero, -b * rjk + zero, -a * jk + zero, zero])


def _aux_factor(n, params):
    M = aux_matrix(n, params)
    colscale = np.linalg.norm(M, axis=0)
    try:
        lu, perm = linalg.lu_factor(M / colscale)
    except linalg.SingularMatrix as exc:
        raise SingularModalSystem(str(exc), n=n, eta=params.eta) from exc
    if np.abs(np.diag(lu)).min() < 1e-13:
        raise SingularModalSystem(
            f"auxiliary modal matrix near singular at n={n}, eta={params.eta}", n=n, eta=params.eta
        )
    return M, (lu, perm, colscale)


def aux_solve_mode(n, params, a, b):
    """Solve the auxiliary 5x5 system for one order.

    The same matrix serves every ``m``; ``a`` and ``b`` may be arrays of
    coefficients (any common shape).

    Returns
    -------
    alpha, beta, delta, phi, p

    Raises
    ------
    SingularModalSystem
    """
    if complex(params.eta).imag < 0:
        raise ValueError("auxiliary problem requires Im(eta) >= 0")
    _, (lu, perm, colscale) = _aux_factor(n, params)
    rhs = _aux_rhs(n, params.k, a, b)
    shape = rhs.shape[1:]
    sol = linalg.lu_solve(None, rhs.reshape(5, -1), factored=(lu, perm))
    sol = (sol / colscale[:, None]).reshape((5,) + shape)
    return tuple(sol[i] if shape else complex(sol[i]) for i in range(5))


def aux_transfer(nmax, params):
    """Auxiliary analogue of :func:`mie_transfer`."""
    ta = np.zeros(nmax + 1, dtype=complex)
    tb = np.zeros(nmax + 1, dtype=complex)
    for n in range(1, nmax + 1):
        alpha, beta, _, _, _ = aux_solve_mode(n, params, 1.0, 1.0)
        ta[n], tb[n] = alpha, beta
    return ta, tb


def solve_plane_wave(params, wave, nmax, problem="physical"):
    """Full modal solution for one incident plane wave."""
    ns, ms = specfun.mode_indices(nmax)
    k = params.k
    a = np.zeros(len(ns), dtype=complex)
    b = np.zeros(len(ns), dtype=complex)
    for i, (n, m) in enumerate(zip(ns, ms)):
        a[i], b[i] = plane_wave_coeffs(int(n), int(m), wave, k)
    alpha = np.zeros_like(a)
    beta = np.zeros_like(a)
    delta = np.zeros_like(a)
    phi = np.zeros_like(a)
    p = np.zeros_like(a) if problem == "auxiliary" else None
    for n in range(1, nmax + 1):
        sel = ns == n
        if problem == "physical":
            alpha[sel], beta[sel], delta[sel], phi[sel] = mie_solve_mode(n, params, a[sel], b[sel])
        elif problem == "auxiliary":
            alpha[sel], beta[sel], delta[sel], phi[sel], p[sel] = aux_solve_mode(
                n, params, a[sel], b[sel]
            )
        else:
            raise ValueError(f"unknown problem {problem!r}")
    return ModalCoefficients(nmax, k, a, b, alpha, beta, delta, phi, p, problem, params)


def far_field_pattern(coeffs, xhat):
    """Electric far field pattern at ``xhat`` (one unit vector or ``(N, 3)``).

    From the large-argument form of the outgoing expansion::

        E_inf = sum_n (-i)^(n+1) sum_m [ i alpha U_n^m + (beta / k) V_n^m ]

    Returns tangent-basis components, shape ``(2,)`` or ``(N, 2)``.
    """
    xhat = np.asarray(xhat, dtype=float)
    single = xhat.ndim == 1
    theta, phi = specfun.direction_to_angles(np.atleast_2d(xhat))
    _, U, V = specfun.vsh_table(coeffs.nmax, theta, phi)
    ns = coeffs.ns
    ph = (-1j) ** (ns + 1)
    cu = ph * 1j * coeffs.alpha
    cv = ph * coeffs.beta / coeffs.k
    out = np.einsum("m,dmc->dc", cu, U) + np.einsum("m,dmc->dc", cv, V)
    return out[0] if single else out


def far_field_from_transfer(nmax, k, ta, tb, a, b, U_obs, V_obs):
    """Far field tangent components for many incident fields at once.

    ``a, b``: ``(nmodes, ninc)`` incident coefficients; ``U_obs, V_obs``:
    ``(nobs, nmodes, 2)``.  Returns ``(nobs, 2, ninc)``.
    """
    ns, _ = specfun.mode_indices(nmax)
    ph = (-1j) ** (ns + 1)
    alpha = (ph * 1j * ta[ns])[:, None] * a
    beta = (ph * tb[ns] / k)[:, None] * b
    return np.einsum("omc,mi->oci", U_obs, alpha) + np.einsum("omc,mi->oci", V_obs, beta)


def _cartesian(theta, phi, radial, tangential):
    """Combine radial and ``(theta, phi)`` components into Cartesian vectors."""
    rhat = specfun.angles_to_direction(theta, phi)
    th_hat, ph_hat = specfun.tangent_basis(theta, phi)
    return (
        radial[..., None] * rhat
        + tangential[..., 0, None] * th_hat
        + tangential[..., 1, None] * ph_hat
    )


def modal_field(nmax, x, cT, cS, kind, wavenumber):
    """Evaluate ``sum cT T[f] + cS S[f]`` at points ``x`` (``(N, 3)``).

    ``kind`` is ``"j"`` (regular) or ``"h"`` (outgoing, real wave number
    only).  Returns Cartesian field values ``(N, 3)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=1)
    if np.any(r == 0):
        raise ValueError("field evaluation at the origin is not supported")
    theta, phi = specfun.direction_to_angles(x / r[:, None])
    Y, U, V = specfun.vsh_table(nmax, theta, phi)
    ns, _ = specfun.mode_indices(nmax)
    f = np.zeros((len(r), nmax + 1), dtype=complex)
    rf = np.zeros_like(f)
    for i, ri in enumerate(r):
        z = wavenumber * ri
        if kind == "j":
            jt = specfun.sph_bessel_j_all(nmax, z)
            f[i] = jt
            rf[i] = [specfun.riccati_j_deriv(n, z) for n in range(nmax + 1)]
        elif kind == "h":
            f[i] = [specfun.sph_hankel1(n, z.real) for n in range(nmax + 1)]
            rf[i] = [specfun.riccati_h1_deriv(n, z.real) for n in range(nmax + 1)]
        else:
            raise ValueError(kind)
    s = np.sqrt(ns * (ns + 1.0))
    fn = f[:, ns]
    rfn = rf[:, ns] / r[:, None]
    radial = np.sum(cT * s * fn / r[:, None] * Y, axis=1)
    tang = np.einsum("nm,nmc->nc", cT * rfn, U) + np.einsum("nm,nmc->nc", cS * fn, V)
    return _cartesian(theta, phi, radial, tang)


def pressure_field(coeffs, x):
    """``P(x) = sum p_n^m r^n Y_n^m`` for auxiliary coefficients."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=1)
    theta, phi = specfun.direction_to_angles(x / r[:, None])
    Y, _, _ = specfun.vsh_table(coeffs.nmax, theta, phi)
    return np.sum(coeffs.p * r[:, None] ** coeffs.ns * Y, axis=1)


def pressure_gradient(coeffs, x):
    """``grad P`` in Cartesian components."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=1)
    theta, phi = specfun.direction_to_angles(x / r[:, None])
    Y, U, _ = specfun.vsh_table(coeffs.nmax, theta, phi)
    ns = coeffs.ns
    rn1 = r[:, None] ** (ns - 1)
    radial = np.sum(coeffs.p * ns * rn1 * Y, axis=1)
    tang = np.einsum("nm,nmc->nc", coeffs.p * rn1 * np.sqrt(ns * (ns + 1.0)), U)
    return _cartesian(theta, phi, radial, tang)


def herglotz_field(g, grid, x, k):
    """Quadrature approximation of ``ik int e^{-ik x.d} g(d) ds(d)``.

    ``g`` holds tangent-basis density samples ``(N, 2)`` at the grid
    directions (not weighted).  ``x`` is one point or ``(M, 3)``.
    """
    g = np.asarray(g, dtype=complex).reshape(-1, 2)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    gc = g[:, 0, None] * grid.theta_hat + g[:, 1, None] * grid.phi_hat
    phase = np.exp(-1j * k * (x @ grid.directions.T)) * grid.weights
    out = 1j * k * phase @ gc
    return out[0] if single else out
