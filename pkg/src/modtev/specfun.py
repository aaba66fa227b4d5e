"""Spherical Bessel/Hankel functions and (vector) spherical harmonics.

Conventions
-----------
``Y_n^m`` are orthonormal on the unit sphere and carry the Condon-Shortley
phase, so that ``Y_n^{-m} = (-1)^m conj(Y_n^m)``.  The vector harmonics are

    U_n^m = grad_S Y_n^m / sqrt(n(n+1)),    V_n^m = xhat x U_n^m,

and are returned as components in the local tangent basis
``(theta_hat, phi_hat)``.  All routines accept complex Bessel arguments.
"""

import math

import numpy as np

__all__ = [
    "sph_bessel_j",
    "sph_bessel_j_deriv",
    "sph_bessel_j_all",
    "sph_bessel_j_array",
    "sph_bessel_j_deriv_array",
    "sph_bessel_y_all",
    "sph_hankel1",
    "sph_hankel1_deriv",
    "riccati_j_deriv",
    "riccati_h1_deriv",
    "legendre_table",
    "sph_harmonic",
    "vsh_U",
    "vsh_V",
    "vsh_table",
    "mode_count",
    "mode_indices",
    "direction_to_angles",
    "angles_to_direction",
    "tangent_basis",
]

_SERIES_RADIUS = 0.5
_MAX_ARG = 1e4


def _series_j(nmax, x):
    """Ascending power series for j_0..j_nmax, accurate for small |x|."""
    x = complex(x)
    out = np.zeros(nmax + 1, dtype=complex)
    t = -0.5 * x * x
    lead = 1.0 + 0j
    for n in range(nmax + 1):
        if n > 0:
            lead *= x / (2 * n + 1)
        term = 1.0 + 0j
        total = 1.0 + 0j
        for k in range(1, 60):
            term *= t / (k * (2 * n + 2 * k + 1))
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
        out[n] = lead * total
    return out


def sph_bessel_j_all(nmax, x):
    """Return ``[j_0(x), ..., j_nmax(x)]`` for a complex scalar ``x``.

    Downward (Miller) recurrence normalized against ``j_0`` or ``j_1``,
    whichever is larger; the ascending series is used for ``|x| < 0.5``.
    """
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    x = complex(x)
    if not (np.isfinite(x.real) and np.isfinite(x.imag)):
        raise ValueError("non-finite argument")
    if abs(x) > _MAX_ARG:
        raise OverflowError(f"|x| = {abs(x):.3g} outside the supported range")
    if abs(x) < _SERIES_RADIUS:
        return _series_j(nmax, x)

    ax = abs(x)
    start = int(max(nmax, ax) + 20 + 2 * math.sqrt(max(nmax, ax))) + 2
    vals = np.zeros(start + 2, dtype=complex)
    vals[start + 1] = 0.0
    vals[start] = 1e-30
    for n in range(start, 0, -1):
        vals[n - 1] = (2 * n + 1) / x * vals[n] - vals[n + 1]
        if abs(vals[n - 1]) > 1e250:
            # rescale to keep the recurrence in range
            vals[n - 1 :] *= 1e-250
    j0 = np.sin(x) / x
    j1 = np.sin(x) / (x * x) - np.cos(x) / x
    if abs(j0) >= abs(j1):
        scale = j0 / vals[0]
    else:
        scale = j1 / vals[1]
    out = vals[: nmax + 1] * scale
    # closed forms are exact near zeros of j_0 / j_1 where the scaled
    # recurrence only carries absolute accuracy
    out[0] = j0
    if nmax >= 1:
        out[1] = j1
    return out


def sph_bessel_j_array(nmax, x):
    """Vectorized ``j_0..j_nmax`` over an array of complex arguments.

    Returns an array of shape ``(nmax + 1,) + x.shape``.  Same algorithm as
    :func:`sph_bessel_j_all`, with per-element rescaling of the downward
    recurrence.
    """
    x = np.asarray(x, dtype=complex)
    shape = x.shape
    x = x.ravel()
    out = np.zeros((nmax + 1, x.size), dtype=complex)
    ax = np.abs(x)
    if np.any(ax > _MAX_ARG):
        raise OverflowError("argument outside the supported range")
    small = ax < _SERIES_RADIUS
    for i in np.flatnonzero(small):
        out[:, i] = _series_j(nmax, x[i])
    big = ~small
    if big.any():
        xb = x[big]
        top = max(nmax, float(ax[big].max()))
        start = int(top + 20 + 2 * math.sqrt(top)) + 2
        nxt = np.zeros(xb.size, dtype=complex)
        cur = np.full(xb.size, 1e-30, dtype=complex)
        table = np.zeros((nmax + 1, xb.size), dtype=complex)
        if start <= nmax:
            table[start] = cur
        for n in range(start, 0, -1):
            prev = (2 * n + 1) / xb * cur - nxt
            nxt, cur = cur, prev
            if n - 1 <= nmax:
                table[n - 1] = cur
            huge = np.abs(cur) > 1e250
            if huge.any():
                cur[huge] *= 1e-250
                nxt[huge] *= 1e-250
                table[:, huge] *= 1e-250
        j0 = np.sin(xb) / xb
        j1 = np.sin(xb) / (xb * xb) - np.cos(xb) / xb
        if nmax >= 1:
            use0 = np.abs(j0) >= np.abs(j1)
            scale = np.where(use0, j0 / table[0], j1 / table[1])
        else:
            scale = j0 / table[0]
        table *= scale
        table[0] = j0
        if nmax >= 1:
            table[1] = j1
        out[:, big] = table
    return out.reshape((nmax + 1,) + shape)


def sph_bessel_j_deriv_array(nmax, x):
    """``(j, j')`` tables for orders ``0..nmax`` over an array ``x``."""
    x = np.asarray(x, dtype=complex)
    j = sph_bessel_j_array(max(nmax, 1) + 1, x)
    d = np.empty_like(j[: nmax + 1])
    d[0] = -j[1]
    zero = x == 0
    safe = np.where(zero, 1.0, x)
    for n in range(1, nmax + 1):
        d[n] = np.where(zero, 1.0 / 3.0 if n == 1 else 0.0, j[n - 1] - (n + 1) / safe * j[n])
    return j[: nmax + 1], d


def sph_bessel_j(n, x):
    """Spherical Bessel function of the first kind ``j_n(x)``."""
    if n < 0:
        raise ValueError("order must be >= 0")
    return sph_bessel_j_all(n, x)[n]


def _deriv_from_table(j, x):
    n = np.arange(len(j))
    d = np.empty_like(j)
    if x == 0:
        d[:] = 0.0
        if len(j) > 1:
            d[1] = 1.0 / 3.0
        return d
    d[0] = -j[1]
    d[1:] = j[:-1] - (n[1:] + 1) / x * j[1:]
    return d


def sph_bessel_j_deriv(n, x):
    """Derivative ``j_n'(x)`` via ``j_n' = j_{n-1} - (n+1)/x j_n``."""
    if n < 0:
        raise ValueError("order must be >= 0")
    x = complex(x)
    j = sph_bessel_j_all(max(n, 1), x)
    return _deriv_from_table(j, x)[n]


def riccati_j_deriv(n, x):
    """``d/dr [r j_n(x r)]`` at ``r = 1``, i.e. ``j_n(x) + x j_n'(x)``."""
    x = complex(x)
    j = sph_bessel_j_all(max(n, 1), x)
    return j[n] + x * _deriv_from_table(j, x)[n]


def sph_bessel_y_all(nmax, x):
    """``[y_0(x), ..., y_nmax(x)]`` for real ``x > 0`` by upward recurrence."""
    x = float(x)
    if not x > 0:
        raise ValueError("y_n requires a real argument x > 0")
    y = np.zeros(max(nmax, 1) + 1)
    y[0] = -math.cos(x) / x
    y[1] = -math.cos(x) / (x * x) - math.sin(x) / x
    for n in range(1, nmax):
        y[n + 1] = (2 * n + 1) / x * y[n] - y[n - 1]
    return y[: nmax + 1]


def _hankel_table(nmax, x):
    x = float(x)
    if not x > 0:
        raise ValueError("h_n^(1) requires a real argument x > 0")
    m = max(nmax, 1) + 1
    h = sph_bessel_j_all(m, x).real + 1j * sph_bessel_y_all(m, x)
    return h


def sph_hankel1(n, x):
    """Spherical Hankel function ``h_n^(1)(x) = j_n(x) + i y_n(x)``, x > 0."""
    return _hankel_table(n, x)[n]


def sph_hankel1_deriv(n, x):
    h = _hankel_table(n, x)
    if n == 0:
        return -h[1]
    return h[n - 1] - (n + 1) / x * h[n]


def riccati_h1_deriv(n, x):
    """``h_n^(1)(x) + x h_n^(1)'(x)``."""
    return sph_hankel1(n, x) + x * sph_hankel1_deriv(n, x)


# ---------------------------------------------------------------------------
# spherical harmonics


def direction_to_angles(d):
    """Unit vector(s) ``(..., 3)`` -> polar and azimuthal angles."""
    d = np.asarray(d, dtype=float)
    norm = np.linalg.norm(d, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise ValueError("directions must be unit vectors")
    theta = np.arccos(np.clip(d[..., 2] / norm, -1.0, 1.0))
    phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2 * np.pi)
    return theta, phi


def angles_to_direction(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def tangent_basis(theta, phi):
    """Cartesian ``theta_hat`` and ``phi_hat`` unit vectors, each ``(..., 3)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    th_hat = np.stack([ct * cp, ct * sp, -st], axis=-1)
    ph_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return th_hat, ph_hat


def legendre_table(nmax, theta):
    """Normalized associated Legendre data for orders ``0 <= m <= n <= nmax``.

    Returns three arrays of shape ``(..., nmax+1, nmax+1)`` indexed
    ``[..., n, m]``:

    * ``lam``  -- ``lambda_n^m(theta)``, so that ``Y_n^m = lam * exp(i m phi)``
    * ``lam_s`` -- ``lambda_n^m / sin(theta)`` for ``m >= 1`` (zero for m = 0)
    * ``dlam`` -- ``d lambda_n^m / d theta``

    ``lam_s`` is generated by the same recurrence as ``lam`` from seeds with
    one power of ``sin(theta)`` removed, so it stays finite at the poles.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.cos(theta)
    s = np.sin(theta)
    shape = theta.shape + (nmax + 1, nmax + 1)
    lam = np.zeros(shape)
    lam_s = np.zeros(shape)
    dlam = np.zeros(shape)

    # sectoral seeds: lambda_m^m = (-1)^m sqrt((2m+1)/(4 pi (2m)!)) (2m-1)!! sin^m
    seed = np.full(theta.shape, 1.0 / math.sqrt(4 * math.pi))  # lambda_0^0
    seed_s = np.zeros(theta.shape)  # lambda_m^m / sin, valid for m >= 1
    for m in range(nmax + 1):
        if m == 1:
            c = -math.sqrt(3.0 / 2.0)
            seed_s = c * seed  # seed holds lambda_0^0 here
            seed = seed_s * s
        elif m > 1:
            c = -math.sqrt((2 * m + 1) / (2.0 * m))
            seed_s = c * seed_s * s
            seed = seed_s * s
        lam[..., m, m] = seed
        if m >= 1:
            lam_s[..., m, m] = seed_s
        if m + 1 <= nmax:
            f = math.sqrt(2 * m + 3)
            lam[..., m + 1, m] = f * x * seed
            if m >= 1:
                lam_s[..., m + 1, m] = f * x * seed_s
        for n in range(m + 2, nmax + 1):
            a = math.sqrt((4 * n * n - 1) / (n * n - m * m))
            b = math.sqrt(((n - 1) ** 2 - m * m) / (4 * (n - 1) ** 2 - 1))
            lam[..., n, m] = a * (x * lam[..., n - 1, m] - b * lam[..., n - 2, m])
            if m >= 1:
                lam_s[..., n, m] = a * (x * lam_s[..., n - 1, m] - b * lam_s[..., n - 2, m])

    for n in range(1, nmax + 1):
        dlam[..., n, 0] = math.sqrt(n * (n + 1)) * lam[..., n, 1]
        for m in range(1, n + 1):
            c = math.sqrt((2 * n + 1) / (2 * n - 1) * (n * n - m * m))
            prev = lam_s[..., n - 1, m] if n - 1 >= m else 0.0
            dlam[..., n, m] = n * x * lam_s[..., n, m] - c * prev
    return lam, lam_s, dlam


def _check_index(n, m, vector=False):
    if n < 0 or abs(m) > n:
        raise ValueError(f"invalid mode index (n={n}, m={m})")
    if vector and n < 1:
        raise ValueError("vector spherical harmonics require n >= 1")


def _angles(direction):
    if np.ndim(direction) == 0 or len(direction) == 2:
        theta, phi = direction
        return float(theta), float(phi)
    th, ph = direction_to_angles(np.asarray(direction, dtype=float))
    return float(th), float(ph)


def sph_harmonic(n, m, direction):
    """``Y_n^m`` at a unit vector (length 3) or ``(theta, phi)`` pair."""
    _check_index(n, m)
    theta, phi = _angles(direction)
    lam, _, _ = legendre_table(n, theta)
    mu = abs(m)
    val = lam[n, mu] * np.exp(1j * mu * phi)
    if m < 0:
        val = (-1) ** mu * np.conj(val)
    return complex(val)


def _vsh_pos(n, mu, theta, phi):
    lam, lam_s, dlam = legendre_table(n, theta)
    e = np.exp(1j * mu * phi)
    norm = 1.0 / math.sqrt(n * (n + 1))
    return np.array([norm * dlam[n, mu] * e, norm * 1j * mu * lam_s[n, mu] * e])


def vsh_U(n, m, direction):
    """``U_n^m`` as ``(theta_hat, phi_hat)`` components."""
    _check_index(n, m, vector=True)
    theta, phi = _angles(direction)
    u = _vsh_pos(n, abs(m), theta, phi)
    if m < 0:
        u = (-1) ** m * np.conj(u)
    return u


def vsh_V(n, m, direction):
    """``V_n^m = xhat x U_n^m`` as ``(theta_hat, phi_hat)`` components."""
    u = vsh_U(n, m, direction)
    return np.array([-u[1], u[0]])


def mode_count(nmax):
    """Number of vector modes with ``1 <= n <= nmax``."""
    return nmax * (nmax + 2)


def mode_indices(nmax):
    """Arrays ``(n, m)`` enumerating vector modes in storage order."""
    ns, ms = [], []
    for n in range(1, nmax + 1):
        for m in range(-n, n + 1):
            ns.append(n)
            ms.append(m)
    return np.array(ns), np.array(ms)


def vsh_table(nmax, theta, phi):
    """Vectorized ``Y``, ``U`` and ``V`` for all modes at many directions.

    Returns
    -------
    Y : (ndir, nmodes) complex
    U, V : (ndir, nmodes, 2) complex, tangent-basis components
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    lam, lam_s, dlam = legendre_table(nmax, theta)
    ns, ms = mode_indices(nmax)
    mu = np.abs(ms)
    e = np.exp(1j * mu[None, :] * phi[:, None])
    sign = np.where(ms < 0, (-1.0) ** mu, 1.0)
    neg = ms < 0

    lam_nm = lam[:, ns, mu]
    Y = lam_nm * e
    norm = 1.0 / np.sqrt(ns * (ns + 1.0))
    U = np.stack([norm * dlam[:, ns, mu] * e, norm * 1j * mu * lam_s[:, ns, mu] * e], axis=-1)
    Y = np.where(neg, sign * np.conj(Y), Y)
    U = np.where(neg[None, :, None], sign[None, :, None] * np.conj(U), U)
    V = np.stack([-U[..., 1], U[..., 0]], axis=-1)
    return Y, U, V
