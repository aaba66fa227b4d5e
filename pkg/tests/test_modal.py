import numpy as np
import pytest
from conftest import curl, divergence, random_unit

from modtev import modal, specfun
from modtev.operators import direction_grid


def boundary_points(rng, count=20):
    return random_unit(rng, count)


def tangential(v, nrm):
    return np.cross(nrm, v)


def rel(err, ref):
    return np.abs(err).max() / max(np.abs(ref).max(), 1e-300)


# ---------------------------------------------------------------- incident field


def test_truncation_order():
    assert modal.truncation_order(2.0) == 14
    assert modal.truncation_order(1.0, 20) == 20
    with pytest.raises(ValueError):
        modal.truncation_order(0.0)


def test_plane_wave_expansion_closed_form(rng):
    k = 2.0
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    nmax = 25
    c = modal.solve_plane_wave(modal.MediumParams(k, 1.5), wave, nmax)
    x = np.array([[0.3, -0.1, 0.2]])
    approx = modal.modal_field(nmax, x, c.a, c.b, "j", k)
    assert rel(approx - wave.field(x, k), wave.field(x, k)) < 1e-8


def test_plane_wave_linearity_and_longitudinal(rng):
    d = random_unit(rng)
    p = rng.normal(size=3)
    for n, m in [(1, 0), (2, -1), (3, 3)]:
        a1, b1 = modal.plane_wave_coeffs(n, m, modal.PlaneWave(d, p), 2.0)
        a2, b2 = modal.plane_wave_coeffs(n, m, modal.PlaneWave(d, 2 * p), 2.0)
        assert a2 == pytest.approx(2 * a1, rel=1e-14) and b2 == pytest.approx(2 * b1, rel=1e-14)
        a3, b3 = modal.plane_wave_coeffs(n, m, modal.PlaneWave(d, 3 * d), 2.0)
        assert abs(a3) < 1e-13 and abs(b3) < 1e-13


def test_vectorized_incident_coefficients(rng):
    nmax, k = 5, 1.3
    dirs = random_unit(rng, 4)
    theta, phi = specfun.direction_to_angles(dirs)
    th, ph = specfun.tangent_basis(theta, phi)
    p = rng.normal(size=(4, 3))
    pt = np.stack([np.sum(th * p, 1), np.sum(ph * p, 1)], axis=1)
    _, U, V = specfun.vsh_table(nmax, theta, phi)
    a, b = modal.incident_coefficients(nmax, k, U, V, pt)
    ns, ms = specfun.mode_indices(nmax)
    for i in range(4):
        for j, (n, m) in enumerate(zip(ns, ms)):
            ai, bi = modal.plane_wave_coeffs(int(n), int(m), modal.PlaneWave(dirs[i], p[i]), k)
            assert abs(a[j, i] - ai) < 1e-13 and abs(b[j, i] - bi) < 1e-12


# ---------------------------------------------------------------- physical problem


def test_zero_contrast():
    ta, tb = modal.mie_transfer(10, modal.MediumParams(2.0, 1.0))
    assert np.all(ta == 0) and np.all(tb == 0)


def physical_fields(c, params):
    N, k = c.nmax, params.k
    Es = lambda y: modal.modal_field(N, y, c.alpha, c.beta, "h", k)  # noqa: E731
    Ein = lambda y: modal.modal_field(N, y, c.delta, c.phi, "j", params.kappa_phys)  # noqa: E731
    Ei = lambda y: modal.modal_field(N, y, c.a, c.b, "j", k)  # noqa: E731
    return Es, Ein, Ei


@pytest.mark.parametrize("k,eps", [(1.0, 2.0), (2.0, 1.9), (0.5, 4.0)])
def test_physical_transmission_conditions(rng, k, eps):
    params = modal.MediumParams(k, eps)
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    c = modal.solve_plane_wave(params, wave, modal.truncation_order(k), "physical")
    Es, Ein, Ei = physical_fields(c, params)
    x = boundary_points(rng)
    jump_e = tangential(Ein(x) - Es(x) - Ei(x), x)
    assert rel(jump_e, Ei(x)) < 1e-11
    ci = curl(Ei, x)
    jump_c = tangential(curl(Ein, x) - curl(Es, x) - ci, x)
    assert rel(jump_c, ci) < 1e-9


def test_single_mode_residual(rng):
    """n=1, k=1, eps=2: both conditions for each polarization branch separately."""
    params = modal.MediumParams(1.0, 2.0)
    alpha, beta, delta, phi = modal.mie_solve_mode(1, params, 1.0, 1.0)
    jk, rjk = specfun.sph_bessel_j(1, 1.0), specfun.riccati_j_deriv(1, 1.0)
    hk, rhk = specfun.sph_hankel1(1, 1.0), specfun.riccati_h1_deriv(1, 1.0)
    q = params.kappa_phys
    jq, rjq = specfun.sph_bessel_j(1, q), specfun.riccati_j_deriv(1, q)
    # TM branch: tangential E and tangential curl E
    assert abs(delta * rjq - alpha * rhk - rjk) < 1e-14
    assert abs(2.0 * delta * jq - alpha * hk - jk) < 1e-14
    # TE branch
    assert abs(phi * jq - beta * hk - jk) < 1e-14
    assert abs(phi * rjq - beta * rhk - rjk) < 1e-14


def test_coefficient_decay():
    for k in (1.0, 2.0):
        nmax = modal.truncation_order(k)
        for params in (modal.MediumParams(k, 2.0), modal.MediumParams(k, 2.0, 0.5, 3.0)):
            ta, tb = modal.mie_transfer(nmax, params)
            assert max(abs(ta[nmax]), abs(tb[nmax])) < 1e-12 * np.abs(ta).max()
            a0, b0 = modal.aux_transfer(nmax, params)
            assert max(abs(a0[nmax]), abs(b0[nmax])) < 1e-12 * np.abs(a0).max()


def test_decay_ratio_certificate(rng):
    params = modal.MediumParams(2.0, 2.0, 0.5, 1.3)
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    for problem in ("physical", "auxiliary"):
        c = modal.solve_plane_wave(params, wave, modal.truncation_order(2.0), problem)
        assert c.decay_ratio() < 1e-12


# ---------------------------------------------------------------- auxiliary problem


def test_aux_matrix_residual(rng):
    for eta in (0.7, 1.0, 3.0):
        params = modal.MediumParams(1.0, 2.0, 0.5, eta)
        for n in range(1, 9):
            a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
            sol = np.array(modal.aux_solve_mode(n, params, a, b))
            M = modal.aux_matrix(n, params)
            jk, rjk = specfun.sph_bessel_j(n, 1.0), specfun.riccati_j_deriv(n, 1.0)
            rhs = np.array([-a * rjk, -b * jk, -b * rjk, -a * jk, 0])
            res = np.linalg.norm(M @ sol - rhs) / (np.linalg.norm(M) * np.linalg.norm(sol) + np.linalg.norm(rhs))
            assert res < 1e-12


def test_aux_linearity():
    params = modal.MediumParams(1.0, 2.0, 0.5, 1.7)
    one = np.array(modal.aux_solve_mode(2, params, 0.3 + 1j, -0.5))
    two = np.array(modal.aux_solve_mode(2, params, 0.6 + 2j, -1.0))
    np.testing.assert_allclose(two, 2 * one, rtol=1e-14)


def test_aux_matrix_independent_of_m():
    params = modal.MediumParams(2.0, 2.0, 0.5, 2.2)
    a = np.array([0.1, 0.2 + 1j, -0.3])
    b = np.array([1.0, -1j, 0.5])
    vec = modal.aux_solve_mode(3, params, a, b)
    for i in range(3):
        single = modal.aux_solve_mode(3, params, a[i], b[i])
        for v, s in zip(vec, single):
            assert abs(v[i] - s) <= 1e-15 * max(abs(s), 1e-300)


def aux_fields(c, params):
    N, k = c.nmax, params.k
    E0s = lambda y: modal.modal_field(N, y, c.alpha, c.beta, "h", k)  # noqa: E731
    E0 = lambda y: modal.modal_field(N, y, c.delta, c.phi, "j", params.kappa_aux)  # noqa: E731
    gP = lambda y: modal.pressure_gradient(c, y)  # noqa: E731
    Ei = lambda y: modal.modal_field(N, y, c.a, c.b, "j", k)  # noqa: E731
    return E0s, E0, gP, Ei


@pytest.mark.parametrize("eta", [0.7, 1.0, 3.0])
def test_aux_transmission_conditions(rng, eta):
    params = modal.MediumParams(1.0, 2.0, 0.5, eta)
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    c = modal.solve_plane_wave(params, wave, modal.truncation_order(1.0), "auxiliary")
    E0s, E0, gP, Ei = aux_fields(c, params)
    full = lambda y: E0(y) + gP(y) / eta  # noqa: E731
    x = boundary_points(rng)
    scale = np.abs(Ei(x)).max()
    assert np.abs(np.sum(x * full(x), axis=1)).max() < 1e-10 * scale
    assert rel(tangential(full(x) - E0s(x) - Ei(x), x), Ei(x)) < 1e-10
    # sixth-order differences: truncation and rounding both stay near 1e-12
    ci = curl(Ei, x, 2e-3, 6)
    jump = tangential(curl(E0, x, 2e-3, 6) / params.gamma - curl(E0s, x, 2e-3, 6) - ci, x)
    assert rel(jump, ci) < 1e-10


def test_aux_interior_is_divergence_free(rng):
    params = modal.MediumParams(1.0, 2.0, 0.5, 1.3)
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    c = modal.solve_plane_wave(params, wave, 10, "auxiliary")
    _, E0, _, _ = aux_fields(c, params)
    x = 0.5 * random_unit(rng, 5)
    assert np.abs(divergence(E0, x)).max() < 1e-9 * np.abs(E0(x)).max()


def test_pressure_is_harmonic_polynomial(rng):
    params = modal.MediumParams(1.0, 2.0, 0.5, 1.3)
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    c = modal.solve_plane_wave(params, wave, 6, "auxiliary")
    x = 0.4 * random_unit(rng, 4)
    g = modal.pressure_gradient(c, x)
    h = 1e-3
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        P = lambda y: modal.pressure_field(c, y)  # noqa: E731
        fd = (-P(x + 2 * e) + 8 * P(x + e) - 8 * P(x - e) + P(x - 2 * e)) / (12 * h)
        np.testing.assert_allclose(g[:, j], fd, atol=1e-9 * np.abs(g).max())


def test_aux_requires_upper_half_plane():
    with pytest.raises(ValueError):
        modal.aux_solve_mode(1, modal.MediumParams(1.0, 2.0, 0.5, 1.0 - 0.1j), 1.0, 1.0)


def test_aux_well_posed_on_real_axis():
    """Uniqueness for Im(eta) >= 0: no singular 5x5 system along a real sweep."""
    params = modal.MediumParams(2.0, 2.0, 0.5)
    for eta in np.linspace(0.05, 40.0, 400):
        for n in range(1, 8):
            modal.aux_solve_mode(n, params.with_eta(eta), 1.0, 1.0)


def test_aux_singular_is_reported(monkeypatch):
    original = modal.aux_matrix

    def degenerate(n, params):
        M = original(n, params)
        M[:, 4] = M[:, 2]  # duplicate a column
        return M

    monkeypatch.setattr(modal, "aux_matrix", degenerate)
    with pytest.raises(modal.SingularModalSystem) as info:
        modal.aux_solve_mode(3, modal.MediumParams(1.0, 2.0, 0.5, 1.2), 1.0, 1.0)
    assert info.value.n == 3 and info.value.eta == 1.2


# ---------------------------------------------------------------- far field


def test_far_field_zero_coefficients():
    z = np.zeros(modal.specfun.mode_count(3), dtype=complex)
    c = modal.ModalCoefficients(3, 2.0, z, z, z, z, z, z)
    assert np.all(modal.far_field_pattern(c, np.array([0.0, 0.0, 1.0])) == 0)


def test_far_field_single_mode():
    nmax, k = 2, 2.0
    ns, ms = specfun.mode_indices(nmax)
    z = np.zeros(len(ns), dtype=complex)
    alpha = z.copy()
    alpha[(ns == 1) & (ms == 0)] = 1.0
    c = modal.ModalCoefficients(nmax, k, z, z, alpha, z, z, z)
    xh = np.array([0.6, 0.0, 0.8])
    expected = (-1j) ** 2 * 1j * specfun.vsh_U(1, 0, xh)
    np.testing.assert_allclose(modal.far_field_pattern(c, xh), expected, atol=1e-15)


@pytest.mark.parametrize("problem", ["physical", "auxiliary"])
def test_far_field_large_radius(rng, problem):
    k = 2.0
    params = modal.MediumParams(k, 2.0, 0.5, 1.3)
    wave = modal.PlaneWave(random_unit(rng), rng.normal(size=3))
    c = modal.solve_plane_wave(params, wave, modal.truncation_order(k), problem)
    xh = random_unit(rng)
    R = 1e3
    Es = modal.modal_field(c.nmax, R * xh[None], c.alpha, c.beta, "h", k)[0]
    approx = R * np.exp(-1j * k * R) * Es
    theta, phi = specfun.direction_to_angles(xh)
    th, ph = specfun.tangent_basis(theta, phi)
    ff = modal.far_field_pattern(c, xh)
    assert np.linalg.norm([approx @ th - ff[0], approx @ ph - ff[1]]) < 1e-2 * np.linalg.norm(ff)
    assert abs(approx @ xh) < 1e-2 * np.linalg.norm(ff)


def far_field_dot(params, problem, xh, d, p, q):
    c = modal.solve_plane_wave(params, modal.PlaneWave(d, p), modal.truncation_order(params.k), problem)
    ff = modal.far_field_pattern(c, xh)
    theta, phi = specfun.direction_to_angles(xh)
    th, ph = specfun.tangent_basis(theta, phi)
    return np.dot(q, ff[0] * th + ff[1] * ph)


@pytest.mark.parametrize("problem", ["physical", "auxiliary"])
def test_reciprocity(rng, problem):
    params = modal.MediumParams(2.0, 2.0, 0.5, 2.7)
    for _ in range(8):
        xh, d = random_unit(rng), random_unit(rng)
        p, q = rng.normal(size=3), rng.normal(size=3)
        lhs = far_field_dot(params, problem, xh, d, p, q)
        rhs = far_field_dot(params, problem, -d, -xh, q, p)
        assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), abs(rhs))


# ---------------------------------------------------------------- Herglotz


def test_herglotz_basic(rng):
    grid = direction_grid(5, 10)
    g = rng.normal(size=(grid.size, 2)) + 1j * rng.normal(size=(grid.size, 2))
    assert np.all(modal.herglotz_field(np.zeros_like(g), grid, np.array([0.1, 0.2, 0.3]), 2.0) == 0)
    at0 = modal.herglotz_field(g, grid, np.zeros(3), 2.0)
    gc = g[:, 0, None] * grid.theta_hat + g[:, 1, None] * grid.phi_hat
    np.testing.assert_allclose(at0, 2j * np.sum(grid.weights[:, None] * gc, axis=0), rtol=1e-14)


def test_herglotz_divergence_free(rng):
    grid = direction_grid(6, 12)
    g = rng.normal(size=(grid.size, 2)) + 1j * rng.normal(size=(grid.size, 2))
    x = rng.uniform(-0.8, 0.8, size=(5, 3))
    fun = lambda y: modal.herglotz_field(g, grid, y, 2.0)  # noqa: E731
    assert np.abs(divergence(fun, x, h=1e-4)).max() < 1e-6 * np.abs(fun(x)).max()


def test_medium_validation():
    with pytest.raises(ValueError):
        modal.MediumParams(-1.0)
    with pytest.raises(ValueError):
        modal.MediumParams(1.0, eps=0.0)
    with pytest.raises(ValueError):
        modal.PlaneWave(np.array([1.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
