import numpy as np
import pytest


def random_unit(rng, size=None):
    v = rng.normal(size=(size or 1, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v if size else v[0]


_STENCILS = {
    4: ((1, 8.0), (2, -1.0), 12.0),
    6: ((1, 45.0), (2, -9.0), (3, 1.0), 60.0),
}


def jacobian(fun, x, h=1e-3, order=4):
    """Central-difference Jacobian of a vector field ``fun: (N,3)->(N,3)``.

    Returns ``J[p, i, j] = d fun_i / d x_j`` at each point.
    """
    *pairs, denom = _STENCILS[order]
    x = np.atleast_2d(x)
    J = np.zeros((len(x), 3, 3), dtype=complex)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        acc = 0
        for step, c in pairs:
            acc = acc + c * (fun(x + step * e) - fun(x - step * e))
        J[:, :, j] = acc / (denom * h)
    return J


def curl(fun, x, h=1e-3, order=4):
    J = jacobian(fun, x, h, order)
    return np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], axis=1)


def divergence(fun, x, h=1e-3):
    J = jacobian(fun, x, h)
    return J[:, 0, 0] + J[:, 1, 1] + J[:, 2, 2]


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
