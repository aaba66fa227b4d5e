"""Direction grids and discretized far field operators.

Matrix convention
-----------------
A tangential density ``g`` on the grid is stored as the vector with entries
``sqrt(w_j) * g_tau(d_j)`` ordered ``(j, tau)`` with ``tau in (theta_hat,
phi_hat)``; far field values are stored the same way at the observation
directions.  The matrix of an operator with kernel ``E_inf(xhat, d; .)`` is
therefore ``sqrt(w_i) E_inf(xhat_i, d_j; e_tau) . e_sigma sqrt(w_j)``, so the
matrix-vector product is the quadrature rule and Euclidean norms are discrete
``L^2_t`` norms.
"""

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import modal, specfun

__all__ = [
    "DirectionGrid",
    "FarFieldMatrix",
    "GridMismatch",
    "direction_grid",
    "assemble_F",
    "assemble_F0",
    "modified_operator",
    "add_noise",
    "reciprocity_defect",
    "write_matrix",
    "read_matrix",
    "NOISE_GENERATOR",
]

NOISE_GENERATOR = "numpy.random.PCG64"
MAGIC = b"MTEVFFM1"


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    n_polar: int
    n_azimuth: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    directions: np.ndarray
    theta_hat: np.ndarray
    phi_hat: np.ndarray

    @property
    def size(self):
        return len(self.weights)

    @property
    def spec(self):
        return {"type": "gauss-legendre x trapezoid", "n_polar": self.n_polar, "n_azimuth": self.n_azimuth}

    def same_as(self, other):
        return self.n_polar == other.n_polar and self.n_azimuth == other.n_azimuth

    def sqrt_weights(self):
        """Per-entry weights for the ``(j, tau)`` vector layout."""
        return np.repeat(np.sqrt(self.weights), 2)

    def weight(self, g):
        """Density samples ``(N, 2)`` -> weighted vector ``(2N,)``."""
        return np.asarray(g).reshape(-1) * self.sqrt_weights()

    def unweight(self, vec):
        """Weighted vector -> density samples ``(N, 2)``."""
        return (np.asarray(vec) / self.sqrt_weights()).reshape(-1, 2)

    def antipodes(self):
        """Index of ``-d_j`` for every grid direction."""
        d = self.directions
        dots = d @ (-d).T
        idx = np.argmax(dots, axis=0)
        if not np.allclose(d[idx], -d, atol=1e-12):
            raise ValueError("grid is not closed under the antipodal map")
        return idx


def direction_grid(n_polar, n_azimuth):
    """Gauss-Legendre nodes in ``cos(theta)`` times a uniform azimuthal rule.

    ``N = n_polar * n_azimuth`` directions with weights summing to ``4 pi``.
    The rule integrates ``Y_n^m conj(Y_n'^m')`` exactly when
    ``n + n' <= 2 n_polar - 1`` and ``|m - m'| < n_azimuth``.
    """
    if n_polar < 2 or n_azimuth < 4:
        raise ValueError("need n_polar >= 2 and n_azimuth >= 4")
    x, wx = np.polynomial.legendre.leggauss(n_polar)
    theta_1d = np.arccos(x[::-1])
    wx = wx[::-1]
    phi_1d = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    theta, phi = np.meshgrid(theta_1d, phi_1d, indexing="ij")
    theta = theta.ravel()
    phi = phi.ravel()
    weights = np.repeat(wx, n_azimuth) * (2 * np.pi / n_azimuth)
    dirs = specfun.angles_to_direction(theta, phi)
    th_hat, ph_hat = specfun.tangent_basis(theta, phi)
    return DirectionGrid(n_polar, n_azimuth, theta, phi, weights, dirs, th_hat, ph_hat)


@dataclass(eq=False)
class FarFieldMatrix:
    grid: DirectionGrid
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.meta["k"]

    def __matmul__(self, g):
        return self.matrix @ g


def _vsh_on_grid(grid, nmax):
    _, U, V = specfun.vsh_table(nmax, grid.theta, grid.phi)
    return U, V


def _assemble(grid, k, nmax, ta, tb):
    U, V = _vsh_on_grid(grid, nmax)
    N = grid.size
    mat = np.empty((2 * N, 2 * N), dtype=complex)
    for tau in range(2):
        pt = np.zeros((N, 2))
        pt[:, tau] = 1.0
        a, b = modal.incident_coefficients(nmax, k, U, V, pt)
        ff = modal.far_field_from_transfer(nmax, k, ta, tb, a, b, U, V)  # (obs, 2, inc)
        mat[:, tau::2] = ff.reshape(2 * N, N)
    sw = grid.sqrt_weights()
    return sw[:, None] * mat * sw[None, :]


def _base_meta(params, grid, nmax, which):
    return {
        "operator": which,
        "k": params.k,
        "eps": params.eps,
        "gamma": params.gamma,
        "eta": None,
        "n_max": nmax,
        "grid": grid.spec,
        "noise_level": 0.0,
        "noise_seed": None,
        "noise_generator": None,
    }


def assemble_F(params, grid, nmax=None):
    """Physical far field operator (``gamma`` and ``eta`` are ignored)."""
    nmax = modal.truncation_order(params.k, nmax)
    ta, tb = modal.mie_transfer(nmax, params)
    mat = _assemble(grid, params.k, nmax, ta, tb)
    meta = _base_meta(params, grid, nmax, "F")
    meta["gamma"] = None
    return FarFieldMatrix(grid, mat, meta)


def assemble_F0(params, grid, nmax=None):
    """Auxiliary far field operator at ``params.eta``.

    Raises
    ------
    modal.SingularModalSystem
        carrying the offending ``n`` and ``eta``.
    """
    eta = complex(params.eta)
    if eta == 0 or eta.imag < 0:
        raise ValueError("assemble_F0 needs eta != 0 with Im(eta) >= 0")
    nmax = modal.truncation_order(params.k, nmax)
    ta, tb = modal.aux_transfer(nmax, params)
    mat = _assemble(grid, params.k, nmax, ta, tb)
    meta = _base_meta(params, grid, nmax, "F0")
    meta["eps"] = None
    meta["eta"] = eta.real if eta.imag == 0 else [eta.real, eta.imag]
    return FarFieldMatrix(grid, mat, meta)


def modified_operator(F, F0):
    """``F - F0`` on a common grid."""
    if not F.grid.same_as(F0.grid) or F.matrix.shape != F0.matrix.shape:
        raise GridMismatch("operators live on different grids")
    if F.meta.get("k") != F0.meta.get("k"):
        raise GridMismatch("operators use different wave numbers")
    meta = dict(F.meta)
    meta.update(operator="modified", gamma=F0.meta.get("gamma"), eta=F0.meta.get("eta"))
    meta["parents"] = [dict(F.meta), dict(F0.meta)]
    return FarFieldMatrix(F.grid, F.matrix - F0.matrix, meta)


def add_noise(M, level, seed):
    """Multiplicative complex uniform noise ``m (1 + level (z1 + i z2)/sqrt 2)``.

    ``z1, z2`` are independent uniform on ``[-1, 1]`` drawn from
    ``numpy.random.Generator(PCG64(seed))``.
    """
    if not 0 <= level < 1:
        raise ValueError("noise level must lie in [0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    shape = M.matrix.shape
    z1 = rng.uniform(-1.0, 1.0, size=shape)
    z2 = rng.uniform(-1.0, 1.0, size=shape)
    noisy = M.matrix * (1.0 + level * (z1 + 1j * z2) / np.sqrt(2.0))
    meta = dict(M.meta)
    meta.update(noise_level=level, noise_seed=seed, noise_generator=NOISE_GENERATOR)
    return replace(M, matrix=noisy, meta=meta)


def reciprocity_defect(M):
    """Max relative violation of the discrete reciprocity relation.

    Reciprocity ``q . E(x, d; p) = p . E(-d, -x; q)`` becomes
    ``K[(i,s),(j,t)] = c_s c_t K[(j',t),(i',s)]`` where ``'`` is the
    antipodal index and ``c = (1, -1)`` accounts for ``phi_hat(-d) =
    -phi_hat(d)`` (``theta_hat`` is unchanged).
    """
    grid = M.grid
    anti = grid.antipodes()
    N = grid.size
    K = M.matrix.reshape(N, 2, N, 2)
    c = np.array([1.0, -1.0])
    # R[i,s,j,t] = K[anti j, t, anti i, s]
    R = K[anti][:, :, anti].transpose(2, 3, 0, 1)
    R = R * c[None, :, None, None] * c[None, None, None, :]
    scale = np.abs(K).max()
    if scale == 0:
        return 0.0
    return float(np.abs(K - R).max() / scale)


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def write_matrix(M, path, scenario=None):
    """Binary container: magic, u32 header length, UTF-8 JSON header, payload.

    The payload holds row-major little-endian ``(real, imag)`` float64 pairs.
    """
    header = {
        "rows": M.matrix.shape[0],
        "cols": M.matrix.shape[1],
        "dtype": "<c16",
        "meta": M.meta,
    }
    if scenario is not None:
        header["scenario"] = scenario
    blob = json.dumps(header, sort_keys=True, default=_json_default).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(M.matrix, dtype="<c16").tobytes())


def read_matrix(path):
    """Inverse of :func:`write_matrix`; returns ``(header, matrix)``."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError("not a far field matrix container")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n).decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype="<c16")
    rows, cols = header["rows"], header["cols"]
    if data.size != rows * cols:
        raise ValueError("payload size does not match header")
    return header, data.reshape(rows, cols).copy()
