"""Modified electromagnetic transmission eigenvalues of a ball.

Submodules
----------
specfun    spherical Bessel/Hankel functions and vector spherical harmonics
linalg     LU, Jacobi SVD and Tikhonov regularization
modal      separation-of-variables solvers (physical and auxiliary problems)
spectrum   determinant functions and exact eigenvalues
operators  direction grids and far field matrices
lsm        linear sampling method indicator sweeps
cli        command line front end (``python -m modtev``)
"""

from . import linalg, lsm, modal, operators, specfun, spectrum
from .modal import MediumParams, PlaneWave
from .operators import direction_grid
from .spectrum import eigenvalues

__version__ = "0.1.0"

__all__ = [
    "specfun",
    "linalg",
    "modal",
    "spectrum",
    "operators",
    "lsm",
    "MediumParams",
    "PlaneWave",
    "direction_grid",
    "eigenvalues",
]
