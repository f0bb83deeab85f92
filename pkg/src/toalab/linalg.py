"""Dense linear algebra on small Hilbert spaces.

Matrix functions (exp, sqrt) go through eigendecomposition of hermitian or
positive inputs: the matrices here are small, so exactness wins over speed.
"""

import numpy as np

from .errors import NumericalError, ValidationError

HERMITIAN_TOL = 1e-10


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def max_abs(m) -> float:
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def require_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    a = as_complex_matrix(m, name)
    defect = max_abs(a - a.conj().T)
    if defect > tol:
        raise ValidationError(f"{name} is not hermitian: max |A - A^†| = {defect:.3e} > {tol:.1e}")
    return a


def require_projector(m: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "projector") -> np.ndarray:
    a = require_hermitian(m, tol, name)
    defect = max_abs(a @ a - a)
    if defect > tol:
        raise ValidationError(f"{name} is not idempotent: max |P^2 - P| = {defect:.3e} > {tol:.1e}")
    return a


def require_positive(m: np.ndarray, tol: float = 1e-12, name: str = "operator") -> np.ndarray:
    a = require_hermitian(m, HERMITIAN_TOL, name)
    low = float(np.linalg.eigvalsh(a)[0])
    if low < -tol:
        raise ValidationError(f"{name} has negative eigenvalue {low:.3e} below -{tol:.1e}")
    return a


def require_density(m: np.ndarray, tol: float = 1e-12, name: str = "density matrix") -> np.ndarray:
    a = require_positive(m, tol, name)
    tr = complex(np.trace(a))
    if abs(tr - 1.0) > HERMITIAN_TOL:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1")
    return a


def hermitize(m: np.ndarray) -> np.ndarray:
    """Symmetrize away roundoff on a matrix that is hermitian by construction."""
    return 0.5 * (m + m.conj().T)


def expm_hermitian(m: np.ndarray, scale: complex) -> np.ndarray:
    """exp(scale * m) for hermitian m, via eigendecomposition."""
    w, v = np.linalg.eigh(m)
    return (v * np.exp(scale * w)) @ v.conj().T


def expm_from_eig(w: np.ndarray, v: np.ndarray, scale: complex) -> np.ndarray:
    """exp(scale * m) from a precomputed eigendecomposition of hermitian m."""
    return (v * np.exp(scale * w)) @ v.conj().T


def sqrtm_positive(m: np.ndarray, tol: float = 1e-12, name: str = "operator") -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in [-tol, 0) are treated as roundoff and clipped; anything
    lower is an error.
    """
    a = require_hermitian(m, HERMITIAN_TOL, name)
    w, v = np.linalg.eigh(a)
    if w[0] < -tol:
        raise NumericalError(f"{name} has negative eigenvalue {w[0]:.3e} below -{tol:.1e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def matrix_power_int(m: np.ndarray, n: int) -> np.ndarray:
    """m**n for integer n >= 0 by binary exponentiation."""
    if n < 0:
        raise ValidationError("negative matrix powers are not supported")
    result = np.eye(m.shape[0], dtype=complex)
    base = m
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitize(as_complex_matrix(m)))[0])
