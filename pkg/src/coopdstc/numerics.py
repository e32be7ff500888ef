"""
Dense complex linear algebra kernels used by the receivers, the adaptive
code optimizers and the error-probability analysis.

All kernels work on complex128 arrays and raise from coopdstc.exceptions
instead of returning NaN-filled results.
"""
import typing as _t

import numpy as _np
import scipy.linalg as _linalg

import coopdstc.exceptions as _ex
import coopdstc.types as _types


HERMITIAN_TOL = 1e-10


class HermitianEig(_t.NamedTuple):
    eigenvalues: _types.RVector
    eigenvectors: _types.CMatrix


def as_cmatrix(m: _t.Any, name: str = 'matrix') -> _types.CMatrix:
    """Convert array-like input to a 2-D complex128 array."""
    arr = _np.asarray(m, dtype=_np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise _ex.DimensionError(f'{name} must be 2-D, got {arr.ndim}-D.')
    return arr


def hermitian_eig(m: _t.Any, tol: float = HERMITIAN_TOL) -> HermitianEig:
    """
    Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array-like
        n x n Hermitian matrix.
    tol : float
        Hermitian tolerance relative to the largest entry.

    Returns
    -------
    HermitianEig
        Real eigenvalues in descending order and the matching
        orthonormal eigenvector columns.

    Examples
    --------
    >>> hermitian_eig([[2, 0], [0, 3]]).eigenvalues
    array([3., 2.])
    """
    a = as_cmatrix(m)
    _ex.check_hermitian(a, tol)
    a = (a + a.conj().T) / 2
    try:
        values, vectors = _linalg.eigh(a)
    except (_linalg.LinAlgError, ValueError) as e:
        raise _ex.NumericalFailure(f'Hermitian eigen-decomposition failed: {e}') from e
    order = _np.argsort(values, kind='stable')[::-1]
    return HermitianEig(values[order].astype(_np.float64), vectors[:, order])


def frobenius_norm(m: _t.Any) -> float:
    """sqrt of the sum of squared entry moduli of any array."""
    return float(_np.linalg.norm(_np.ravel(_np.asarray(m, dtype=_np.complex128))))


def solve_hermitian_pd(a: _t.Any, b: _t.Any, tol: float = HERMITIAN_TOL) -> _np.ndarray:
    """
    Solve A x = b for Hermitian positive-definite A by Cholesky.

    Raises NumericalFailure when A is not numerically positive definite.
    """
    a = as_cmatrix(a)
    _ex.check_hermitian(a, tol)
    rhs = _np.asarray(b, dtype=_np.complex128)
    if rhs.shape[0] != a.shape[0]:
        raise _ex.DimensionError(f'right-hand side has {rhs.shape[0]} rows, matrix has {a.shape[0]}.')
    try:
        factor = _linalg.cho_factor((a + a.conj().T) / 2, lower=False)
    except _linalg.LinAlgError as e:
        raise _ex.NumericalFailure(f'matrix is not positive definite: {e}') from e
    return _linalg.cho_solve(factor, rhs)


def solve(a: _t.Any, b: _t.Any) -> _np.ndarray:
    """Solve a general square system, NumericalFailure when singular."""
    a = as_cmatrix(a)
    _ex.check_square(a)
    rhs = _np.asarray(b, dtype=_np.complex128)
    if rhs.shape[0] != a.shape[0]:
        raise _ex.DimensionError(f'right-hand side has {rhs.shape[0]} rows, matrix has {a.shape[0]}.')
    try:
        return _linalg.solve(a, rhs)
    except _linalg.LinAlgError as e:
        raise _ex.NumericalFailure(f'singular system: {e}') from e


def pseudo_inverse(m: _t.Any) -> _types.CMatrix:
    """Moore-Penrose pseudo-inverse. The zero matrix maps to zeros."""
    a = as_cmatrix(m)
    return _linalg.pinv(a)


def determinant(m: _t.Any) -> complex:
    """Determinant via LU factorization with partial pivoting."""
    a = as_cmatrix(m)
    _ex.check_square(a)
    return complex(_linalg.det(a))


def complex_normal(rng: _types.Rng, shape: _t.Union[int, _t.Tuple[int, ...]], variance: float = 1.0) -> _np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = _np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
