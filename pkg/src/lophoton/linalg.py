"""Dense complex linear algebra shared by the optics and tomography modules.

All matrices handled here are small (2x2 or 4x4) with infinity norm of
order one (unit-trace density matrices, unitary optical elements), so every
tolerance below is absolute.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-10
EIGENVALUE_CLAMP = 1e-10


class NotHermitian(ValueError):
    """Input matrix is not Hermitian within tolerance."""


class BadDimension(ValueError):
    """Input matrix has the wrong shape for the requested operation."""


class NegativeEigenvalue(ValueError):
    """Matrix has an eigenvalue more negative than the clamping tolerance."""


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D complex ndarray and check finiteness."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise BadDimension(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product of two complex matrices."""
    return np.kron(as_matrix(a), as_matrix(b))


def _check_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> None:
    dev = np.max(np.abs(m - m.conj().T))
    if dev > tol:
        raise NotHermitian(f"max |m - m^dag| = {dev:.3e} exceeds {tol:.1e}")


def hermitian_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues descending, eigenvector matrix V) with
    m = V diag(w) V^dag and V unitary.  Rejects non-Hermitian input rather
    than symmetrizing it, so upstream construction errors stay visible.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise BadDimension("matrix must be square")
    _check_hermitian(a)
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()


def partial_trace(rho, keep: str) -> np.ndarray:
    """Trace out one qubit of a 4x4 two-qubit operator.

    keep is "first" or "second"; basis order is (00, 01, 10, 11).
    """
    a = as_matrix(rho)
    if a.shape != (4, 4):
        raise BadDimension(f"expected 4x4, got {a.shape}")
    r = a.reshape(2, 2, 2, 2)
    if keep == "first":
        return np.trace(r, axis1=1, axis2=3)
    if keep == "second":
        return np.trace(r, axis1=0, axis2=2)
    raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")


def psd_sqrt(m, clamp: float = EIGENVALUE_CLAMP) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues within -clamp of zero are clamped to zero; anything more
    negative raises, since all callers construct PSD matrices and larger
    negativity indicates a bug upstream.
    """
    w, v = hermitian_eigen(m)
    if np.min(w) < -clamp:
        raise NegativeEigenvalue(f"eigenvalue {np.min(w):.3e} below -{clamp:.1e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T
