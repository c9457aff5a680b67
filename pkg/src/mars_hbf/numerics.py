"""Small dense complex linear-algebra kernel.

Matrices are plain 2-D numpy arrays of dtype complex128.  Every function here
is pure and deterministic.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-9
EIG_FLOOR = 1e-12


class DimensionError(ValueError):
    """Raised when operand shapes do not agree."""


class GramMatrixError(ValueError):
    """Raised when a matrix that should be Hermitian PSD is not."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def hermitian(a) -> np.ndarray:
    return as_matrix(a).conj().T


def hadamard(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"elementwise product needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def _symmetrized(a) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise GramMatrixError("matrix is not Hermitian within tolerance")
    return 0.5 * (a + a.conj().T)


def log2_det_hermitian_psd(a) -> float:
    """log2 det(a) for a Hermitian positive (semi-)definite matrix.

    The matrix is symmetrized first and the eigenvalues are floored at
    ``EIG_FLOOR`` times the largest magnitude; anything at or below the floor
    means the determinant is not positive and the input is rejected.
    """
    sym = _symmetrized(a)
    if sym.shape[0] == 0:
        return 0.0
    eig = np.linalg.eigvalsh(sym)
    floor = EIG_FLOOR * max(float(np.max(np.abs(eig))), np.finfo(float).tiny)
    if eig[0] <= floor:
        raise GramMatrixError(
            f"determinant is not positive (smallest eigenvalue {eig[0]:.3e})")
    return float(np.sum(np.log2(eig)))


def pseudo_inverse(a, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse of a square matrix via SVD.

    Singular values below ``tol * s_max`` are treated as zero.  For a
    well-conditioned matrix this is the ordinary inverse.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    u, s, vh = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(a.conj().T)
    keep = s > tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv_s) @ u.conj().T


def psd_pinv_factor(a, tol: float = 1e-12) -> np.ndarray:
    """Return V with V V^H equal to the pseudo-inverse of Hermitian PSD ``a``.

    V has one column per retained eigenvalue, so ``V^H X V`` is the whitened
    form used when a log-det needs ``X a^+`` with Hermitian ``X``.
    """
    sym = _symmetrized(a)
    w, u = np.linalg.eigh(sym)
    top = float(np.max(np.abs(w))) if w.size else 0.0
    if top == 0.0:
        return np.zeros((sym.shape[0], 0), dtype=np.complex128)
    keep = w > tol * top
    return u[:, keep] / np.sqrt(w[keep])
