"""Dense complex linear-algebra kernels with fixed numerical conventions.

All routines operate on plain ``numpy`` arrays. Hermitian matrices are
``(n, n)`` complex arrays with ``A == A.conj().T`` up to a small absolute
tolerance; factorizations follow the sign/phase conventions required by the
beamformer-recovery identities (nonnegative real diagonals on triangular
factors, ascending eigenvalues).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-12


class LinalgError(Exception):
    """Base class for numerical failures in this module."""


class EigenDecompositionError(LinalgError):
    """Eigendecomposition failed to converge or verify."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IndefiniteMatrixError(LinalgError):
    """Matrix has a negative eigenvalue beyond the PSD tolerance."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


@dataclass
class EigenDecomposition:
    """Eigenpairs of a Hermitian matrix, eigenvalues sorted ascending."""

    eigenvalues: np.ndarray   # (n,) real, ascending
    eigenvectors: np.ndarray  # (n, n) complex, unitary, columns match eigenvalues


def require_hermitian(A, atol=HERMITIAN_ATOL):
    """Validate that ``A`` is square and Hermitian within ``atol`` (absolute)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    dev = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    if dev > 2 * atol:
        raise ValueError(f"matrix is not Hermitian: max |A - A^H| = {dev:.3e}")
    return np.asarray(A, dtype=complex)


def hermitian_eig(A):
    """Eigendecomposition of a Hermitian matrix.

    Returns an :class:`EigenDecomposition` with eigenvalues ascending and a
    unitary eigenvector matrix, verified so that ``A = U diag(w) U^H`` within
    ``1e-9 * max(1, ||A||_F)``.
    """
    A = require_hermitian(A)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(f"eigendecomposition did not converge: {exc}") from exc
    scale = max(1.0, np.linalg.norm(A))
    residual = np.linalg.norm((U * w) @ U.conj().T - A)
    if residual > 1e-9 * scale:
        raise EigenDecompositionError(
            f"eigendecomposition residual {residual:.3e} exceeds tolerance", residual=residual
        )
    return EigenDecomposition(eigenvalues=w, eigenvectors=U)


def _clipped_psd_eigenvalues(A, context):
    """Eigenpairs of ``A`` with tolerated negative eigenvalues clipped to zero."""
    dec = hermitian_eig(A)
    w = dec.eigenvalues
    tol = 1e-9 * max(1.0, np.linalg.norm(A))
    if w[0] < -tol:
        raise IndefiniteMatrixError(
            f"{context}: matrix is indefinite, most negative eigenvalue {w[0]:.6e}",
            min_eigenvalue=w[0],
        )
    return np.maximum(w, 0.0), dec.eigenvectors


def hermitian_sqrt(A):
    """Hermitian PSD square root ``B`` with ``B @ B = A``.

    Tiny negative eigenvalues (within ``1e-9 * ||A||_F``) are clipped to zero;
    anything more negative raises :class:`IndefiniteMatrixError`.
    """
    w, U = _clipped_psd_eigenvalues(A, "hermitian_sqrt")
    B = (U * np.sqrt(w)) @ U.conj().T
    return 0.5 * (B + B.conj().T)


def psd_factor(R):
    """Factor a PSD matrix as ``R = D @ D^H``.

    Uses the lower-triangular Cholesky factor when ``R`` is positive definite
    and falls back to the Hermitian square root for semidefinite inputs
    (either factor satisfies the recovery identities downstream).
    """
    R = require_hermitian(R)
    try:
        return np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        return hermitian_sqrt(R)


def qr_full(B):
    """Full QR factorization ``B = Q @ T`` with nonnegative real diag(T).

    ``B`` is ``(n, m)`` with ``n >= m``; ``Q`` is ``(n, n)`` unitary and ``T``
    is ``(n, m)`` upper triangular. The diagonal of ``T`` is made real and
    nonnegative by absorbing phases into ``Q`` — the uniqueness convention
    that makes the two triangular factors of a shared Gram matrix coincide.
    """
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {B.shape}")
    n, m = B.shape
    if n < m:
        raise ValueError(f"qr_full requires n >= m, got shape {B.shape}")
    Q, T = np.linalg.qr(B, mode="complete")
    d = np.diagonal(T).copy()
    phases = np.ones(n, dtype=complex)
    nz = np.abs(d) > 0
    phases[:m][nz] = d[nz] / np.abs(d[nz])
    Q = Q * phases[np.newaxis, :]
    T = phases.conj()[:, np.newaxis] * T
    # zero the numerically-real imaginary residue on the fixed diagonal
    idx = np.arange(m)
    T[idx, idx] = T[idx, idx].real
    return Q, T


def project_psd(A):
    """Nearest (Frobenius) PSD matrix: clip negative eigenvalues to zero."""
    A = require_hermitian(A)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(f"eigendecomposition did not converge: {exc}") from exc
    if w[0] >= 0:
        return A
    P = (U * np.maximum(w, 0.0)) @ U.conj().T
    return 0.5 * (P + P.conj().T)
