"""Dense symmetric eigendecomposition, QR orthonormalization, and the
classical orthogonal (subspace) iteration.

Every other module builds on these three kernels.  All operations are pure
functions of their inputs and safe to call concurrently on distinct arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateFrameError",
    "SpectralDecomp",
    "symmetrize",
    "sym_eig",
    "qr_orthonormalize",
    "ensure_orthonormal",
    "orthogonal_iteration",
    "subspace_change",
]

# relative singular-value cutoff below which a frame counts as rank deficient
RANK_TOL = 1e-12


class DegenerateFrameError(RuntimeError):
    """A matrix expected to carry k independent columns is numerically rank
    deficient (smallest singular value <= RANK_TOL times the largest)."""


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues non-increasing.

    ``eigenvectors[:, i]`` is the unit eigenvector paired with
    ``eigenvalues[i]``.  Ties keep the backend's stable output order, so
    repeated calls on identical input give identical results.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def symmetrize(A):
    """Return (A + A.T) / 2 as a float array."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def sym_eig(A) -> SpectralDecomp:
    """Full eigendecomposition of a symmetric matrix.

    The input is symmetrized as (A + A.T) / 2 before factorizing, so mildly
    asymmetric inputs are accepted.  Eigenvalues are returned sorted
    non-increasing; ties are broken by the original (ascending) backend
    order, which makes the output deterministic.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric matrix with finite entries.

    Returns
    -------
    SpectralDecomp

    Raises
    ------
    ValueError
        If the input is not square or contains non-finite entries.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    vals, vecs = np.linalg.eigh(symmetrize(A))
    order = np.argsort(-vals, kind="stable")
    return SpectralDecomp(vals[order], vecs[:, order])


def qr_orthonormalize(Z, rank_tol: float = RANK_TOL):
    """Reduced QR factorization with a deterministic sign convention.

    Column signs are flipped so the diagonal of R is non-negative, which
    makes the factorization reproducible across runs.

    Parameters
    ----------
    Z : (n, k) array_like
        Matrix of numerical rank k.

    Returns
    -------
    Q : (n, k) ndarray
        Orthonormal columns, ``||Q.T @ Q - I||_F <= 1e-12 * k``.
    R : (k, k) ndarray
        Upper triangular with non-negative diagonal; ``Q @ R == Z`` to
        within ``1e-12 * ||Z||_F``.

    Raises
    ------
    DegenerateFrameError
        If sigma_min(Z) <= rank_tol * sigma_max(Z).
    """
    Z = np.asarray(Z, dtype=float)
    if not np.all(np.isfinite(Z)):
        raise ValueError("matrix contains non-finite entries")
    Q, R = np.linalg.qr(Z)
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q = Q * signs
    R = signs[:, None] * R
    # singular values of Z equal those of the small k-by-k factor R
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise DegenerateFrameError(
            f"frame is numerically rank deficient (sigma_min/sigma_max = "
            f"{sv[-1] / sv[0] if sv[0] > 0 else 0.0:.3e})"
        )
    return Q, R


def ensure_orthonormal(Q, tol: float = 1e-12):
    """Return Q unchanged if its columns are orthonormal to within
    ``tol * k`` in Frobenius norm, otherwise re-orthonormalize by QR."""
    Q = np.asarray(Q, dtype=float)
    k = Q.shape[1]
    gram_err = np.linalg.norm(Q.T @ Q - np.eye(k))
    if gram_err <= tol * k:
        return Q
    return qr_orthonormalize(Q)[0]


def orthogonal_iteration(A, k: int, start, iters: int = 1000, tol: float = 1e-12):
    """Approximate the top-k eigenspace of a PSD matrix by repeated
    multiply-and-QR sweeps.

    The caller is responsible for shifting A to be PSD if needed; no shift
    is applied here.  Iteration stops early once the subspace change
    ``||Q_{s+1} Q_{s+1}.T - Q_s Q_s.T||_F`` drops to ``tol``.  The error of
    the returned subspace is controlled by ``tol`` and the eigenvalue ratio
    at position k; no accuracy guarantee beyond that is claimed.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric positive semidefinite matrix.
    k : int
        Subspace dimension.
    start : (n, k) array_like
        Initial frame; orthonormalized if it has drifted.
    iters : int
        Maximum number of sweeps.
    tol : float
        Subspace-change stopping threshold.

    Returns
    -------
    (n, k) ndarray with orthonormal columns.
    """
    A = np.asarray(A, dtype=float)
    Q = ensure_orthonormal(np.asarray(start, dtype=float))
    if Q.shape != (A.shape[0], k):
        raise ValueError(f"start frame has shape {Q.shape}, expected {(A.shape[0], k)}")
    for _ in range(iters):
        Q_next, _ = qr_orthonormalize(A @ Q)
        change = subspace_change(Q, Q_next)
        Q = Q_next
        if change <= tol:
            break
    return Q


def subspace_change(Q, Q_next) -> float:
    """||Q' Q'.T - Q Q.T||_F computed as sqrt(2) times the residual of Q'
    against span(Q); the residual form resolves tiny changes that the
    trace identity 2k - 2||Q.T Q'||_F^2 loses to cancellation."""
    R = Q_next - Q @ (Q.T @ Q_next)
    return float(np.sqrt(2.0) * np.linalg.norm(R))
