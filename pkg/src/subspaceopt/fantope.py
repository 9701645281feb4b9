"""Exact projections and linear oracles for the set of rank-k projection
matrices and for its convex hull (matrices with eigenvalues in [0, 1] and
trace k), including the water-filling threshold and spectral rank tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import SpectralDecomp, sym_eig, symmetrize

__all__ = [
    "RANK_EPS",
    "ProjectionMatrix",
    "WaterfillResult",
    "waterfill_threshold",
    "fantope_project",
    "projection_rank_at_most",
    "pnk_project",
    "fantope_lmo",
]

# eigenvalues above this count toward the rank of a projected point
RANK_EPS = 1e-9


@dataclass
class ProjectionMatrix:
    """Rank-k orthogonal projection held as its n-by-k orthonormal frame.

    ``unique`` is False when the defining eigenvalue problem was degenerate
    (tie at position k), in which case this is one valid choice among many.
    """

    frame: np.ndarray
    unique: bool = True

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    @cached_property
    def matrix(self) -> np.ndarray:
        """The n-by-n projection Q @ Q.T, materialized on first access."""
        return self.frame @ self.frame.T


@dataclass(frozen=True)
class WaterfillResult:
    """Water-filling solution: threshold theta, the clipped spectrum
    min(max(gamma_i - theta, 0), 1), and the count of entries above
    RANK_EPS."""

    theta: float
    clipped: np.ndarray
    rank: int


def waterfill_threshold(eigenvalues, k: int, sum_tol: float = 1e-12,
                        max_bisect: int = 200) -> WaterfillResult:
    """Solve sum_i min(max(gamma_i - theta, 0), 1) == k for theta.

    The left-hand side is continuous and non-increasing in theta, so
    bisection over [gamma_min - 1, gamma_max] converges; it runs until the
    clipped sum is within ``sum_tol`` of k (at most ``max_bisect`` halvings).
    """
    gam = np.asarray(eigenvalues, dtype=float)
    n = gam.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    lo = float(gam.min()) - 1.0   # clipped sum = n >= k
    hi = float(gam.max())         # clipped sum = 0 <= k
    theta = lo
    clipped = np.clip(gam - theta, 0.0, 1.0)
    for _ in range(max_bisect):
        theta = 0.5 * (lo + hi)
        clipped = np.clip(gam - theta, 0.0, 1.0)
        s = float(clipped.sum())
        if abs(s - k) <= sum_tol:
            break
        if s >= k:
            lo = theta
        else:
            hi = theta
    rank = int(np.count_nonzero(clipped > RANK_EPS))
    return WaterfillResult(theta=float(theta), clipped=clipped, rank=rank)


def fantope_project(X, k: int):
    """Euclidean projection onto {X : 0 <= X <= I, Tr(X) = k}.

    Eigenvectors are kept and the spectrum is replaced by its water-filled
    clip; the threshold solves the trace constraint.

    Returns
    -------
    (projected, WaterfillResult)
        ``projected`` is the symmetric n-by-n projected point.
    """
    dec = sym_eig(X)
    wf = waterfill_threshold(dec.eigenvalues, k)
    projected = symmetrize((dec.eigenvectors * wf.clipped) @ dec.eigenvectors.T)
    return projected, wf


def projection_rank_at_most(decomp, k: int, r: int) -> bool:
    """Spectral test: the projection of X onto the trace-k spectral box has
    rank <= r iff sum_{i<=r} min(gamma_i - gamma_{r+1}, 1) >= k, where gamma
    is the non-increasing spectrum of X.

    Accepts a SpectralDecomp or a non-increasing eigenvalue vector.
    """
    if isinstance(decomp, SpectralDecomp):
        gam = decomp.eigenvalues
    else:
        gam = np.asarray(decomp, dtype=float)
    n = gam.shape[0]
    if not k <= r <= n - 1:
        raise ValueError(f"need k <= r <= n-1, got k={k}, r={r}, n={n}")
    return bool(np.minimum(gam[:r] - gam[r], 1.0).sum() >= k)


def pnk_project(X, k: int, tie_tol: float = 1e-9) -> ProjectionMatrix:
    """Projection of X onto the set of rank-k projection matrices: the
    projector onto the span of the top-k eigenvectors.

    Equivalently the maximizer of <P, X> over rank-k projections (Ky Fan).
    When the eigenvalue gap at position k is below ``tie_tol`` the maximizer
    is not unique; one valid choice is returned with ``unique=False``.
    """
    dec = sym_eig(X)
    n = dec.dim
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    unique = k == n or (dec.eigenvalues[k - 1] - dec.eigenvalues[k]) > tie_tol
    return ProjectionMatrix(frame=dec.eigenvectors[:, :k].copy(), unique=unique)


def fantope_lmo(G, k: int, tie_tol: float = 1e-9) -> ProjectionMatrix:
    """Linear minimization oracle: argmin <V, G> over rank-k projections,
    i.e. the projector onto the k smallest eigenvectors of G."""
    return pnk_project(-np.asarray(G, dtype=float), k, tie_tol=tie_tol)
