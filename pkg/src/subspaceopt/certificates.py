"""Optimality and well-posedness diagnostics: the gradient eigen-gap, a
constructive strict-complementarity dual certificate, KKT residuals, and a
quadratic-growth sampling probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import sym_eig, symmetrize

__all__ = [
    "GapReport",
    "DualCertificate",
    "GrowthReport",
    "NoCertificateError",
    "AlignmentError",
    "eigen_gap",
    "build_dual_certificate",
    "kkt_residual",
    "quadratic_growth_probe",
]

# gaps below this threshold are treated as round-off, not structure
GAP_TOL = 1e-9


class NoCertificateError(RuntimeError):
    """The gradient eigen-gap at the candidate point is zero to tolerance,
    so no strict-complementarity witness can be built."""


class AlignmentError(RuntimeError):
    """The candidate point does not span the bottom-k eigenvectors of its
    own gradient, so it is not a solved point."""


@dataclass(frozen=True)
class GapReport:
    """Eigen-gap diagnostics at a point X.

    ``gap`` is lambda_{n-k}(grad) - lambda_{n-k+1}(grad); ``r_star`` is the
    smallest r >= k at which the spectrum of -grad has a strict gap (n when
    none exists).  ``r_star == k`` exactly when ``gap`` clears the
    round-off threshold.
    """

    gap: float
    lambda_nk: float
    lambda_nk1: float
    r_star: int


@dataclass(frozen=True)
class DualCertificate:
    """PSD dual pair (z1, z2) and scalar multiplier s with
    grad f(X*) = z1 - z2 + s I, <z1, X*> = 0, <z2, I - X*> = 0."""

    z1: np.ndarray
    z2: np.ndarray
    s: float


@dataclass(frozen=True)
class GrowthReport:
    """Outcome of the quadratic-growth probe: the worst observed slack of
    f(X) - f(X*) - (delta/2) ||X - X*||_F^2 and the violation count."""

    worst_slack: float
    violations: int
    n_samples: int


def _as_matrix(point) -> np.ndarray:
    matrix = getattr(point, "matrix", None)
    if matrix is not None:
        return np.asarray(matrix, dtype=float)
    return symmetrize(point)


def eigen_gap(X, objective, k: int, tie_tol: float = GAP_TOL) -> GapReport:
    """Measure the gradient eigen-gap at X.

    Reports lambda_{n-k} - lambda_{n-k+1} of grad f(X) together with the
    smallest r >= k at which the spectrum of -grad f(X) has a gap above
    ``tie_tol``.
    """
    X = _as_matrix(X)
    _, grad = objective.value_and_grad(X)
    lam = sym_eig(grad).eigenvalues
    n = lam.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, n-1], got k={k}, n={n}")
    lam_nk = float(lam[n - k - 1])
    lam_nk1 = float(lam[n - k])
    mu = -lam[::-1]  # spectrum of -grad, non-increasing
    r = k
    while r < n and not mu[r - 1] - mu[r] > tie_tol:
        r += 1
    return GapReport(gap=lam_nk - lam_nk1, lambda_nk=lam_nk,
                     lambda_nk1=lam_nk1, r_star=int(r))


def build_dual_certificate(X_star, objective, gap_tol: float = GAP_TOL,
                           align_tol: float = 1e-4) -> DualCertificate:
    """Construct the strict-complementarity dual witness at a solved point.

    With grad f(X*) = sum_i lambda_i u_i u_i^T (non-increasing) and X*
    spanning eigenvectors n-k+1..n, the multiplier s is set to the midpoint
    of [lambda_{n-k+1}, lambda_{n-k}] and

        z1 = sum_{i <= n-k} (lambda_i - s) u_i u_i^T,
        z2 = sum_{i > n-k} (s - lambda_i) u_i u_i^T.

    Both are PSD with rank(z1) = n - k and rank(z2) = k, mutually
    orthogonal, and satisfy the stationarity identity exactly up to
    eigendecomposition error.  The midpoint choice maximizes the smaller of
    the two rank-certifying minimal eigenvalues.

    Raises
    ------
    NoCertificateError
        If the eigen-gap at X* is below ``gap_tol``.
    AlignmentError
        If X* is farther than ``align_tol`` from the bottom-k eigenspace
        projector of its own gradient.
    """
    X = _as_matrix(X_star)
    n = X.shape[0]
    k = int(round(float(np.trace(X))))
    _, grad = objective.value_and_grad(X)
    dec = sym_eig(grad)
    lam, U = dec.eigenvalues, dec.eigenvectors
    gap = float(lam[n - k - 1] - lam[n - k])
    if gap <= gap_tol:
        raise NoCertificateError(
            f"gradient eigen-gap {gap:.3e} is below tolerance {gap_tol:.1e}"
        )
    bottom = U[:, n - k:]
    mis = float(np.linalg.norm(X - bottom @ bottom.T))
    if mis > align_tol:
        raise AlignmentError(
            f"point is {mis:.3e} away from the bottom-{k} gradient "
            f"eigenspace (tolerance {align_tol:.1e})"
        )
    s = 0.5 * (float(lam[n - k - 1]) + float(lam[n - k]))
    top = U[:, :n - k]
    z1 = symmetrize((top * (lam[:n - k] - s)) @ top.T)
    z2 = symmetrize((bottom * (s - lam[n - k:])) @ bottom.T)
    return DualCertificate(z1=z1, z2=z2, s=s)


def kkt_residual(X, cert: DualCertificate, objective, k: int) -> float:
    """Worst violation among the first-order optimality conditions.

    Takes the max of: stationarity ||grad - z1 + z2 - s I||_F,
    complementarity |<z1, X>| and |<z2, I - X>|, dual feasibility
    (negative part of the smallest eigenvalue of each dual matrix), and
    primal feasibility (spectral-box and trace violations of X).
    """
    X = _as_matrix(X)
    n = X.shape[0]
    _, grad = objective.value_and_grad(X)
    eye = np.eye(n)
    stationarity = float(np.linalg.norm(grad - cert.z1 + cert.z2 - cert.s * eye))
    comp1 = abs(float(np.sum(cert.z1 * X)))
    comp2 = abs(float(np.sum(cert.z2 * (eye - X))))
    dual1 = max(0.0, -float(np.linalg.eigvalsh(cert.z1)[0]))
    dual2 = max(0.0, -float(np.linalg.eigvalsh(cert.z2)[0]))
    w = np.linalg.eigvalsh(X)
    primal = max(max(0.0, -float(w[0])), max(0.0, float(w[-1]) - 1.0),
                 abs(float(np.trace(X)) - k))
    return max(stationarity, comp1, comp2, dual1, dual2, primal)


def quadratic_growth_probe(X_star, objective, k: int, delta: float,
                           samples: int = 200, rng=None,
                           tol: float = 1e-8) -> GrowthReport:
    """Sample feasible points and check the growth inequality
    f(X) - f(X*) >= (delta/2) ||X - X*||_F^2 - tol.

    Points are drawn as convex mixtures (Dirichlet weights) of X* and three
    independent random rank-k projections.  A violation is reported, not
    raised: it falsifies either the measured delta or the optimality of the
    candidate point.
    """
    from .datagen import random_projection

    if rng is None:
        rng = np.random.default_rng(0)
    X_star = _as_matrix(X_star)
    n = X_star.shape[0]
    f_star = objective.value_and_grad(X_star)[0]
    worst = np.inf
    violations = 0
    for _ in range(samples):
        parts = [X_star] + [random_projection(n, k, rng).matrix
                            for _ in range(3)]
        w = rng.dirichlet(np.ones(len(parts)))
        X = sum(wi * Pi for wi, Pi in zip(w, parts))
        fx = objective.value_and_grad(X)[0]
        dist_sq = float(np.sum((X - X_star) ** 2))
        slack = (fx - f_star) - 0.5 * delta * dist_sq
        worst = min(worst, slack)
        if slack < -tol:
            violations += 1
    return GrowthReport(worst_slack=float(worst), violations=violations,
                        n_samples=samples)
