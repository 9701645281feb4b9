"""Convex smooth matrix losses: two Huber-based robust subspace-recovery
losses, a quadratic test objective with a closed-form minimizer, and
smoothness/gradient-bound estimation.

Every loss returns (value, gradient) in one pass over the samples; the
gradient is constructed symmetric exactly (as B + B.T), never symmetrized
after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import symmetrize

__all__ = [
    "HuberParams",
    "SampleSet",
    "ObjectiveMetadata",
    "huber",
    "huber_deriv",
    "spiked_loss",
    "corrupted_loss",
    "quadratic_loss",
    "empirical_lambda",
    "estimate_metadata",
    "QuadraticLoss",
    "SpikedHuberLoss",
    "CorruptedHuberLoss",
]


@dataclass(frozen=True)
class HuberParams:
    """Huber knee ``gamma`` > 0 and shrink multiplier ``shrink`` in (0, 1]."""

    gamma: float = 0.1
    shrink: float = 0.9

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0 < self.shrink <= 1:
            raise ValueError(f"shrink must be in (0, 1], got {self.shrink}")


@dataclass(frozen=True)
class SampleSet:
    """m samples in R^n stored as rows of ``points``; immutable after
    construction."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-d (m, n), got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path):
        header = ",".join(f"q_{j + 1}" for j in range(self.n))
        np.savetxt(path, self.points, fmt="%.17g", delimiter=",",
                   header=header, comments="")

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(points=pts)


@dataclass(frozen=True)
class ObjectiveMetadata:
    """Smoothness constant ``beta`` and spectral-norm gradient bound
    ``g_bound`` over the feasible set; ``source`` records how they were
    obtained ({analytic, user-supplied, estimated})."""

    beta: float
    g_bound: float
    source: str = "user-supplied"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.g_bound > 0:
            raise ValueError(f"g_bound must be > 0, got {self.g_bound}")


def huber(x, gamma: float):
    """Piecewise Huber penalty: x^2/2 inside [-gamma, gamma], else
    gamma * (|x| - gamma/2).  Continuously differentiable at the knee."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.where(ax <= gamma, 0.5 * x * x, gamma * (ax - 0.5 * gamma))
    return out if out.ndim else float(out)


def huber_deriv(x, gamma: float):
    """Derivative of the Huber penalty: x inside the knee, gamma*sign(x)
    outside."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= gamma, x, gamma * np.sign(x))
    return out if out.ndim else float(out)


def spiked_loss(X, data: SampleSet, params: HuberParams):
    """Sum over samples of Huber(||q - a X q||).

    With residuals r_i = q_i - a X q_i, rho_i = ||r_i|| and weights w_i = 1
    for rho_i <= gamma, gamma / rho_i otherwise, the gradient is
    -(a/2) * sum_i w_i (r_i q_i^T + q_i r_i^T).  The zero-residual sample
    takes w_i = 1 (the quadratic branch's smooth limit).
    """
    X = np.asarray(X, dtype=float)
    P = data.points
    a, gamma = params.shrink, params.gamma
    R = P - a * (P @ X)           # rows are residuals r_i (X symmetric)
    rho = np.linalg.norm(R, axis=1)
    value = float(np.sum(huber(rho, gamma)))
    w = np.where(rho <= gamma, 1.0, gamma / np.maximum(rho, 1e-300))
    B = (w[:, None] * R).T @ P    # sum_i w_i r_i q_i^T
    grad = -0.5 * a * (B + B.T)
    return value, grad


def corrupted_loss(X, data: SampleSet, params: HuberParams):
    """Sum over samples and coordinates of Huber([q]_j - [a X q]_j).

    The gradient is -(a/2) * sum_i (h_i q_i^T + q_i h_i^T) with h_i the
    elementwise Huber derivative of the residual r_i = q_i - a X q_i.
    """
    X = np.asarray(X, dtype=float)
    P = data.points
    a, gamma = params.shrink, params.gamma
    R = P - a * (P @ X)
    value = float(np.sum(huber(R, gamma)))
    H = huber_deriv(R, gamma)
    B = H.T @ P                   # sum_i h_i q_i^T
    grad = -0.5 * a * (B + B.T)
    return value, grad


def quadratic_loss(X, M):
    """f(X) = ||X - M||_F^2 / 2 with gradient X - M; beta = 1.

    The minimizer over the trace-k spectral box is the Fantope projection
    of M, which makes this the closed-form oracle objective for solvers.
    """
    X = np.asarray(X, dtype=float)
    M = np.asarray(M, dtype=float)
    D = X - M
    return 0.5 * float(np.sum(D * D)), D


def empirical_lambda(data: SampleSet) -> float:
    """Largest eigenvalue of the unnormalized sample second moment
    sum_i q_i q_i^T."""
    C = data.points.T @ data.points
    return float(np.linalg.eigvalsh(C)[-1])


def _random_fantope_points(n: int, k: int, count: int, rng) -> list:
    # convex mixtures of random projections; enough spread for a sup probe
    from .datagen import random_projection

    points = []
    for _ in range(count):
        parts = [random_projection(n, k, rng).matrix for _ in range(3)]
        w = rng.dirichlet(np.ones(3))
        points.append(sum(wi * Pi for wi, Pi in zip(w, parts)))
    return points


def estimate_metadata(objective, k: int, n_probe: int = 32, rng=None,
                      safety: float = 2.0) -> ObjectiveMetadata:
    """Estimate smoothness and gradient-bound constants for an objective.

    For the Huber losses beta is the analytic bound
    shrink^2 * lambda_1(sum q q^T) (the Huber derivative is 1-Lipschitz and
    the per-sample maps are linear).  The gradient bound starts from the
    analytic spectral-norm bound and is refined by probing ``n_probe``
    random feasible points and taking ``safety`` times the largest observed
    gradient norm.  For the quadratic objective both constants are exact.

    For unknown objectives both constants are probed numerically.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    if isinstance(objective, QuadraticLoss):
        return objective.analytic_metadata()

    data = getattr(objective, "data", None)
    if isinstance(objective, (SpikedHuberLoss, CorruptedHuberLoss)):
        a, gamma = objective.params.shrink, objective.params.gamma
        lam = empirical_lambda(data)
        beta = a * a * lam
        norms = np.linalg.norm(data.points, axis=1)
        g_analytic = a * gamma * float(norms.sum())
        if isinstance(objective, CorruptedHuberLoss):
            g_analytic *= np.sqrt(data.n)
        n = data.n
    else:
        beta = None
        g_analytic = np.inf
        n = _probe_dim(objective)

    probes = _random_fantope_points(n, k, n_probe, rng)
    grads = [objective.value_and_grad(X)[1] for X in probes]
    g_emp = max(float(np.linalg.norm(g, 2)) for g in grads)

    if beta is None:
        # pairwise gradient-difference ratios as a smoothness probe
        ratios = []
        for i in range(len(probes) - 1):
            dX = np.linalg.norm(probes[i] - probes[i + 1])
            if dX > 1e-12:
                ratios.append(float(np.linalg.norm(grads[i] - grads[i + 1])) / dX)
        beta = safety * max(ratios) if ratios else 1.0

    g_bound = min(g_analytic, safety * g_emp)
    if not g_bound > 0:
        g_bound = max(safety * g_emp, 1e-12)
    return ObjectiveMetadata(beta=float(beta), g_bound=float(g_bound),
                             source="estimated")


def _probe_dim(objective) -> int:
    n = getattr(objective, "dim", None)
    if n is None:
        raise TypeError(
            "objective exposes neither sample data nor a 'dim' attribute; "
            "cannot size the probe points"
        )
    return int(n)


class QuadraticLoss:
    """Distance-to-target objective ||X - M||_F^2 / 2."""

    def __init__(self, M):
        self.M = symmetrize(M)
        self.data = None
        self.dim = self.M.shape[0]
        self._meta: dict[int, ObjectiveMetadata] = {}

    def value_and_grad(self, X):
        return quadratic_loss(X, self.M)

    def analytic_metadata(self) -> ObjectiveMetadata:
        # sup ||X - M||_2 over the feasible set is at most 1 + ||M||_2
        g = 1.0 + float(np.linalg.norm(self.M, 2))
        return ObjectiveMetadata(beta=1.0, g_bound=g, source="analytic")

    def metadata(self, k: int | None = None) -> ObjectiveMetadata:
        return self.analytic_metadata()


class _HuberLossBase:
    loss_fn = None

    def __init__(self, data: SampleSet, params: HuberParams | None = None):
        self.data = data
        self.params = params if params is not None else HuberParams()
        self.dim = data.n
        self._meta: dict[int, ObjectiveMetadata] = {}

    def value_and_grad(self, X):
        return type(self).loss_fn(X, self.data, self.params)

    def metadata(self, k: int) -> ObjectiveMetadata:
        if k not in self._meta:
            self._meta[k] = estimate_metadata(self, k)
        return self._meta[k]


class SpikedHuberLoss(_HuberLossBase):
    """Robust recovery loss sum_i Huber(||q_i - a X q_i||)."""

    loss_fn = staticmethod(spiked_loss)


class CorruptedHuberLoss(_HuberLossBase):
    """Robust recovery loss sum_{i,j} Huber([q_i]_j - [a X q_i]_j)."""

    loss_fn = staticmethod(corrupted_loss)
