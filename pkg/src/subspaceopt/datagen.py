"""Reproducible generators for the two robust-recovery data models and the
ground-truth subspace.

Randomness is derived from the config seed through per-purpose seed
sequences: spawn key (0,) drives the ground-truth projection and spawn key
(1, i) drives sample i.  Sample streams are therefore independent of
generation order, so parallel generation reproduces serial output exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fantope import ProjectionMatrix
from .objectives import SampleSet
from .spectral import qr_orthonormalize, sym_eig

__all__ = [
    "ModelConfig",
    "Instance",
    "random_projection",
    "random_fantope",
    "gen_spiked",
    "gen_corrupted",
    "generate_instance",
    "pca_projection",
    "recovery_error",
]

MODELS = ("spiked", "corrupted")


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions, corruption probability, model name, and seed."""

    n: int
    k: int
    m: int
    p: float
    model: str
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise ValueError(f"k must satisfy 1 <= k < n, got k={self.k}, n={self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 < self.p <= 0.5:
            raise ValueError(f"p must be in (0,0.5], got {self.p}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")

    def to_text(self) -> str:
        return "".join(
            f"{key}={getattr(self, key)}\n"
            for key in ("model", "n", "k", "m", "p", "seed")
        )

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
        return cls(n=int(kv["n"]), k=int(kv["k"]), m=int(kv["m"]),
                   p=float(kv["p"]), model=kv["model"], seed=int(kv["seed"]))


@dataclass(frozen=True)
class Instance:
    """A generated problem: ground-truth projection, samples, and config."""

    truth: ProjectionMatrix
    data: SampleSet
    config: ModelConfig

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "config.txt").write_text(self.config.to_text())
        self.data.to_csv(d / "samples.csv")
        np.savetxt(d / "truth.csv", self.truth.frame, fmt="%.17g", delimiter=",")

    @classmethod
    def load(cls, directory) -> "Instance":
        d = Path(directory)
        config = ModelConfig.from_text((d / "config.txt").read_text())
        data = SampleSet.from_csv(d / "samples.csv")
        frame = np.loadtxt(d / "truth.csv", delimiter=",", ndmin=2)
        return cls(truth=ProjectionMatrix(frame), data=data, config=config)


def _truth_rng(seed: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))


def _sample_rng(seed: int, index: int):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(1, index))
    )


def random_projection(n: int, k: int, rng) -> ProjectionMatrix:
    """Haar-distributed rank-k projection: QR of a standard Gaussian n-by-k
    matrix (the sign convention on R makes Q Haar on the frame manifold)."""
    while True:
        Z = rng.standard_normal((n, k))
        try:
            Q, _ = qr_orthonormalize(Z)
        except Exception:
            continue  # measure-zero degenerate draw; redraw
        return ProjectionMatrix(Q)


def random_fantope(n: int, k: int, rng, n_mix: int = 3) -> np.ndarray:
    """Random point of the convex hull: a Dirichlet-weighted mixture of
    ``n_mix`` independent random rank-k projections."""
    parts = [random_projection(n, k, rng).matrix for _ in range(n_mix)]
    w = rng.dirichlet(np.ones(n_mix))
    return sum(wi * Pi for wi, Pi in zip(w, parts))


def _unit_vector(rng, n: int) -> np.ndarray:
    while True:
        z = rng.standard_normal(n)
        norm = np.linalg.norm(z)
        if norm > 1e-12:
            return z / norm


def gen_spiked(config: ModelConfig) -> Instance:
    """Spiked model: with probability 1-p the sample is the normalized
    projection P z / ||P z|| of a uniform unit vector z, otherwise the raw
    unit vector z itself.  All samples have unit norm.

    Per-sample draw order (fixed for reproducibility): unit vector z first,
    then the corruption coin.
    """
    truth = random_projection(config.n, config.k, _truth_rng(config.seed))
    P = truth.matrix
    rows = np.empty((config.m, config.n))
    for i in range(config.m):
        rng = _sample_rng(config.seed, i)
        while True:
            z = _unit_vector(rng, config.n)
            pz = P @ z
            pz_norm = np.linalg.norm(pz)
            if pz_norm > 1e-12:
                break
        if rng.random() < config.p:
            rows[i] = z
        else:
            rows[i] = pz / pz_norm
    return Instance(truth=truth, data=SampleSet(rows), config=config)


def gen_corrupted(config: ModelConfig) -> Instance:
    """Corrupted-entries model: every sample is P z / ||P z||; then with
    probability p one uniformly chosen coordinate is overwritten with -1 or
    +1 (fair coin).  The overwrite is unconditional once the coin fires.

    Per-sample draw order: unit vector z, corruption coin, coordinate
    index, sign coin.
    """
    truth = random_projection(config.n, config.k, _truth_rng(config.seed))
    P = truth.matrix
    rows = np.empty((config.m, config.n))
    for i in range(config.m):
        rng = _sample_rng(config.seed, i)
        while True:
            z = _unit_vector(rng, config.n)
            pz = P @ z
            pz_norm = np.linalg.norm(pz)
            if pz_norm > 1e-12:
                break
        q = pz / pz_norm
        if rng.random() < config.p:
            j = int(rng.integers(config.n))
            q = q.copy()
            q[j] = -1.0 if rng.random() < 0.5 else 1.0
        rows[i] = q
    return Instance(truth=truth, data=SampleSet(rows), config=config)


def generate_instance(config: ModelConfig) -> Instance:
    """Dispatch on ``config.model``."""
    if config.model == "spiked":
        return gen_spiked(config)
    return gen_corrupted(config)


def pca_projection(data: SampleSet, k: int) -> ProjectionMatrix:
    """Classical warm start: projector onto the top-k eigenspace of the
    sample second moment sum_i q_i q_i^T."""
    C = data.points.T @ data.points
    dec = sym_eig(C)
    return ProjectionMatrix(dec.eigenvectors[:, :k].copy())


def recovery_error(X, truth) -> float:
    """Frobenius distance of a point to the ground-truth projection."""
    Xm = X.matrix if isinstance(X, ProjectionMatrix) else np.asarray(X, float)
    Pm = truth.matrix if isinstance(truth, ProjectionMatrix) else np.asarray(truth, float)
    return float(np.linalg.norm(Xm - Pm))
