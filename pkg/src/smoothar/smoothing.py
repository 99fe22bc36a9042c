"""Noise distributions used to smooth the data, plus the scale heuristic.

All three families are symmetric, stationary and elementwise independent, so
log-densities depend on the componentwise difference only and the entropy and
second moment have closed forms. A zero scale is admitted as the degenerate
point mass (useful for zero-noise checks); it can be sampled from but has no
density or entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError

FAMILIES = ("gaussian", "laplace", "uniform")


@dataclass(frozen=True)
class SmoothingKernel:
    family: str
    scale: float  # std for gaussian, diversity for laplace, half-width for uniform
    dim: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContractError(f"unknown kernel family {self.family!r}")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise ContractError(f"kernel scale must be >= 0, got {self.scale}")
        if self.dim < 1:
            raise ContractError(f"kernel dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "scale", float(self.scale))


def kernel_sample(kernel: SmoothingKernel, x, rng: np.random.Generator) -> np.ndarray:
    """x plus i.i.d. per-dimension noise from the family."""
    x = np.asarray(x, dtype=np.float64)
    if kernel.scale == 0.0:
        return x.copy()
    if kernel.family == "gaussian":
        eps = rng.normal(0.0, kernel.scale, size=x.shape)
    elif kernel.family == "laplace":
        eps = rng.laplace(0.0, kernel.scale, size=x.shape)
    else:
        eps = rng.uniform(-kernel.scale, kernel.scale, size=x.shape)
    return x + eps


def kernel_log_pdf(kernel: SmoothingKernel, x_noisy, x):
    """Sum over dimensions of the 1-d log-density of (x_noisy - x).

    Uniform differences outside the support give -inf rather than an error so
    defensive callers can detect out-of-support queries.
    """
    if kernel.scale == 0.0:
        raise DomainError("degenerate (zero-scale) kernel has no density")
    diff = np.asarray(x_noisy, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    s = kernel.scale
    if kernel.family == "gaussian":
        per_dim = -0.5 * np.log(2.0 * np.pi * s * s) - 0.5 * (diff / s) ** 2
    elif kernel.family == "laplace":
        per_dim = -np.log(2.0 * s) - np.abs(diff) / s
    else:
        per_dim = np.where(np.abs(diff) <= s, -np.log(2.0 * s), -np.inf)
    out = per_dim.sum(axis=-1) if per_dim.ndim > 0 else per_dim
    return float(out) if np.ndim(out) == 0 else out


def kernel_entropy(kernel: SmoothingKernel) -> float:
    """Closed-form differential entropy, summed over dimensions."""
    if kernel.scale == 0.0:
        raise DomainError("degenerate (zero-scale) kernel has no entropy")
    s = kernel.scale
    if kernel.family == "gaussian":
        per_dim = 0.5 * np.log(2.0 * np.pi * np.e * s * s)
    elif kernel.family == "laplace":
        per_dim = 1.0 + np.log(2.0 * s)
    else:
        per_dim = np.log(2.0 * s)
    return float(kernel.dim * per_dim)


def kernel_second_moment(kernel: SmoothingKernel) -> float:
    """Per-dimension E[(x_noisy_i - x_i)^2]."""
    s = kernel.scale
    if kernel.family == "gaussian":
        return s * s
    if kernel.family == "laplace":
        return 2.0 * s * s
    return s * s / 3.0


def sigma_heuristic(points, seed: int = 0) -> float:
    """Median pairwise Euclidean distance divided by 2*sqrt(D).

    All unordered pairs of distinct indices count (coincident points included),
    and an even pair count takes the lower middle element. Datasets larger than
    2000 points are subsampled with the given seed.
    """
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, d = pts.shape
    if n < 2:
        raise ContractError(f"sigma_heuristic needs at least 2 points, got {n}")
    if n > 2000:
        idx = np.random.default_rng(seed).choice(n, size=2000, replace=False)
        pts = pts[idx]
        n = 2000
    sq = (pts * pts).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    iu = np.triu_indices(n, k=1)
    dists = np.sqrt(np.maximum(d2[iu], 0.0))
    dists.sort()
    median = dists[(dists.size - 1) // 2]
    return float(median / (2.0 * np.sqrt(d)))
