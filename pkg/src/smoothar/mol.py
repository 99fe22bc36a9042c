"""Continuous univariate mixture-of-logistics distributions.

The same graph-building code serves plain evaluation (no tape) and training
(parameters recorded on a tape), so the stable log-density path is written
once. Log-scales are clamped to ``LOG_SCALE_FLOOR`` before use to keep the
density bounded on sharply peaked data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diffcore as dc
from .errors import ContractError, DomainError

LOG_SCALE_FLOOR = float(np.log(1e-4))


@dataclass(frozen=True)
class MoLParams:
    """Parameters of one K-component mixture of logistics."""

    logits: np.ndarray
    means: np.ndarray
    log_scales: np.ndarray

    def __post_init__(self):
        for name in ("logits", "means", "log_scales"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
        k = self.logits.shape
        if self.logits.ndim != 1 or self.means.shape != k or self.log_scales.shape != k:
            raise ContractError("logits, means and log_scales must be 1-d of equal length")
        if not (np.isfinite(self.logits).all() and np.isfinite(self.means).all()
                and np.isfinite(self.log_scales).all()):
            raise ContractError("mixture parameters must be finite")

    @property
    def num_components(self) -> int:
        return self.logits.shape[0]


def mixture_weights(params: MoLParams) -> np.ndarray:
    """Softmax of the logits; sums to one."""
    z = params.logits - params.logits.max()
    w = np.exp(z)
    return w / w.sum()


def log_pdf_cols(logits, means, log_scales, x) -> dc.Tensor:
    """Log-density of a per-row mixture of logistics.

    logits/means/log_scales are (N, K), x is (N, 1); returns (N, 1). Columns
    may be diffcore Tensors so gradients flow to both the parameters and x.
    """
    k = logits.data.shape[-1] if isinstance(logits, dc.Tensor) else np.asarray(logits).shape[-1]
    ls = dc.clamp_min(log_scales, LOG_SCALE_FLOOR)
    z = dc.mul(dc.sub(dc.repeat_last(x, k), means), dc.exp(dc.neg(ls)))
    # log f(x; mu, s) = -softplus(z) - softplus(-z) - log s
    log_f = dc.sub(dc.neg(dc.add(dc.softplus(z), dc.softplus(dc.neg(z)))), ls)
    log_w = dc.sub(logits, dc.repeat_last(dc.logsumexp(logits, axis=-1, keepdims=True), k))
    return dc.logsumexp(dc.add(log_w, log_f), axis=-1, keepdims=True)


def mol_log_pdf(params: MoLParams, x: float) -> float:
    """Log-density of the mixture at a scalar point."""
    if not np.isfinite(x):
        raise DomainError(f"mol_log_pdf: x must be finite, got {x}")
    out = log_pdf_cols(
        dc.Tensor(params.logits[None, :]),
        dc.Tensor(params.means[None, :]),
        dc.Tensor(params.log_scales[None, :]),
        dc.Tensor(np.array([[float(x)]])),
    )
    return float(out.data[0, 0])


def sample_cols(logits: np.ndarray, means: np.ndarray, log_scales: np.ndarray,
                rng: np.random.Generator) -> np.ndarray:
    """One sample per row from (N, K) mixture parameter arrays."""
    z = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(z)
    w /= w.sum(axis=-1, keepdims=True)
    cum = np.cumsum(w, axis=-1)
    u = rng.random((logits.shape[0], 1))
    comp = np.minimum((u > cum).sum(axis=-1), logits.shape[-1] - 1)
    rows = np.arange(logits.shape[0])
    mu = means[rows, comp]
    s = np.exp(np.maximum(log_scales[rows, comp], LOG_SCALE_FLOOR))
    # clip keeps the logistic inverse CDF finite at the open interval ends
    v = np.clip(rng.random(logits.shape[0]), 1e-16, 1.0 - 1e-16)
    return mu + s * np.log(v / (1.0 - v))


def mol_sample(params: MoLParams, rng: np.random.Generator) -> float:
    """Ancestral sample: pick a component, then invert the logistic CDF."""
    out = sample_cols(params.logits[None, :], params.means[None, :],
                      params.log_scales[None, :], rng)
    return float(out[0])
