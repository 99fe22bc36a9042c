"""Sampling, denoising, and likelihood evaluation.

Two-stage objects only need ``prior``, ``denoiser`` and ``kernel`` attributes
where the models expose ``log_prob``/``sample``-style callables, so exact
analytic stand-ins can be evaluated with the same code paths as trained
networks.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ContractError
from .made import MadeModel, grad_log_prob_wrt_input, made_log_prob, made_sample
from .smoothing import SmoothingKernel, kernel_entropy, kernel_sample

_EVAL_CHUNK_ROWS = 65536


def _is_two_stage(model) -> bool:
    return hasattr(model, "prior") and hasattr(model, "denoiser") and hasattr(model, "kernel")


def _log_prob(model, cond, x) -> np.ndarray:
    if isinstance(model, MadeModel):
        return np.atleast_1d(made_log_prob(model, cond, x))
    if cond is None:
        return np.atleast_1d(model.log_prob(x))
    return np.atleast_1d(model.log_prob(x, cond=cond))


def _sample(model, cond, rng, n=None) -> np.ndarray:
    if isinstance(model, MadeModel):
        return made_sample(model, cond, rng, n=n)
    return model.sample(rng, cond=cond, n=n)


class TwoStageSamples(NamedTuple):
    samples: np.ndarray
    noisy: np.ndarray


def sample_two_stage(ts, n: int, rng: np.random.Generator) -> TwoStageSamples:
    """Draw noisy points from the prior, then one denoiser sample for each."""
    d = ts.prior.config.input_dim if isinstance(ts.prior, MadeModel) else ts.kernel.dim
    if n == 0:
        empty = np.zeros((0, d))
        return TwoStageSamples(samples=empty.copy(), noisy=empty)
    noisy = _sample(ts.prior, None, rng, n=n)
    samples = _sample(ts.denoiser, noisy, rng)
    return TwoStageSamples(samples=samples, noisy=noisy)


def single_step_denoise(prior, x_noisy, sigma: float, family: str = "gaussian") -> np.ndarray:
    """One gradient step toward the data: x + sigma^2 * d log p(x) / dx.

    Valid only for gaussian smoothing, where it equals the posterior-mean
    point estimate. ``prior`` may be a model or a callable returning the
    gradient of the log-density.
    """
    if family != "gaussian":
        raise ContractError("single-step denoising requires a gaussian smoothing kernel")
    x_noisy = np.asarray(x_noisy, dtype=np.float64)
    if isinstance(prior, MadeModel):
        grad = grad_log_prob_wrt_input(prior, None, x_noisy)
    elif callable(prior):
        grad = np.asarray(prior(x_noisy), dtype=np.float64)
    else:
        grad = np.asarray(prior.grad_log_prob(x_noisy), dtype=np.float64)
    return x_noisy + sigma * sigma * grad


def model_denoise(ts, x_noisy, rng: np.random.Generator) -> np.ndarray:
    """One ancestral sample from the conditional denoiser given noisy points."""
    x_noisy = np.asarray(x_noisy, dtype=np.float64)
    d = ts.kernel.dim
    if (x_noisy.ndim == 1 and x_noisy.shape[0] != d) or \
            (x_noisy.ndim == 2 and x_noisy.shape[1] != d):
        raise ContractError(f"noisy input must have {d} columns, got shape {x_noisy.shape}")
    return _sample(ts.denoiser, x_noisy, rng)


def elbo(ts, x, mc_samples: int, rng: np.random.Generator):
    """Monte-Carlo evidence lower bound on log p(x).

    Averages log p_prior(noisy) + log p_denoiser(x | noisy) over fresh noise
    draws and adds the kernel entropy in closed form (the entropy of a
    stationary kernel does not depend on x). (D,) -> float, (N, D) -> (N,).
    """
    if mc_samples < 1:
        raise ContractError(f"mc_samples must be >= 1, got {mc_samples}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    n = xb.shape[0]
    total = np.zeros(n)
    ent = kernel_entropy(ts.kernel)
    draws_per_chunk = max(1, _EVAL_CHUNK_ROWS // n) if n else mc_samples
    done = 0
    while done < mc_samples:
        m = min(draws_per_chunk, mc_samples - done)
        rep = np.tile(xb, (m, 1))
        noisy = kernel_sample(ts.kernel, rep, rng)
        vals = _log_prob(ts.prior, None, noisy) + _log_prob(ts.denoiser, noisy, rep)
        total += vals.reshape(m, n).sum(axis=0)
        done += m
    out = total / mc_samples + ent
    return float(out[0]) if single else out


def eval_nll(model, testset, mode: str = "exact", mc_samples: int = 128,
             rng: np.random.Generator | None = None) -> float:
    """Mean negative log-likelihood in nats per sample.

    Plain models report the exact value; two-stage models report the negative
    mean ELBO, which upper-bounds the true NLL. ``model`` may also be a
    callable exact log-density (mode "exact").
    """
    pts = np.asarray(getattr(testset, "points", testset), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if mode not in ("exact", "elbo"):
        raise ContractError(f"mode must be 'exact' or 'elbo', got {mode!r}")
    if _is_two_stage(model):
        if mode == "exact":
            raise ContractError("two-stage models have no exact likelihood; use mode='elbo'")
        if rng is None:
            rng = np.random.default_rng(0)
        total = 0.0
        chunk = max(1, _EVAL_CHUNK_ROWS // max(mc_samples, 1))
        for lo in range(0, pts.shape[0], chunk):
            part = pts[lo:lo + chunk]
            total += float(np.sum(elbo(model, part, mc_samples, rng)))
        return -total / pts.shape[0]
    if mode == "elbo":
        raise ContractError("mode='elbo' needs a two-stage model")
    total = 0.0
    for lo in range(0, pts.shape[0], _EVAL_CHUNK_ROWS):
        part = pts[lo:lo + _EVAL_CHUNK_ROWS]
        if callable(model) and not isinstance(model, MadeModel):
            lp = np.asarray(model(part), dtype=np.float64)
        else:
            lp = _log_prob(model, None, part)
        total += float(lp.sum())
    return -total / pts.shape[0]
