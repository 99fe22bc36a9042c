"""Optimizers and training loops: plain maximum likelihood, the two-stage
smoothed objective, and the smoothing-scale grid search.

The two-stage loop draws fresh noise for every minibatch and takes one Adam
step per model; the two models share no parameters, so stepping them
separately maximizes the combined objective (noisy-data log-likelihood plus
conditional denoiser log-likelihood).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import diffcore as dc
from . import made as made_mod
from .datasets import Dataset
from .errors import ContractError, TrainingDiverged
from .inference import eval_nll
from .made import MadeConfig, MadeModel, bind_layers, log_prob_cols, made_init
from .smoothing import SmoothingKernel, kernel_sample


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    learning_rate: float = 2e-4
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    elbo_mc_samples: int = 1
    trace_every: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ContractError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.steps < 0 or self.elbo_mc_samples < 1:
            raise ContractError("batch_size and elbo_mc_samples must be positive, steps >= 0")


@dataclass
class TwoStageModel:
    prior: MadeModel
    denoiser: MadeModel
    kernel: SmoothingKernel

    def __post_init__(self):
        d = self.prior.config.input_dim
        if self.prior.config.cond_dim != 0:
            raise ContractError("prior must be unconditional")
        if self.denoiser.config.input_dim != d or self.denoiser.config.cond_dim != d:
            raise ContractError(
                f"denoiser must map {d} conditioning dims to {d} dims, got config "
                f"({self.denoiser.config.cond_dim} -> {self.denoiser.config.input_dim})")
        if self.kernel.dim != d:
            raise ContractError(f"kernel dim {self.kernel.dim} does not match model dim {d}")


# ---------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0


def adam_init(params: list[np.ndarray]) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params], t=0)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState,
              config: TrainConfig) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns fresh arrays and state."""
    if len(params) != len(grads):
        raise ContractError("params and grads must align")
    t = state.t + 1
    b1, b2 = config.beta1, config.beta2
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ContractError(f"grad shape {g.shape} does not match param {p.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_p.append(p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(m=new_m, v=new_v, t=t)


# ---------------------------------------------------------------------------
# shared loop machinery

def seed_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Deterministic child generators for one run seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _points_of(data) -> np.ndarray:
    pts = np.asarray(getattr(data, "points", data), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def train_test_split(data, seed: int, train_frac: float = 0.9):
    """Deterministic 90/10 shuffle split."""
    pts = _points_of(data)
    perm = np.random.default_rng(seed).permutation(pts.shape[0])
    cut = int(round(train_frac * pts.shape[0]))
    return pts[perm[:cut]], pts[perm[cut:]]


def _flatten_params(model: MadeModel) -> list[np.ndarray]:
    out = []
    for layer in model.layers:
        out.extend([layer.w, layer.b])
    return out


def _write_params(model: MadeModel, params: list[np.ndarray]):
    for i, layer in enumerate(model.layers):
        layer.w = params[2 * i]
        layer.b = params[2 * i + 1]


def _nll_loss_and_grads(model: MadeModel, cond, x):
    """Mean negative log-likelihood of a batch plus parameter gradients."""
    tape = dc.Tape()
    bound = bind_layers(model, tape)
    cond_t = None if cond is None else dc.Tensor(cond)
    lp = log_prob_cols(model, bound, cond_t, dc.Tensor(x))
    loss = dc.mul(dc.sum(lp), -1.0 / x.shape[0])
    grads = dc.backward(tape, loss)
    flat = []
    for w_t, b_t, _ in bound:
        flat.extend([grads.of(w_t), grads.of(b_t)])
    return float(loss.data), flat


def _check_finite(loss: float, step: int, seed: int, label: str):
    if not np.isfinite(loss):
        raise TrainingDiverged(
            f"{label} loss became non-finite at step {step} (run seed {seed})",
            step=step, seed=seed)


def train_baseline(model: MadeModel, data, config: TrainConfig):
    """Minibatch Adam on mean negative log-likelihood.

    Mutates the model in place and returns (model, trace) where trace rows are
    (step, batch_loss) recorded every ``trace_every`` steps and at the end.
    """
    pts = _points_of(data)
    if pts.shape[1] != model.config.input_dim:
        raise ContractError(
            f"data dim {pts.shape[1]} does not match model dim {model.config.input_dim}")
    batch_rng, = seed_streams(config.seed, 1)
    params = _flatten_params(model)
    state = adam_init(params)
    trace: list[tuple[int, float]] = []
    for step in range(config.steps):
        idx = batch_rng.integers(0, pts.shape[0], size=config.batch_size)
        loss, grads = _nll_loss_and_grads(model, None, pts[idx])
        _check_finite(loss, step, config.seed, "baseline")
        if step % config.trace_every == 0:
            trace.append((step, loss))
        params, state = adam_step(params, grads, state, config)
        _write_params(model, params)
    if config.steps and (config.steps - 1) % config.trace_every != 0:
        idx = batch_rng.integers(0, pts.shape[0], size=config.batch_size)
        loss, _ = _nll_loss_and_grads(model, None, pts[idx])
        trace.append((config.steps - 1, loss))
    return model, trace


def train_two_stage(ts: TwoStageModel, data, config: TrainConfig):
    """Separate maximum likelihood for the noisy-data model and the denoiser.

    Each minibatch gets fresh noise; with elbo_mc_samples > 1 the batch is
    tiled so both losses average over the same noise draws. Returns (ts, trace)
    with trace rows (step, prior_loss, denoiser_loss).
    """
    pts = _points_of(data)
    d = ts.prior.config.input_dim
    if pts.shape[1] != d:
        raise ContractError(f"data dim {pts.shape[1]} does not match model dim {d}")
    batch_rng, noise_rng = seed_streams(config.seed, 2)
    m = config.elbo_mc_samples

    prior_params = _flatten_params(ts.prior)
    den_params = _flatten_params(ts.denoiser)
    prior_state = adam_init(prior_params)
    den_state = adam_init(den_params)

    def batch_losses(x):
        x_rep = np.repeat(x, m, axis=0) if m > 1 else x
        x_noisy = kernel_sample(ts.kernel, x_rep, noise_rng)
        prior_loss, prior_grads = _nll_loss_and_grads(ts.prior, None, x_noisy)
        den_loss, den_grads = _nll_loss_and_grads(ts.denoiser, x_noisy, x_rep)
        return x_noisy, prior_loss, prior_grads, den_loss, den_grads

    trace: list[tuple[int, float, float]] = []
    for step in range(config.steps):
        idx = batch_rng.integers(0, pts.shape[0], size=config.batch_size)
        _, prior_loss, prior_grads, den_loss, den_grads = batch_losses(pts[idx])
        _check_finite(prior_loss, step, config.seed, "prior")
        _check_finite(den_loss, step, config.seed, "denoiser")
        if step % config.trace_every == 0:
            trace.append((step, prior_loss, den_loss))
        prior_params, prior_state = adam_step(prior_params, prior_grads, prior_state, config)
        _write_params(ts.prior, prior_params)
        den_params, den_state = adam_step(den_params, den_grads, den_state, config)
        _write_params(ts.denoiser, den_params)
    if config.steps and (config.steps - 1) % config.trace_every != 0:
        idx = batch_rng.integers(0, pts.shape[0], size=config.batch_size)
        _, prior_loss, _, den_loss, _ = batch_losses(pts[idx])
        trace.append((config.steps - 1, prior_loss, den_loss))
    return ts, trace


# ---------------------------------------------------------------------------
# architectures and grid search

def default_architecture(dim: int, kind: str) -> tuple[tuple[int, ...], str]:
    """Hidden sizes and activation: 1-d tasks use small tanh nets; 2-d tasks
    use relu nets, and the single-network baseline gets the wider stack so
    total parameter counts stay comparable with the two-model setup."""
    if dim == 1:
        return (100, 100), "tanh"
    if kind == "baseline":
        return (512, 512, 512), "relu"
    return (256, 256, 256), "relu"


def build_baseline(dim: int, num_components: int, seed: int,
                   hidden=None, activation=None) -> MadeModel:
    h, act = default_architecture(dim, "baseline")
    cfg = MadeConfig(input_dim=dim, cond_dim=0, hidden_sizes=hidden or h,
                     num_components=num_components, activation=activation or act)
    return made_init(cfg, np.random.default_rng(np.random.SeedSequence([seed, 0])))


def build_two_stage(dim: int, family: str, sigma: float, num_components: int, seed: int,
                    hidden=None, activation=None) -> TwoStageModel:
    h, act = default_architecture(dim, "two_stage")
    hidden = tuple(hidden) if hidden else h
    activation = activation or act
    prior_cfg = MadeConfig(input_dim=dim, cond_dim=0, hidden_sizes=hidden,
                           num_components=num_components, activation=activation)
    den_cfg = MadeConfig(input_dim=dim, cond_dim=dim, hidden_sizes=hidden,
                         num_components=num_components, activation=activation)
    prior = made_init(prior_cfg, np.random.default_rng(np.random.SeedSequence([seed, 1])))
    denoiser = made_init(den_cfg, np.random.default_rng(np.random.SeedSequence([seed, 2])))
    return TwoStageModel(prior=prior, denoiser=denoiser,
                         kernel=SmoothingKernel(family=family, scale=sigma, dim=dim))


@dataclass(frozen=True)
class GridSearchResult:
    table: list  # (sigma, held-out elbo) rows
    best_sigma: float


def grid_search_sigma(family: str, sigmas, data, config: TrainConfig,
                      num_components: int = 2, hidden=None, activation=None,
                      eval_mc: int = 128) -> GridSearchResult:
    """Train one two-stage model per scale (identical seeds) and rank them by
    mean held-out ELBO."""
    sigmas = [float(s) for s in sigmas]
    if not sigmas:
        raise ContractError("grid_search_sigma needs at least one sigma")
    pts = _points_of(data)
    train_pts, heldout = train_test_split(pts, config.seed)
    table = []
    for sigma in sigmas:
        ts = build_two_stage(pts.shape[1], family, sigma, num_components, config.seed,
                             hidden=hidden, activation=activation)
        train_two_stage(ts, train_pts, config)
        eval_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 3]))
        elbo = -eval_nll(ts, heldout, mode="elbo", mc_samples=eval_mc, rng=eval_rng)
        table.append((sigma, float(elbo)))
    best_sigma = max(table, key=lambda row: row[1])[0]
    return GridSearchResult(table=table, best_sigma=best_sigma)
