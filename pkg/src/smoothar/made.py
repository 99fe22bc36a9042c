"""Masked autoregressive network emitting mixture-of-logistics parameters.

Each output dimension i gets 3K columns (logits, means, log-scales) that may
depend only on conditioning inputs and on dimensions ordered before i. The
conditional variant feeds the conditioning vector as extra degree-0 inputs
stacked before x, so one network type covers both the unconditional density
and the conditional denoiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import diffcore as dc
from . import mol
from .errors import ContractError

_ACTIVATIONS = {"relu": dc.relu, "tanh": dc.tanh}


@dataclass(frozen=True)
class MadeConfig:
    input_dim: int
    cond_dim: int = 0
    hidden_sizes: tuple = (100, 100)
    num_components: int = 2
    activation: str = "tanh"
    ordering: tuple = None  # ranks 1..D per dimension; identity when None

    def __post_init__(self):
        if self.input_dim < 1:
            raise ContractError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.cond_dim < 0:
            raise ContractError(f"cond_dim must be >= 0, got {self.cond_dim}")
        if self.num_components < 1:
            raise ContractError(f"num_components must be >= 1, got {self.num_components}")
        if any(h < 1 for h in self.hidden_sizes):
            raise ContractError(f"hidden sizes must be positive, got {self.hidden_sizes}")
        if self.activation not in _ACTIVATIONS:
            raise ContractError(f"activation must be one of {sorted(_ACTIVATIONS)}")
        ordering = self.ordering
        if ordering is None:
            ordering = tuple(range(1, self.input_dim + 1))
        else:
            ordering = tuple(int(r) for r in ordering)
        if sorted(ordering) != list(range(1, self.input_dim + 1)):
            raise ContractError(f"ordering must be a permutation of 1..{self.input_dim}")
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        object.__setattr__(self, "ordering", ordering)

    @property
    def output_dim(self) -> int:
        return self.input_dim * 3 * self.num_components


@dataclass
class MadeLayer:
    w: np.ndarray      # (fan_in, fan_out)
    b: np.ndarray      # (fan_out,)
    mask: np.ndarray   # same shape as w, fixed 0/1


@dataclass
class MadeModel:
    config: MadeConfig
    layers: list[MadeLayer]
    degrees: list[np.ndarray] = field(repr=False)

    def log_prob(self, x, cond=None):
        return made_log_prob(self, cond, x)

    def sample(self, rng, cond=None, n=None):
        return made_sample(self, cond, rng, n=n)

    def grad_log_prob(self, x, cond=None):
        return grad_log_prob_wrt_input(self, cond, x)


def _degree_pool(d: int, cond_dim: int) -> list[int]:
    # With conditioning, degree-0 hidden units let every output (including the
    # first dimension in the ordering) see the conditioning inputs.
    if cond_dim > 0:
        return list(range(0, d))
    return list(range(1, max(d - 1, 1) + 1))


def connectivity_degrees(config: MadeConfig) -> list[np.ndarray]:
    """Per-unit degree labels for every layer boundary (input .. output).

    Conditioning inputs get degree 0; hidden degrees cycle deterministically
    through the valid pool so runs are reproducible from the seed alone."""
    d, c, k = config.input_dim, config.cond_dim, config.num_components
    input_deg = np.array([0] * c + list(config.ordering), dtype=np.int64)
    output_deg = np.repeat(np.asarray(config.ordering, dtype=np.int64), 3 * k)
    pool = _degree_pool(d, c)
    degrees = [input_deg]
    for h in config.hidden_sizes:
        degrees.append(np.array([pool[j % len(pool)] for j in range(h)], dtype=np.int64))
    degrees.append(output_deg)
    return degrees


def made_init(config: MadeConfig, rng: np.random.Generator) -> MadeModel:
    """Glorot-uniform weights, near-zero biases, deterministic connectivity masks.

    The mixture-mean entries of the output bias get small uniform noise: the
    first dimension in the ordering is parameterized by the bias alone, and
    with exactly zero bias its K components would stay identical under
    gradient descent forever."""
    d, k = config.input_dim, config.num_components
    degrees = connectivity_degrees(config)
    layers = []
    for li in range(len(degrees) - 1):
        deg_in, deg_out = degrees[li], degrees[li + 1]
        fan_in, fan_out = len(deg_in), len(deg_out)
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-a, a, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        last = li == len(degrees) - 2
        if last:
            mask = (deg_out[None, :] > deg_in[:, None]).astype(np.float64)
        else:
            mask = (deg_out[None, :] >= deg_in[:, None]).astype(np.float64)
        layers.append(MadeLayer(w=w, b=b, mask=mask))
    for i in range(d):
        o = i * 3 * k
        layers[-1].b[o + k:o + 2 * k] = rng.uniform(-0.1, 0.1, size=k)
    return MadeModel(config=config, layers=layers, degrees=degrees)


def bind_layers(model: MadeModel, tape: dc.Tape | None):
    """Wrap layer parameters as Tensors; leaves when a tape is given."""
    bound = []
    for layer in model.layers:
        if tape is None:
            bound.append((dc.Tensor(layer.w), dc.Tensor(layer.b), layer.mask))
        else:
            bound.append((tape.leaf(layer.w), tape.leaf(layer.b), layer.mask))
    return bound


def forward_cols(model: MadeModel, bound, cond_t, x_t) -> dc.Tensor:
    """(N, C) conditioning and (N, D) inputs -> (N, D*3K) raw parameters."""
    act = _ACTIVATIONS[model.config.activation]
    h = x_t if cond_t is None else dc.concat_cols(cond_t, x_t)
    for w, b, mask in bound[:-1]:
        h = act(dc.add(dc.masked_matmul(h, w, mask), b))
    w, b, mask = bound[-1]
    return dc.add(dc.masked_matmul(h, w, mask), b)


def param_block(config: MadeConfig, out, dim: int):
    """Slice (logits, means, log_scales) columns for one dimension."""
    k = config.num_components
    o = dim * 3 * k
    return (dc.slice_cols(out, o, o + k),
            dc.slice_cols(out, o + k, o + 2 * k),
            dc.slice_cols(out, o + 2 * k, o + 3 * k))


def log_prob_cols(model: MadeModel, bound, cond_t, x_t) -> dc.Tensor:
    """(N, 1) joint log-probability as the sum of per-dimension conditionals."""
    out = forward_cols(model, bound, cond_t, x_t)
    total = None
    for i in range(model.config.input_dim):
        logits, means, log_scales = param_block(model.config, out, i)
        xi = dc.slice_cols(x_t, i, i + 1)
        lp = mol.log_pdf_cols(logits, means, log_scales, xi)
        total = lp if total is None else dc.add(total, lp)
    return total


def _as_batch(arr, dim: int, name: str):
    a = np.asarray(arr, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != dim:
        raise ContractError(f"{name} must have {dim} columns, got shape {a.shape}")
    return a, single


def _check_cond(model: MadeModel, cond, n: int):
    c = model.config.cond_dim
    if c == 0:
        if cond is not None and np.asarray(cond).size > 0:
            raise ContractError("model is unconditional but conditioning was given")
        return None
    if cond is None:
        raise ContractError(f"model expects {c} conditioning columns, got none")
    cond = np.asarray(cond, dtype=np.float64)
    if cond.ndim == 1:
        cond = np.broadcast_to(cond[None, :], (n, c)).copy() if n > 1 else cond[None, :]
    if cond.shape != (n, c):
        raise ContractError(f"conditioning must have shape ({n}, {c}), got {cond.shape}")
    return cond


def made_log_prob(model: MadeModel, cond, x):
    """Joint log-probability; (D,) -> float, (N, D) -> (N,)."""
    xb, single = _as_batch(x, model.config.input_dim, "x")
    condb = _check_cond(model, cond, xb.shape[0])
    bound = bind_layers(model, None)
    cond_t = None if condb is None else dc.Tensor(condb)
    lp = log_prob_cols(model, bound, cond_t, dc.Tensor(xb)).data[:, 0]
    return float(lp[0]) if single else lp


def made_sample(model: MadeModel, cond, rng: np.random.Generator, n: int | None = None):
    """Ancestral sampling: one full forward pass per dimension in rank order."""
    d = model.config.input_dim
    if cond is not None:
        condb = np.asarray(cond, dtype=np.float64)
        if condb.ndim == 1:
            condb = condb[None, :]
        if n is None:
            n = condb.shape[0]
    if n is None:
        n = 1
    condb = _check_cond(model, cond, n)
    bound = bind_layers(model, None)
    cond_t = None if condb is None else dc.Tensor(condb)
    x = np.zeros((n, d))
    order = np.argsort(np.asarray(model.config.ordering))  # dims by rank
    for i in order:
        out = forward_cols(model, bound, cond_t, dc.Tensor(x))
        logits, means, log_scales = param_block(model.config, out, int(i))
        x[:, i] = mol.sample_cols(logits.data, means.data, log_scales.data, rng)
    return x


def grad_log_prob_wrt_input(model: MadeModel, cond, x):
    """d log p / dx, flowing through both the density argument and the network."""
    xb, single = _as_batch(x, model.config.input_dim, "x")
    condb = _check_cond(model, cond, xb.shape[0])
    tape = dc.Tape()
    x_leaf = tape.leaf(xb)
    cond_t = None if condb is None else dc.Tensor(condb)
    bound = bind_layers(model, None)
    loss = dc.sum(log_prob_cols(model, bound, cond_t, x_leaf))
    grad = dc.backward(tape, loss).of(x_leaf)
    return grad[0] if single else grad
