"""Seeded synthetic data generators with exact log-densities where tractable.

Every generator is deterministic given (params, seed, n). Gaussian-mixture
generators carry a closed-form density; ring-based generators use the polar
construction density N(r; R, s^2) / (2*pi*r); the checkerboard dataset ships
without an attached evaluator because its density is discontinuous at square
boundaries (a standalone evaluator with a documented floor convention is
provided separately).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ContractError

TEN_MODE_MODES = tuple((-2.25 + 0.5 * k, 0.05, 1.0) for k in range(10))
SIX_MODE_MODES = tuple((-2.5 + 1.0 * k, 0.1, 1.0) for k in range(6))

RINGS_RADII = (0.25, 0.5, 0.75, 1.0)
RINGS_RADIAL_STD = 0.02
OLYMPICS_CENTERS = ((-2.2, 0.5), (0.0, 0.5), (2.2, 0.5), (-1.1, -0.5), (1.1, -0.5))
OLYMPICS_RADIUS = 1.0
OLYMPICS_RADIAL_STD = 0.05


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    dim: int
    params: dict
    seed: int
    n: int


@dataclass(frozen=True)
class Dataset:
    spec: DatasetSpec
    points: np.ndarray
    true_log_density: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (self.spec.n, self.spec.dim):
            raise ContractError(
                f"points shape {pts.shape} does not match spec ({self.spec.n}, {self.spec.dim})")
        if pts.size and not np.isfinite(pts).all():
            raise ContractError("dataset points must be finite")
        object.__setattr__(self, "points", pts)


def _as_points(x, dim: int) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :] if dim > 1 else a[:, None]
    return a


# ---------------------------------------------------------------------------
# 1-d Gaussian mixtures

def _normalize_modes(modes):
    modes = [(float(m), float(s), float(w)) for m, s, w in modes]
    if not modes:
        raise ContractError("mixture needs at least one mode")
    if any(s <= 0 for _, s, _ in modes) or any(w <= 0 for _, _, w in modes):
        raise ContractError("mode stds and weights must be positive")
    total = sum(w for _, _, w in modes)
    return [(m, s, w / total) for m, s, w in modes]


def gaussian_mixture_log_density(modes) -> Callable[[np.ndarray], np.ndarray]:
    modes = _normalize_modes(modes)
    mu = np.array([m for m, _, _ in modes])
    sd = np.array([s for _, s, _ in modes])
    logw = np.log(np.array([w for _, _, w in modes]))

    def log_density(x):
        xs = _as_points(x, 1)[:, 0]
        z = (xs[:, None] - mu[None, :]) / sd[None, :]
        comp = logw[None, :] - 0.5 * np.log(2.0 * np.pi) - np.log(sd)[None, :] - 0.5 * z * z
        m = comp.max(axis=1, keepdims=True)
        return (m[:, 0] + np.log(np.exp(comp - m).sum(axis=1)))

    return log_density


def _sample_gaussian_mixture(modes, n: int, rng: np.random.Generator) -> np.ndarray:
    modes = _normalize_modes(modes)
    w = np.array([wt for _, _, wt in modes])
    k = rng.choice(len(modes), size=n, p=w)
    mu = np.array([m for m, _, _ in modes])[k]
    sd = np.array([s for _, s, _ in modes])[k]
    return (mu + sd * rng.standard_normal(n))[:, None]


def gen_multimode_1d(modes, n: int, seed: int, name: str = "multimode_1d") -> Dataset:
    """Gaussian-mixture sampler with an exact density attached."""
    modes = _normalize_modes(modes)
    rng = np.random.default_rng(seed)
    pts = _sample_gaussian_mixture(modes, n, rng)
    spec = DatasetSpec(name=name, dim=1, params={"modes": modes}, seed=seed, n=n)
    return Dataset(spec=spec, points=pts, true_log_density=gaussian_mixture_log_density(modes))


def gen_two_mode_1d(n: int, seed: int) -> Dataset:
    """Equal-weight pair of narrow Gaussians at -0.3 and 0.3 (std 0.1)."""
    return gen_multimode_1d([(-0.3, 0.1, 0.5), (0.3, 0.1, 0.5)], n, seed, name="two_mode_1d")


def mixture_support(dataset_or_modes, pad_stds: float = 8.0) -> tuple[float, float]:
    """Interval holding essentially all mass of a 1-d Gaussian mixture."""
    modes = dataset_or_modes
    if isinstance(modes, Dataset):
        modes = modes.spec.params["modes"]
    modes = _normalize_modes(modes)
    lo = min(m - pad_stds * s for m, s, _ in modes)
    hi = max(m + pad_stds * s for m, s, _ in modes)
    return lo, hi


# ---------------------------------------------------------------------------
# 2-d ring mixtures

def _ring_component_log_density(x: np.ndarray, center, radius: float, rstd: float) -> np.ndarray:
    diff = x - np.asarray(center)[None, :]
    r = np.sqrt((diff * diff).sum(axis=1))
    safe_r = np.maximum(r, 1e-300)
    log_radial = (-0.5 * np.log(2.0 * np.pi) - np.log(rstd)
                  - 0.5 * ((r - radius) / rstd) ** 2)
    return np.where(r > 0, log_radial - np.log(2.0 * np.pi * safe_r), -np.inf)


def ring_mixture_log_density(components) -> Callable[[np.ndarray], np.ndarray]:
    """components: list of (center, radius, radial_std), equal weights."""
    components = [((float(c[0]), float(c[1])), float(r), float(s)) for c, r, s in components]
    logw = -np.log(len(components))

    def log_density(x):
        pts = _as_points(x, 2)
        comp = np.stack([_ring_component_log_density(pts, c, r, s)
                         for c, r, s in components], axis=1)
        m = comp.max(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            out = m[:, 0] + np.log(np.exp(comp - m).sum(axis=1)) + logw
        return np.where(np.isfinite(m[:, 0]), out, -np.inf)

    return log_density


def _sample_rings(components, n: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.integers(0, len(components), size=n)
    centers = np.array([c for c, _, _ in components])[idx]
    radii = np.array([r for _, r, _ in components])[idx]
    rstds = np.array([s for _, _, s in components])[idx]
    r = rng.normal(radii, rstds)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return centers + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def gen_ring(n: int, seed: int) -> Dataset:
    """Thin unit ring: radius N(1, 0.01^2), angle uniform."""
    components = [((0.0, 0.0), 1.0, 0.01)]
    rng = np.random.default_rng(seed)
    pts = _sample_rings(components, n, rng)
    spec = DatasetSpec(name="ring", dim=2, params={"components": components}, seed=seed, n=n)
    return Dataset(spec=spec, points=pts, true_log_density=ring_mixture_log_density(components))


def gen_rings(n: int, seed: int) -> Dataset:
    """Four concentric rings, radii 0.25..1.0, radial std 0.02."""
    components = [((0.0, 0.0), r, RINGS_RADIAL_STD) for r in RINGS_RADII]
    rng = np.random.default_rng(seed)
    pts = _sample_rings(components, n, rng)
    spec = DatasetSpec(name="rings", dim=2, params={"components": components}, seed=seed, n=n)
    return Dataset(spec=spec, points=pts, true_log_density=ring_mixture_log_density(components))


def gen_olympics(n: int, seed: int) -> Dataset:
    """Five interlocking unit rings, radial std 0.05."""
    components = [(c, OLYMPICS_RADIUS, OLYMPICS_RADIAL_STD) for c in OLYMPICS_CENTERS]
    rng = np.random.default_rng(seed)
    pts = _sample_rings(components, n, rng)
    spec = DatasetSpec(name="olympics", dim=2, params={"components": components}, seed=seed, n=n)
    return Dataset(spec=spec, points=pts, true_log_density=ring_mixture_log_density(components))


# ---------------------------------------------------------------------------
# checkerboard

def checkerboard_log_density(x) -> np.ndarray:
    """log(1/32) on the even-parity squares of the 8x8 board over [-4, 4)^2.

    Square membership uses floor(), so each square is closed on its low edges;
    points at or beyond the top/right board edge are off-support.
    """
    pts = _as_points(x, 2)
    i = np.floor(pts[:, 0] + 4.0)
    j = np.floor(pts[:, 1] + 4.0)
    on_board = (i >= 0) & (i < 8) & (j >= 0) & (j < 8)
    even = ((i + j) % 2) == 0
    return np.where(on_board & even, -np.log(32.0), -np.inf)


def gen_checkerboard(n: int, seed: int) -> Dataset:
    """Uniform over the 32 even-parity unit squares of an 8x8 board on [-4, 4)^2."""
    rng = np.random.default_rng(seed)
    squares = np.array([(i, j) for i in range(8) for j in range(8) if (i + j) % 2 == 0])
    idx = rng.integers(0, len(squares), size=n)
    pts = -4.0 + squares[idx] + rng.uniform(0.0, 1.0, size=(n, 2))
    spec = DatasetSpec(name="checkerboard", dim=2, params={}, seed=seed, n=n)
    return Dataset(spec=spec, points=pts, true_log_density=None)


# ---------------------------------------------------------------------------
# registry used by the CLI

def generate(name: str, n: int, seed: int, params: dict | None = None) -> Dataset:
    params = params or {}
    if name == "two_mode_1d":
        return gen_two_mode_1d(n, seed)
    if name == "multimode_1d":
        if "modes" in params:
            modes = [tuple(m) for m in params["modes"]]
        elif params.get("preset") == "six_mode":
            modes = SIX_MODE_MODES
        else:
            modes = TEN_MODE_MODES
        return gen_multimode_1d(modes, n, seed)
    if name == "ring":
        return gen_ring(n, seed)
    if name == "rings":
        return gen_rings(n, seed)
    if name == "olympics":
        return gen_olympics(n, seed)
    if name == "checkerboard":
        return gen_checkerboard(n, seed)
    raise ContractError(f"unknown dataset name {name!r}")
