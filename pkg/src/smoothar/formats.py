"""File formats owned by the command-line front end: point CSVs, loss CSVs,
JSON checkpoints and result records, and SVG scatter plots.

CSV numbers use 17 significant digits and JSON floats use Python's shortest
round-trip repr, so checkpoints and exports reload bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, ParseError
from .made import MadeConfig, MadeLayer, MadeModel, connectivity_degrees
from .smoothing import SmoothingKernel
from .training import TwoStageModel


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def meta_lines(meta: dict) -> list[str]:
    return [f"# {key}={meta[key]}" for key in sorted(meta)]


# ---------------------------------------------------------------------------
# CSV

def write_points_csv(path, points: np.ndarray, meta: dict | None = None):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    lines = meta_lines(meta or {})
    lines.append(",".join(f"x{i + 1}" for i in range(points.shape[1])))
    for row in points:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None


def read_points_csv(path):
    """Returns (points, header, meta). Accepts plain and exponent notation."""
    meta: dict[str, str] = {}
    header = None
    rows = []
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(f"{path}: line {lineno}: expected {len(header)} fields, "
                             f"got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
    if header is None:
        raise ParseError(f"{path}: missing header row")
    pts = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return pts, header, meta


def write_loss_csv(path, trace, columns, meta: dict | None = None):
    lines = meta_lines(meta or {})
    lines.append(",".join(columns))
    for row in trace:
        step, *vals = row
        lines.append(",".join([str(int(step))] + [fmt(v) for v in vals]))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# JSON checkpoints

def _made_payload(model: MadeModel) -> dict:
    cfg = model.config
    return {
        "config": {
            "input_dim": cfg.input_dim,
            "cond_dim": cfg.cond_dim,
            "hidden_sizes": list(cfg.hidden_sizes),
            "num_components": cfg.num_components,
            "activation": cfg.activation,
        },
        "ordering": list(cfg.ordering),
        "layers": [{"w": layer.w.tolist(), "b": layer.b.tolist(), "mask": layer.mask.tolist()}
                   for layer in model.layers],
    }


def _made_from_payload(payload: dict) -> MadeModel:
    try:
        cfg_d = payload["config"]
        config = MadeConfig(
            input_dim=int(cfg_d["input_dim"]),
            cond_dim=int(cfg_d["cond_dim"]),
            hidden_sizes=tuple(int(h) for h in cfg_d["hidden_sizes"]),
            num_components=int(cfg_d["num_components"]),
            activation=str(cfg_d["activation"]),
            ordering=tuple(int(r) for r in payload["ordering"]),
        )
        layers = [MadeLayer(w=np.asarray(item["w"], dtype=np.float64),
                            b=np.asarray(item["b"], dtype=np.float64),
                            mask=np.asarray(item["mask"], dtype=np.float64))
                  for item in payload["layers"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed model payload: {exc}") from None
    model = MadeModel(config=config, layers=layers, degrees=connectivity_degrees(config))
    dims = [config.cond_dim + config.input_dim, *config.hidden_sizes, config.output_dim]
    for i, layer in enumerate(model.layers):
        if layer.w.shape != (dims[i], dims[i + 1]) or layer.mask.shape != layer.w.shape:
            raise ParseError(f"layer {i}: weight shape {layer.w.shape} does not match "
                             f"config ({dims[i]}, {dims[i + 1]})")
    return model


def save_checkpoint(path, model, meta: dict | None = None):
    if isinstance(model, MadeModel):
        doc = {"format_version": 1, "model_type": "made", **_made_payload(model)}
    elif isinstance(model, TwoStageModel):
        doc = {
            "format_version": 1,
            "model_type": "two_stage",
            "kernel": {"family": model.kernel.family, "sigma": model.kernel.scale,
                       "dim": model.kernel.dim},
            "prior": _made_payload(model.prior),
            "denoiser": _made_payload(model.denoiser),
        }
    else:
        raise ContractError(f"cannot checkpoint object of type {type(model).__name__}")
    doc["meta"] = meta or {}
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path):
    """Returns (model, meta) where model is a MadeModel or TwoStageModel."""
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format_version") != 1:
        raise ParseError(f"{path}: unsupported checkpoint format")
    meta = doc.get("meta", {})
    kind = doc.get("model_type")
    if kind == "made":
        return _made_from_payload(doc), meta
    if kind == "two_stage":
        try:
            kern = doc["kernel"]
            kernel = SmoothingKernel(family=str(kern["family"]), scale=float(kern["sigma"]),
                                     dim=int(kern["dim"]))
            prior = _made_from_payload(doc["prior"])
            denoiser = _made_from_payload(doc["denoiser"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: malformed two-stage checkpoint: {exc}") from None
        return TwoStageModel(prior=prior, denoiser=denoiser, kernel=kernel), meta
    raise ParseError(f"{path}: unknown model_type {kind!r}")


# ---------------------------------------------------------------------------
# results and plots

def write_result_json(path, record: dict):
    Path(path).write_text(json.dumps(record, sort_keys=True) + "\n")


def write_scatter_svg(path, points: np.ndarray, meta: dict | None = None):
    """Fixed 600x600 scatter; axes scaled to the data bounding box plus 5%."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise ContractError(f"scatter plot needs (N, 2) points, got shape {pts.shape}")
    size = 600.0
    if pts.shape[0] == 0:
        lo = np.array([0.0, 0.0])
        hi = np.array([1.0, 1.0])
    else:
        lo = pts[:, :2].min(axis=0)
        hi = pts[:, :2].max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    lo = lo - 0.05 * span
    hi = hi + 0.05 * span
    span = hi - lo

    def sx(v):
        return (v - lo[0]) / span[0] * size

    def sy(v):
        return size - (v - lo[1]) / span[1] * size

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size:g} {size:g}">']
    for key, val in sorted((meta or {}).items()):
        parts.append(f"<!-- {key}={val} -->")
    parts.append(f'<rect width="{size:g}" height="{size:g}" fill="white" '
                 'stroke="black" stroke-width="1"/>')
    for x, y in pts[:, :2]:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.5" fill="steelblue"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def run_meta(seed: int, payload: dict) -> dict:
    return {"seed": seed, "config_hash": config_hash(payload), "artifact_version": __version__}
