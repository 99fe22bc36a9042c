"""Command-line front end tying the library into reproducible experiments.

Every command takes ``--seed`` and ``--out``; outputs embed the seed, a hash
of the effective configuration, and the package version. Exit codes: 0 on
success, 2 on contract errors, 3 on parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, datasets, formats, inference, training
from .errors import ContractError, ParseError, TrainingDiverged
from .made import MadeModel
from .smoothing import sigma_heuristic
from .training import TrainConfig, TwoStageModel

DATASET_NAMES = ("two_mode_1d", "multimode_1d", "ring", "rings", "olympics", "checkerboard")


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParseError(f"bad float list {text!r}: {exc}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParseError(f"bad int list {text!r}: {exc}") from None


def _load_points(path) -> np.ndarray:
    pts, _, _ = formats.read_points_csv(path)
    return pts


def _train_config(args, dim: int) -> TrainConfig:
    steps = args.steps if args.steps is not None else (20000 if dim == 1 else 60000)
    return TrainConfig(steps=steps, learning_rate=args.lr, batch_size=args.batch_size,
                       seed=args.seed)


def _dataset_density(name: str, params: dict | None):
    ds = datasets.generate(name, n=0, seed=0, params=params)
    if ds.true_log_density is None:
        raise ContractError(f"dataset {name!r} has no exact density")
    log_density = ds.true_log_density
    return ds, lambda x: np.exp(log_density(x))


# ---------------------------------------------------------------------------
# commands

def cmd_dataset_gen(args) -> int:
    params = json.loads(args.params) if args.params else None
    ds = datasets.generate(args.name, n=args.n, seed=args.seed, params=params)
    meta = formats.run_meta(args.seed, {"cmd": "dataset gen", "name": args.name,
                                        "n": args.n, "params": params})
    formats.write_points_csv(args.out, ds.points, meta)
    return 0


def cmd_train_baseline(args) -> int:
    pts = _load_points(args.data)
    config = _train_config(args, pts.shape[1])
    model = training.build_baseline(pts.shape[1], args.mixtures, args.seed,
                                    hidden=args.hidden)
    model, trace = training.train_baseline(model, pts, config)
    train_nll = inference.eval_nll(model, pts, mode="exact")
    payload = {"cmd": "train baseline", "data": str(args.data), "mixtures": args.mixtures,
               "hidden": args.hidden, "steps": config.steps, "lr": config.learning_rate}
    meta = formats.run_meta(args.seed, payload)
    meta["train_nll"] = train_nll
    formats.save_checkpoint(args.out, model, meta)
    formats.write_loss_csv(str(args.out) + ".loss.csv", trace, ["step", "loss"], meta)
    print(f"trained baseline: {config.steps} steps, train NLL {train_nll:.6f}")
    return 0


def cmd_train_two_stage(args) -> int:
    pts = _load_points(args.data)
    config = _train_config(args, pts.shape[1])
    if args.sigma is not None:
        sigma = args.sigma
    elif args.sigma_heuristic:
        sigma = sigma_heuristic(pts, seed=args.seed)
    else:
        raise ContractError("two-stage training needs --sigma or --sigma-heuristic")
    ts = training.build_two_stage(pts.shape[1], args.family, sigma, args.mixtures,
                                  args.seed, hidden=args.hidden)
    ts, trace = training.train_two_stage(ts, pts, config)
    payload = {"cmd": "train two-stage", "data": str(args.data), "mixtures": args.mixtures,
               "family": args.family, "sigma": sigma, "hidden": args.hidden,
               "steps": config.steps, "lr": config.learning_rate}
    meta = formats.run_meta(args.seed, payload)
    meta["sigma"] = sigma
    formats.save_checkpoint(args.out, ts, meta)
    prior_trace = [(step, p) for step, p, _ in trace]
    den_trace = [(step, d) for step, _, d in trace]
    formats.write_loss_csv(str(args.out) + ".prior_loss.csv", prior_trace,
                           ["step", "loss"], meta)
    formats.write_loss_csv(str(args.out) + ".denoiser_loss.csv", den_trace,
                           ["step", "loss"], meta)
    print(f"trained two-stage: {config.steps} steps, sigma {sigma:.6g}")
    return 0


def cmd_sample(args) -> int:
    model, _ = formats.load_checkpoint(args.ckpt)
    rng = np.random.default_rng(args.seed)
    meta = formats.run_meta(args.seed, {"cmd": "sample", "ckpt": str(args.ckpt), "n": args.n})
    if isinstance(model, TwoStageModel):
        result = inference.sample_two_stage(model, args.n, rng)
        if args.emit_intermediate:
            d = model.kernel.dim
            both = np.concatenate([result.noisy, result.samples], axis=1)
            lines = formats.meta_lines(meta)
            header = [f"noisy_x{i + 1}" for i in range(d)] + [f"x{i + 1}" for i in range(d)]
            lines.append(",".join(header))
            for row in both:
                lines.append(",".join(formats.fmt(v) for v in row))
            Path(args.out).write_text("\n".join(lines) + "\n")
            return 0
        formats.write_points_csv(args.out, result.samples, meta)
        return 0
    if args.emit_intermediate:
        raise ContractError("--emit-intermediate needs a two-stage checkpoint")
    samples = model.sample(rng, n=args.n)
    formats.write_points_csv(args.out, samples, meta)
    return 0


def cmd_denoise(args) -> int:
    model, _ = formats.load_checkpoint(args.ckpt)
    if not isinstance(model, TwoStageModel):
        raise ContractError("denoise needs a two-stage checkpoint (it carries the kernel)")
    pts = _load_points(args.input)
    if pts.shape[1] != model.kernel.dim:
        raise ContractError(f"dimension mismatch: checkpoint dim {model.kernel.dim}, "
                            f"data dim {pts.shape[1]}")
    rng = np.random.default_rng(args.seed)
    if args.method == "single-step":
        out = inference.single_step_denoise(model.prior, pts, model.kernel.scale,
                                            family=model.kernel.family)
    else:
        out = inference.model_denoise(model, pts, rng)
    meta = formats.run_meta(args.seed, {"cmd": "denoise", "ckpt": str(args.ckpt),
                                        "method": args.method})
    formats.write_points_csv(args.out, out, meta)
    return 0


def cmd_eval(args) -> int:
    model, _ = formats.load_checkpoint(args.ckpt)
    pts = _load_points(args.data)
    model_dim = model.kernel.dim if isinstance(model, TwoStageModel) \
        else model.config.input_dim
    if pts.shape[1] != model_dim:
        raise ContractError(f"dimension mismatch: checkpoint dim {model_dim}, "
                            f"data dim {pts.shape[1]}")
    rng = np.random.default_rng(args.seed)
    nll = inference.eval_nll(model, pts, mode=args.mode, mc_samples=args.mc, rng=rng)
    payload = {"cmd": "eval", "ckpt": str(args.ckpt), "data": str(args.data),
               "mode": args.mode, "mc": args.mc}
    two_stage = isinstance(model, TwoStageModel)
    record = {
        "task": Path(args.data).stem,
        "model_kind": "two_stage" if two_stage else "made",
        "sigma": model.kernel.scale if two_stage else None,
        "family": model.kernel.family if two_stage else None,
        "M": args.mc if args.mode == "elbo" else None,
        "nll_or_elbo": nll,
        "nll_is_upper_bound": bool(two_stage),
        "seed": args.seed,
        "config_hash": formats.config_hash(payload),
        "artifact_version": formats.run_meta(args.seed, payload)["artifact_version"],
    }
    formats.write_result_json(args.out, record)
    print(f"nll {nll:.6f} ({args.mode})")
    return 0


def cmd_gridsearch(args) -> int:
    pts = _load_points(args.data)
    config = _train_config(args, pts.shape[1])
    result = training.grid_search_sigma(args.family, _float_list(args.sigmas), pts, config,
                                        num_components=args.mixtures, eval_mc=args.mc)
    payload = {"cmd": "gridsearch", "data": str(args.data), "family": args.family,
               "sigmas": args.sigmas, "mixtures": args.mixtures, "steps": config.steps}
    meta = formats.run_meta(args.seed, payload)
    meta["argmax_sigma"] = result.best_sigma
    lines = formats.meta_lines(meta)
    lines.append("sigma,elbo")
    for sigma, elbo in result.table:
        lines.append(f"{formats.fmt(sigma)},{formats.fmt(elbo)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"best sigma: {result.best_sigma:g}")
    return 0


def cmd_analyze_theorem1(args) -> int:
    params = json.loads(args.params) if args.params else None
    ds, density = _dataset_density(args.dataset, params)
    support = datasets.mixture_support(ds.spec.params["modes"])
    meta = formats.run_meta(args.seed, {"cmd": "analyze theorem1", "dataset": args.dataset,
                                        "families": args.families, "sigmas": args.sigmas})
    lines = formats.meta_lines(meta)
    lines.append("dataset,family,sigma,lip_original,lip_smoothed,holds")
    for family in args.families.split(","):
        for sigma in _float_list(args.sigmas):
            check = analysis.check_lipschitz_contraction(density, support, family, sigma,
                                                         n_grid=args.grid)
            lines.append(f"{args.dataset},{family},{formats.fmt(sigma)},"
                         f"{formats.fmt(check.lip_original)},{formats.fmt(check.lip_smoothed)},"
                         f"{int(check.holds)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


_EXPANSION_MODELS = {
    # log-density and its second derivative; normalization constants cancel
    "normal": (lambda x: -0.5 * x * x - 0.5 * np.log(2 * np.pi),
               lambda x: np.full_like(x, -1.0)),
    "quartic": (lambda x: -x ** 4, lambda x: -12.0 * x * x),
}


def cmd_analyze_prop1(args) -> int:
    log_density, d2 = _EXPANSION_MODELS[args.model]
    rng = np.random.default_rng(args.seed)
    xs = rng.uniform(-1.0, 1.0, size=args.n_points)
    meta = formats.run_meta(args.seed, {"cmd": "analyze prop1", "model": args.model,
                                        "family": args.family, "sigmas": args.sigmas,
                                        "mc": args.mc})
    lines = formats.meta_lines(meta)
    lines.append("model,family,sigma,lhs,rhs,gap,stderr")
    from .smoothing import SmoothingKernel
    for sigma in _float_list(args.sigmas):
        kernel = SmoothingKernel(family=args.family, scale=sigma, dim=1)
        check = analysis.check_second_order_expansion(log_density, d2, kernel, xs,
                                                      args.mc, rng)
        lines.append(f"{args.model},{args.family},{formats.fmt(sigma)},"
                     f"{formats.fmt(check.lhs)},{formats.fmt(check.rhs)},"
                     f"{formats.fmt(check.gap)},{formats.fmt(check.stderr)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def cmd_analyze_ring_derivatives(args) -> int:
    ds = datasets.gen_ring(0, 0)
    log_density = ds.true_log_density

    def density(x):
        return np.exp(log_density(x))

    offsets = _float_list(args.offsets)
    grads = analysis.ring_trajectory_derivatives(density, offsets)
    meta = formats.run_meta(args.seed, {"cmd": "analyze ring-derivatives",
                                        "offsets": args.offsets})
    lines = formats.meta_lines(meta)
    lines.append("c,grad_x,grad_y")
    for c, (gx, gy) in zip(offsets, grads):
        lines.append(f"{formats.fmt(c)},{formats.fmt(gx)},{formats.fmt(gy)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def cmd_analyze_ablation(args) -> int:
    model, _ = formats.load_checkpoint(args.ckpt)
    if not isinstance(model, MadeModel):
        raise ContractError("ablation needs a plain (baseline) checkpoint")
    rng = np.random.default_rng(args.seed)
    sigma_list = _float_list(args.sigmas)
    per_sigma = analysis.ablation_unsmoothed_denoise(model, sigma_list, args.n, rng)
    meta = formats.run_meta(args.seed, {"cmd": "analyze ablation", "ckpt": str(args.ckpt),
                                        "sigmas": args.sigmas, "n": args.n})
    d = model.config.input_dim
    lines = formats.meta_lines(meta)
    if d == 1:
        # valley-mass summary is this artifact's sample-quality metric for 1-d
        for sigma in sigma_list:
            lines.append(f"# valley_mass_sigma_{formats.fmt(sigma)}="
                         f"{formats.fmt(analysis.valley_mass(per_sigma[sigma]))}")
    lines.append(",".join(["sigma"] + [f"x{i + 1}" for i in range(d)]))
    for sigma in sigma_list:
        for row in per_sigma[sigma]:
            lines.append(",".join([formats.fmt(sigma)] + [formats.fmt(v) for v in row]))
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def cmd_plot_scatter(args) -> int:
    pts, header, _ = formats.read_points_csv(args.input)
    cols = [header.index(c) for c in ("x1", "x2")] if {"x1", "x2"} <= set(header) else [0, 1]
    if pts.shape[1] < 2:
        raise ContractError("scatter plot needs at least two columns")
    meta = formats.run_meta(args.seed, {"cmd": "plot scatter", "input": str(args.input)})
    formats.write_scatter_svg(args.out, pts[:, cols], meta)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothar",
                                     description="randomized-smoothing autoregressive "
                                                 "density estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)

    def train_common(p):
        p.add_argument("--data", required=True)
        p.add_argument("--mixtures", type=int, required=True)
        p.add_argument("--hidden", type=_int_list, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--lr", type=float, default=2e-4)
        p.add_argument("--batch-size", type=int, default=128)

    ds = sub.add_parser("dataset").add_subparsers(dest="subcommand", required=True)
    gen = ds.add_parser("gen", help="write a synthetic dataset as CSV")
    gen.add_argument("--name", choices=DATASET_NAMES, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--params", default=None, help="JSON generator parameters")
    common(gen)
    gen.set_defaults(func=cmd_dataset_gen)

    train = sub.add_parser("train").add_subparsers(dest="subcommand", required=True)
    tb = train.add_parser("baseline", help="maximum likelihood on raw data")
    train_common(tb)
    common(tb)
    tb.set_defaults(func=cmd_train_baseline)
    tt = train.add_parser("two-stage", help="smoothed model plus conditional denoiser")
    train_common(tt)
    tt.add_argument("--family", choices=("gaussian", "laplace", "uniform"), required=True)
    scale = tt.add_mutually_exclusive_group(required=True)
    scale.add_argument("--sigma", type=float, default=None)
    scale.add_argument("--sigma-heuristic", action="store_true")
    common(tt)
    tt.set_defaults(func=cmd_train_two_stage)

    sample = sub.add_parser("sample", help="ancestral samples from a checkpoint")
    sample.add_argument("--ckpt", required=True)
    sample.add_argument("--n", type=int, required=True)
    sample.add_argument("--emit-intermediate", action="store_true")
    common(sample)
    sample.set_defaults(func=cmd_sample)

    den = sub.add_parser("denoise", help="invert the smoothing for noisy points")
    den.add_argument("--ckpt", required=True)
    den.add_argument("--input", required=True)
    den.add_argument("--method", choices=("single-step", "model"), required=True)
    common(den)
    den.set_defaults(func=cmd_denoise)

    ev = sub.add_parser("eval", help="mean negative log-likelihood of a checkpoint")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--mode", choices=("exact", "elbo"), required=True)
    ev.add_argument("--mc", type=int, default=128)
    common(ev)
    ev.set_defaults(func=cmd_eval)

    gs = sub.add_parser("gridsearch", help="scan smoothing scales by held-out ELBO")
    gs.add_argument("--data", required=True)
    gs.add_argument("--family", choices=("gaussian", "laplace", "uniform"), required=True)
    gs.add_argument("--sigmas", required=True)
    gs.add_argument("--mixtures", type=int, default=2)
    gs.add_argument("--steps", type=int, default=None)
    gs.add_argument("--lr", type=float, default=2e-4)
    gs.add_argument("--batch-size", type=int, default=128)
    gs.add_argument("--mc", type=int, default=128)
    common(gs)
    gs.set_defaults(func=cmd_gridsearch)

    an = sub.add_parser("analyze").add_subparsers(dest="subcommand", required=True)
    t1 = an.add_parser("theorem1",
                       help="check that smoothing cannot raise a 1-d Lipschitz constant")
    t1.add_argument("--dataset", choices=("two_mode_1d", "multimode_1d"), required=True)
    t1.add_argument("--params", default=None)
    t1.add_argument("--families", default="gaussian,laplace,uniform")
    t1.add_argument("--sigmas", default="0.1,0.5,1.0")
    t1.add_argument("--grid", type=int, default=2001)
    common(t1)
    t1.set_defaults(func=cmd_analyze_theorem1)

    p1 = an.add_parser("prop1",
                       help="check the second-order expansion of the smoothed objective")
    p1.add_argument("--model", choices=tuple(_EXPANSION_MODELS), default="normal")
    p1.add_argument("--family", choices=("gaussian", "laplace", "uniform"),
                    default="gaussian")
    p1.add_argument("--sigmas", default="0.0,0.1")
    p1.add_argument("--mc", type=int, default=1000000)
    p1.add_argument("--n-points", type=int, default=32)
    common(p1)
    p1.set_defaults(func=cmd_analyze_prop1)

    rd = an.add_parser("ring-derivatives",
                       help="density gradients along the ring's diagonal trajectory")
    rd.add_argument("--offsets", default="-0.5,-0.2,-0.1,-0.05,-0.02,-0.01,0,"
                                         "0.01,0.02,0.05,0.1,0.2,0.5")
    common(rd)
    rd.set_defaults(func=cmd_analyze_ring_derivatives)

    ab = an.add_parser("ablation",
                       help="single-step update applied to an unsmoothed baseline")
    ab.add_argument("--ckpt", required=True)
    ab.add_argument("--sigmas", default="0.0,0.01,0.05,0.1")
    ab.add_argument("--n", type=int, default=10000)
    common(ab)
    ab.set_defaults(func=cmd_analyze_ablation)

    plot = sub.add_parser("plot").add_subparsers(dest="subcommand", required=True)
    sc = plot.add_parser("scatter", help="SVG scatter plot of a points CSV")
    sc.add_argument("--input", required=True)
    common(sc)
    sc.set_defaults(func=cmd_plot_scatter)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 3
    except ContractError as exc:
        print(f"contract error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
