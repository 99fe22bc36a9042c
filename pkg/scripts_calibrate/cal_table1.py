"""Calibration for the 2-d NLL comparison: trains baselines (K=3, K=6) and the
two-stage model (K=3) on rings and olympics, evaluating on a fresh test set.
Not part of the package; used to pick acceptance-run settings."""

import json
import sys
import time

import numpy as np

from smoothar import datasets, inference, training

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
SIGMA = float(sys.argv[2]) if len(sys.argv) > 2 else 0.3
WHICH = sys.argv[3] if len(sys.argv) > 3 else "rings"
N_TEST = int(sys.argv[4]) if len(sys.argv) > 4 else 20000
SEED = 100

gen = {"rings": datasets.gen_rings, "olympics": datasets.gen_olympics}[WHICH]
train_ds = gen(100000, SEED)
test_ds = gen(N_TEST, SEED + 1)

results = {"task": WHICH, "steps": STEPS, "sigma": SIGMA, "n_test": N_TEST}

for k in (3, 6):
    model = training.build_baseline(2, k, seed=SEED)
    cfg = training.TrainConfig(steps=STEPS, seed=SEED)
    t0 = time.time()
    training.train_baseline(model, train_ds.points, cfg)
    nll = inference.eval_nll(model, test_ds.points, mode="exact")
    results[f"baseline_k{k}"] = nll
    results[f"baseline_k{k}_min"] = (time.time() - t0) / 60
    print(json.dumps(results), flush=True)

ts = training.build_two_stage(2, "gaussian", SIGMA, 3, seed=SEED)
cfg = training.TrainConfig(steps=STEPS, seed=SEED)
t0 = time.time()
training.train_two_stage(ts, train_ds.points, cfg)
rng = np.random.default_rng(SEED + 2)
nll = inference.eval_nll(ts, test_ds.points, mode="elbo", mc_samples=8, rng=rng)
results["two_stage_k3"] = nll
results["two_stage_k3_min"] = (time.time() - t0) / 60
true_nll = inference.eval_nll(test_ds.true_log_density, test_ds.points, mode="exact")
results["true_nll"] = true_nll

# component decomposition: where does the bound lose nats?
from smoothar.made import made_log_prob
from smoothar.smoothing import kernel_entropy, kernel_sample
noisy = kernel_sample(ts.kernel, test_ds.points, np.random.default_rng(SEED + 3))
results["prior_nll_on_noisy"] = -float(np.mean(made_log_prob(ts.prior, None, noisy)))
results["denoiser_nll"] = -float(np.mean(made_log_prob(ts.denoiser, noisy, test_ds.points)))
results["kernel_entropy"] = kernel_entropy(ts.kernel)
print(json.dumps(results), flush=True)
