"""Two-stage-only calibration across smoothing scales (baselines measured
separately)."""

import json
import sys
import time

import numpy as np

from smoothar import datasets, inference, training

STEPS = int(sys.argv[1])
WHICH = sys.argv[2]
SIGMAS = [float(s) for s in sys.argv[3].split(",")]
K = int(sys.argv[4]) if len(sys.argv) > 4 else 3
N_TEST = 20000
SEED = 100

gen = {"rings": datasets.gen_rings, "olympics": datasets.gen_olympics}[WHICH]
train_ds = gen(100000, SEED)
test_ds = gen(N_TEST, SEED + 1)

for sigma in SIGMAS:
    ts = training.build_two_stage(2, "gaussian", sigma, K, seed=SEED)
    cfg = training.TrainConfig(steps=STEPS, seed=SEED)
    t0 = time.time()
    training.train_two_stage(ts, train_ds.points, cfg)
    rng = np.random.default_rng(SEED + 2)
    nll = inference.eval_nll(ts, test_ds.points, mode="elbo", mc_samples=8, rng=rng)
    print(json.dumps({"task": WHICH, "k": K, "steps": STEPS, "sigma": sigma,
                      "two_stage": nll, "min": (time.time() - t0) / 60}), flush=True)
