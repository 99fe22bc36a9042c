"""Calibration for the 1-d six-mode grid search: full family x sigma table at
the experiment-default settings."""

import json
import sys
import time

import numpy as np

from smoothar import datasets, training

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
LR = float(sys.argv[2]) if len(sys.argv) > 2 else 2e-4
SEED = 300
SIGMAS = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0]

ds = datasets.gen_multimode_1d(datasets.SIX_MODE_MODES, 20000, SEED)

for family in ("gaussian", "laplace", "uniform"):
    cfg = training.TrainConfig(steps=STEPS, learning_rate=LR, seed=SEED)
    t0 = time.time()
    result = training.grid_search_sigma(family, SIGMAS, ds.points, cfg,
                                        num_components=2, eval_mc=128)
    print(json.dumps({"family": family, "steps": STEPS, "lr": LR,
                      "table": result.table, "best": result.best_sigma,
                      "min": (time.time() - t0) / 60}), flush=True)
