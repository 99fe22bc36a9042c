"""Shared fixtures: small trained models reused across test modules."""

import numpy as np
import pytest

from smoothar import datasets, training

FIXTURE_SEED = 900


@pytest.fixture(scope="session")
def two_mode_train():
    return datasets.gen_two_mode_1d(10000, FIXTURE_SEED)


@pytest.fixture(scope="session")
def two_mode_heldout():
    return datasets.gen_two_mode_1d(4000, FIXTURE_SEED + 1)


@pytest.fixture(scope="session")
def fast_config():
    # larger learning rate than the experiment default so fixtures converge
    # in seconds; acceptance runs use the documented settings
    return training.TrainConfig(steps=6000, learning_rate=1e-3, seed=FIXTURE_SEED)


@pytest.fixture(scope="session")
def baseline_two_mode_k2(two_mode_train):
    # long enough to escape the one-active-component plateau
    config = training.TrainConfig(steps=24000, learning_rate=1e-3, seed=FIXTURE_SEED)
    model = training.build_baseline(1, 2, seed=FIXTURE_SEED)
    training.train_baseline(model, two_mode_train.points, config)
    return model


@pytest.fixture(scope="session")
def ts_two_mode_k2(two_mode_train, fast_config):
    ts = training.build_two_stage(1, "gaussian", 0.3, 2, seed=FIXTURE_SEED)
    training.train_two_stage(ts, two_mode_train.points, fast_config)
    return ts


@pytest.fixture(scope="session")
def ts_two_mode_k1(two_mode_train, fast_config):
    ts = training.build_two_stage(1, "gaussian", 0.3, 1, seed=FIXTURE_SEED)
    training.train_two_stage(ts, two_mode_train.points, fast_config)
    return ts


@pytest.fixture(scope="session")
def ts_two_mode_tiny_noise(two_mode_train):
    config = training.TrainConfig(steps=16000, learning_rate=1e-3, seed=FIXTURE_SEED)
    ts = training.build_two_stage(1, "gaussian", 1e-12, 2, seed=FIXTURE_SEED)
    training.train_two_stage(ts, two_mode_train.points, config)
    return ts


@pytest.fixture(scope="session")
def ts_two_mode_wide(two_mode_train):
    # large smoothing scale relative to the mode width: the regime where a
    # single denoiser draw clearly beats keeping the noisy point
    config = training.TrainConfig(steps=8000, learning_rate=1e-3, seed=FIXTURE_SEED)
    ts = training.build_two_stage(1, "gaussian", 0.5, 2, seed=FIXTURE_SEED)
    training.train_two_stage(ts, two_mode_train.points, config)
    return ts
