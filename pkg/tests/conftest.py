"""Shared fixtures.

MNIST resolution order: $MNIST_DIR, then ./data/mnist, then a one-time
build from the npm ``mnist`` package (real MNIST-derived images). Tests
needing image data skip cleanly when none of those work.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parent.parent

import pulselearn as pl  # noqa: E402
from pulselearn.data import TRAIN_IMAGES, prepare, synthetic_dataset  # noqa: E402


def _mnist_candidates():
    env = os.environ.get("MNIST_DIR")
    if env:
        yield Path(env)
    yield REPO / "data" / "mnist"


@pytest.fixture(scope="session")
def mnist_dir():
    for cand in _mnist_candidates():
        if (cand / TRAIN_IMAGES).exists():
            return cand
    target = REPO / "data" / "mnist"
    fetch = REPO / "scripts" / "fetch_mnist.py"
    if shutil.which("npm"):
        proc = subprocess.run(
            [sys.executable, str(fetch), "--out", str(target)],
            capture_output=True,
            text=True,
        )
        if proc.returncode == 0 and (target / TRAIN_IMAGES).exists():
            return target
    pytest.skip("no MNIST IDX files available (set MNIST_DIR or run scripts/fetch_mnist.py)")


@pytest.fixture(scope="session")
def mnist_splits(mnist_dir):
    return prepare(mnist_dir)


@pytest.fixture(scope="session")
def tiny_cfg():
    """2 qubits, 2 encode + 3 inference periods, 4 classes."""
    return pl.ModelConfig(
        spec=pl.chain_spec(2),
        encode_periods=2,
        total_periods=5,
        n_readout=2,
        n_classes=4,
    )


@pytest.fixture(scope="session")
def chain3_cfg():
    """The headline 3-qubit layout: 10 encode + 10 inference periods."""
    return pl.ModelConfig(spec=pl.chain_spec(3), encode_periods=10, total_periods=20)


@pytest.fixture()
def tiny_sets():
    train = synthetic_dataset(8, input_dim=8, n_classes=4, seed=0)
    test = synthetic_dataset(4, input_dim=8, n_classes=4, seed=1)
    return train, test


@pytest.fixture()
def rng():
    return np.random.default_rng(20260817)
