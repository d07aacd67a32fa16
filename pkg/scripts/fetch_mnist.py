#!/usr/bin/env python3
"""Build local MNIST IDX files from the npm ``mnist`` package.

The classic download mirrors are often unreachable from sandboxes, but
the npm registry usually is, and its ``mnist`` package ships ~10k real
MNIST images (per-digit JSON, pixels already scaled to [0, 1]). This
script installs that package into a scratch directory, splits each
digit deterministically into train/test, and writes the four canonical
IDX files (all ten digits; class filtering happens downstream).

Usage:
    python3 scripts/fetch_mnist.py [--out data/mnist] [--train-frac 0.85]
"""

from __future__ import annotations

import argparse
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pulselearn.data import (  # noqa: E402
    TEST_IMAGES,
    TEST_LABELS,
    TRAIN_IMAGES,
    TRAIN_LABELS,
    write_idx,
)


def locate_digits(npm_dir: Path | None) -> Path:
    if npm_dir:
        digits = Path(npm_dir) / "mnist" / "src" / "digits"
        if not digits.is_dir():
            raise SystemExit(f"no mnist package under {npm_dir}")
        return digits
    if shutil.which("npm") is None:
        raise SystemExit("npm not found; pass --npm-dir at an existing node_modules")
    scratch = Path(tempfile.mkdtemp(prefix="mnist-npm-"))
    subprocess.run(
        ["npm", "install", "mnist", "--no-audit", "--no-fund", "--loglevel=error"],
        cwd=scratch,
        check=True,
    )
    return scratch / "node_modules" / "mnist" / "src" / "digits"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--train-frac", type=float, default=0.85)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--npm-dir", help="existing node_modules directory to reuse")
    ns = ap.parse_args(argv)

    digits_dir = locate_digits(Path(ns.npm_dir) if ns.npm_dir else None)
    rng = np.random.default_rng(ns.seed)

    train_imgs, train_lbls, test_imgs, test_lbls = [], [], [], []
    for digit in range(10):
        with open(digits_dir / f"{digit}.json") as fh:
            flat = np.asarray(json.load(fh)["data"], dtype=np.float64)
        imgs = np.rint(flat.reshape(-1, 28, 28) * 255.0).astype(np.uint8)
        order = rng.permutation(len(imgs))
        cut = int(round(ns.train_frac * len(imgs)))
        train_imgs.append(imgs[order[:cut]])
        test_imgs.append(imgs[order[cut:]])
        train_lbls.append(np.full(cut, digit, dtype=np.uint8))
        test_lbls.append(np.full(len(imgs) - cut, digit, dtype=np.uint8))
        print(f"digit {digit}: {len(imgs)} images -> {cut} train / {len(imgs) - cut} test")

    out = Path(ns.out)
    for name_i, name_l, imgs, lbls in (
        (TRAIN_IMAGES, TRAIN_LABELS, train_imgs, train_lbls),
        (TEST_IMAGES, TEST_LABELS, test_imgs, test_lbls),
    ):
        images = np.concatenate(imgs)
        labels = np.concatenate(lbls)
        mix = np.random.default_rng(ns.seed + 1).permutation(len(labels))
        write_idx(out / name_i, images[mix])
        write_idx(out / name_l, labels[mix])
        print(f"wrote {out / name_i} ({len(labels)} images)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
