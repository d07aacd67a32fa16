#!/usr/bin/env python3
"""Desk-scale training run: 2000 train / 500 test images, ~1 minute.

Trains the 3-qubit, 10 encode + 10 inference period classifier with Adam
on a stratified subset and writes metrics.csv, summary.json, confusion.csv
and final.npz under --out. This is the quick sanity experiment; see
full_run.py for the complete corpus.

Usage:
    python3 scripts/desk_run.py [--data-dir data/mnist] [--out runs/desk]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pulselearn import (  # noqa: E402
    ModelConfig,
    TrainConfig,
    chain_spec,
    evaluate,
    prepare,
    save_checkpoint,
    subset,
    train,
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", default="data/mnist")
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--train-per-class", type=int, default=250)
    ap.add_argument("--test-total", type=int, default=500)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=2)
    ns = ap.parse_args(argv)

    train_full, test_full = prepare(ns.data_dir)
    tr = subset(train_full, ns.train_per_class, seed=ns.seed)
    te = subset(
        test_full, -(-ns.test_total // 8), seed=ns.seed, total=ns.test_total
    )
    print(f"training on {len(tr)} images, validating on {len(te)}")

    cfg = ModelConfig(spec=chain_spec(3), encode_periods=10, total_periods=20)
    tcfg = TrainConfig(
        batch_size=ns.batch,
        learning_rate=ns.lr,
        epochs=ns.epochs,
        seed=ns.seed,
        workers=ns.workers,
    )
    params, report = train(cfg, tcfg, tr, val_set=te)
    loss, error, cm = evaluate(cfg, params, te, workers=ns.workers)

    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.csv", "w") as fh:
        fh.write("iteration,raw_loss,smoothed_loss\n")
        for i, (raw, smooth) in enumerate(zip(report.raw_loss, report.smoothed_loss)):
            fh.write(f"{i},{raw:.17g},{smooth:.17g}\n")
    cm.to_csv(out / "confusion.csv")
    save_checkpoint(out / "final.npz", cfg, params)
    summary = {
        "train_size": len(tr),
        "test_size": len(te),
        "epochs": report.epochs_run,
        "iterations": report.iterations,
        "grad_evals": report.grad_evals,
        "wall_clock_s": report.wall_clock,
        "test_loss": loss,
        "test_error": error,
        "val_error_by_epoch": report.val_error,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    print(
        f"done in {report.wall_clock:.0f}s: test error {100 * error:.2f}%, "
        f"loss {loss:.4f}; artifacts in {out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
