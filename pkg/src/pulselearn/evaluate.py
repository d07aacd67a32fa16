"""Test-set scoring, confusion tallies, ablations, and noise sweeps."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ModelConfig, ModelParams, forward
from .noise import NoiseSpec, noisy_error_rate


@dataclass
class ConfusionMatrix:
    """Count table with predictions on rows and true labels on columns."""

    counts: np.ndarray  # (n_classes, n_classes) int64

    @property
    def n_classes(self):
        return self.counts.shape[0]

    def precision(self) -> np.ndarray:
        """Per-class percent correct among predictions of that class."""
        row = self.counts.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 100.0 * np.diag(self.counts) / row
        return np.where(row > 0, out, 0.0)

    def recall(self) -> np.ndarray:
        """Per-class percent of true members predicted correctly."""
        col = self.counts.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 100.0 * np.diag(self.counts) / col
        return np.where(col > 0, out, 0.0)

    def error_rate(self) -> float:
        total = self.counts.sum()
        return float(1.0 - np.trace(self.counts) / total) if total else 0.0

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        n = self.n_classes
        with open(path, "w") as fh:
            fh.write("predicted\\true," + ",".join(f"true_{j}" for j in range(n)) + ",precision_pct\n")
            prec = self.precision()
            for i in range(n):
                cells = ",".join(str(int(v)) for v in self.counts[i])
                fh.write(f"pred_{i},{cells},{prec[i]:.2f}\n")
            fh.write("recall_pct," + ",".join(f"{v:.2f}" for v in self.recall()) + ",\n")


def evaluate(cfg: ModelConfig, params: ModelParams, dataset, workers: int = 1):
    """One clean pass over ``dataset``: (loss, error_rate, confusion)."""
    inputs, labels = dataset.inputs, dataset.labels
    if len(labels) == 0:
        raise ValueError("empty dataset")

    def one(i):
        return forward(cfg, params, inputs[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            all_probs = list(pool.map(one, range(len(labels))))
    else:
        all_probs = [one(i) for i in range(len(labels))]

    counts = np.zeros((cfg.n_classes, cfg.n_classes), dtype=np.int64)
    true_p = np.empty(len(labels))
    for i, probs in enumerate(all_probs):
        pred = int(np.argmax(probs))
        counts[pred, labels[i]] += 1
        true_p[i] = probs[labels[i]]
    cm = ConfusionMatrix(counts)
    return float(1.0 - true_p.mean()), cm.error_rate(), cm


ABLATION_VARIANTS = (
    "joint",
    "encoder-only",
    "fixed-encoder",
    "linear-clipped",
    "pretrained-encoder",
)


@dataclass
class AblationResult:
    name: str
    error: float
    loss: float
    iterations: int


def ablation_suite(
    cfg: ModelConfig,
    tcfg,
    train_set,
    test_set,
    variants=ABLATION_VARIANTS,
):
    """Retrain under matched budgets with pieces frozen or swapped out.

    Every variant uses the same seed and epoch count as ``tcfg`` so the
    only thing that differs is what the optimizer is allowed to touch:

    - joint: everything trains (reference arm)
    - encoder-only: inference pulses stay at their random init
    - fixed-encoder: weight matrix stays at its random init
    - linear-clipped: joint, but the encoder clamps instead of saturating
    - pretrained-encoder: encoder-only warm start for half the epochs,
      then joint for the full budget
    """
    from .training import train  # local import; training imports evaluate

    results = {}
    for name in variants:
        run_t = dataclasses.replace(tcfg)
        if name == "joint":
            pass
        elif name == "encoder-only":
            run_t = dataclasses.replace(tcfg, freeze_infer=True)
        elif name == "fixed-encoder":
            run_t = dataclasses.replace(tcfg, freeze_encoder=True)
        elif name == "linear-clipped":
            run_t = dataclasses.replace(tcfg, encoder_mode="linear-clipped")
        elif name == "pretrained-encoder":
            warm_t = dataclasses.replace(
                tcfg, freeze_infer=True, epochs=max(1, tcfg.epochs // 2)
            )
            warm_params, _ = train(cfg, warm_t, train_set)
            params, report = train(cfg, tcfg, train_set, initial_params=warm_params)
            loss, error, _ = evaluate(cfg, params, test_set, workers=tcfg.workers)
            results[name] = AblationResult(name, error, loss, report.iterations)
            continue
        else:
            raise ValueError(f"unknown ablation variant {name!r}")
        params, report = train(cfg, run_t, train_set)
        loss, error, _ = evaluate(cfg, params, test_set, workers=run_t.workers)
        results[name] = AblationResult(name, error, loss, report.iterations)
    return results


def noise_sweep(
    cfg: ModelConfig,
    params: ModelParams,
    dataset,
    levels,
    reps: int = 10,
    seed: int = 0,
):
    """Error rate vs noise std; list of (level, mean, se, per-rep)."""
    rows = []
    for level in levels:
        mean, se, errs = noisy_error_rate(
            cfg, params, dataset.inputs, dataset.labels,
            NoiseSpec(level=float(level), seed=seed), reps=reps,
        )
        rows.append({"level": float(level), "mean_error": mean,
                     "std_error": se, "rep_errors": errs})
    return rows


def sweep_to_csv(rows, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("noise_mhz,mean_error,std_error,reps\n")
        for r in rows:
            fh.write(
                "%.17g,%.17g,%.17g,%d\n"
                % (r["level"], r["mean_error"], r["std_error"], len(r["rep_errors"]))
            )
