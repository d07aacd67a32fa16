"""Command line front end.

Subcommands: prepare-data, train, eval, ablate, noise-sweep, gradcheck,
inspect-pulse. Options resolve in three layers: built-in defaults, then
a JSON config file (--config), then explicit flags. Every run drops a
``summary.json`` plus its command-specific artifacts into --out, along
with the fully resolved configuration so a run can be reproduced from
its output directory alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from .evaluate import ablation_suite, evaluate, noise_sweep, sweep_to_csv
from .gradients import (
    ANALYTIC,
    CENTRAL_DIFFERENCE,
    FORWARD_DIFFERENCE,
    prob_grad,
)
from .model import (
    ModelConfig,
    assemble_schedule,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .qsim import chain_spec
from .training import (
    TrainConfig,
    measurement_budget,
    naive_measurement_budget,
    train,
)

METHODS = {
    "fd": FORWARD_DIFFERENCE,
    "central": CENTRAL_DIFFERENCE,
    "analytic": ANALYTIC,
}

DEFAULTS = {
    "seed": 0,
    "out": "runs/last",
    "data_dir": "data/mnist",
    "qubits": 3,
    "encode_layers": 10,
    "infer_layers": 20,
    "readout": 3,
    "classes": 8,
    "bound": 25.0,
    "dt": 5.0,
    "couplings": "",
    "delta": 0.01,
    "batch": 32,
    "lr": 1e-3,
    "epochs": 5,
    "optimizer": "adam",
    "method": "analytic",
    "workers": 1,
    "subset": 0,
    "synthetic": 0,
    "synthetic_dim": 16,
    "noise_level": 0.0,
    "encoder_mode": "nonlinear",
    "freeze_encoder": False,
    "freeze_infer": False,
    "levels": "0,0.5,1,2,4",
    "reps": 10,
    "tol": 1e-5,
    "checkpoint": "",
    "sample": 0,
    "variants": ",".join(
        ("joint", "encoder-only", "fixed-encoder", "linear-clipped")
    ),
}


def _add_common(p):
    p.add_argument("--config", help="JSON file of option overrides")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--synthetic", type=int,
                   help="use N synthetic samples per class instead of files")
    p.add_argument("--synthetic-dim", dest="synthetic_dim", type=int)
    p.add_argument("--subset", type=int,
                   help="stratified training subset, samples per class (0 = all)")


def _add_model(p):
    p.add_argument("--qubits", type=int)
    p.add_argument("--encode-layers", dest="encode_layers", type=int)
    p.add_argument("--infer-layers", dest="infer_layers", type=int)
    p.add_argument("--readout", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--bound", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--couplings", help="comma list of MHz couplings")


def _add_train(p):
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--method", choices=sorted(METHODS))
    p.add_argument("--delta", type=float, help="finite-difference step, MHz")
    p.add_argument("--noise-level", dest="noise_level", type=float)
    p.add_argument("--encoder-mode", dest="encoder_mode",
                   choices=("nonlinear", "linear-clipped"))
    p.add_argument("--freeze-encoder", dest="freeze_encoder",
                   action="store_const", const=True)
    p.add_argument("--freeze-infer", dest="freeze_infer",
                   action="store_const", const=True)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pulselearn",
        description="Train and probe pulse-level qubit-chain classifiers.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-data", help="validate IDX files and report class counts")
    _add_common(p)
    p.add_argument("--export", action="store_const", const=True,
                   help="also write the filtered splits as CSV")

    p = sub.add_parser("train", help="fit a model and write metrics + checkpoints")
    _add_common(p)
    _add_model(p)
    _add_train(p)
    p.add_argument("--test-subset", dest="test_subset", type=int,
                   help="stratified test subset, per class (0 = all)")

    p = sub.add_parser("eval", help="score a checkpoint on the test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test-subset", dest="test_subset", type=int)

    p = sub.add_parser("ablate", help="retrain matched-budget variants and compare")
    _add_common(p)
    _add_model(p)
    _add_train(p)
    p.add_argument("--variants", help="comma list from: joint, encoder-only, "
                   "fixed-encoder, linear-clipped, pretrained-encoder")
    p.add_argument("--test-subset", dest="test_subset", type=int)

    p = sub.add_parser("noise-sweep", help="error rate vs flux-noise level")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--levels", help="comma list of noise stds in MHz")
    p.add_argument("--reps", type=int)
    p.add_argument("--test-subset", dest="test_subset", type=int)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference agreement")
    _add_common(p)
    _add_model(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("inspect-pulse", help="dump the resolved pulse table for one input")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sample", type=int, help="index into the test split")

    return ap


def resolve(ns) -> dict:
    """defaults < json config < explicit flags; returns a plain dict."""
    opts = dict(DEFAULTS)
    if getattr(ns, "config", None):
        with open(ns.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        opts.update(loaded)
    for key, val in vars(ns).items():
        if key == "config" or val is None:
            continue
        opts[key] = val
    return opts


def _model_config(opts) -> ModelConfig:
    couplings = None
    if opts["couplings"]:
        couplings = tuple(float(v) for v in str(opts["couplings"]).split(","))
    spec = chain_spec(opts["qubits"], couplings)
    return ModelConfig(
        spec=spec,
        encode_periods=opts["encode_layers"],
        total_periods=opts["encode_layers"] + opts["infer_layers"],
        dt=opts["dt"],
        n_readout=opts["readout"],
        n_classes=opts["classes"],
    )


def _train_config(opts) -> TrainConfig:
    return TrainConfig(
        batch_size=opts["batch"],
        learning_rate=opts["lr"],
        optimizer=opts["optimizer"],
        epochs=opts["epochs"],
        method=METHODS[opts["method"]],
        fd_step=opts["delta"],
        noise_level=opts["noise_level"],
        seed=opts["seed"],
        freeze_encoder=bool(opts["freeze_encoder"]),
        freeze_infer=bool(opts["freeze_infer"]),
        encoder_mode=opts["encoder_mode"],
        bound=opts["bound"],
        workers=opts["workers"],
    )


def _datasets(opts):
    if opts["synthetic"]:
        n = opts["synthetic"]
        train_set = data_mod.synthetic_dataset(
            n, input_dim=opts["synthetic_dim"], n_classes=opts["classes"],
            seed=opts["seed"],
        )
        test_set = data_mod.synthetic_dataset(
            max(2, n // 4), input_dim=opts["synthetic_dim"],
            n_classes=opts["classes"], seed=opts["seed"] + 1,
        )
    else:
        train_set, test_set = data_mod.prepare(opts["data_dir"])
    if opts["subset"]:
        train_set = data_mod.subset(train_set, opts["subset"], seed=opts["seed"])
    if opts.get("test_subset"):
        test_set = data_mod.subset(test_set, opts["test_subset"], seed=opts["seed"])
    return train_set, test_set


def _outdir(opts) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_summary(out: Path, opts, extra: dict):
    snapshot = {k: opts[k] for k in sorted(opts)}
    with open(out / "config.json", "w") as fh:
        json.dump(snapshot, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    body = {"config": snapshot, **extra}
    with open(out / "summary.json", "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _write_metrics(out: Path, report):
    with open(out / "metrics.csv", "w") as fh:
        fh.write("iteration,raw_loss,smoothed_loss\n")
        for i, (raw, smooth) in enumerate(
            zip(report.raw_loss, report.smoothed_loss), start=1
        ):
            fh.write("%d,%.17g,%.17g\n" % (i, raw, smooth))


def cmd_prepare_data(opts):
    out = _outdir(opts)
    train_set, test_set = _datasets(opts)
    if opts.get("export"):
        data_mod.export_csv(train_set, out / "train.csv")
        data_mod.export_csv(test_set, out / "test.csv")
    info = {
        "train": {"n": len(train_set), **train_set.meta},
        "test": {"n": len(test_set), **test_set.meta},
        "digits": list(data_mod.DIGITS),
        "input_dim": int(train_set.inputs.shape[1]),
    }
    _write_summary(out, opts, info)
    print(f"train: {len(train_set)} samples, test: {len(test_set)} samples "
          f"({train_set.inputs.shape[1]}-dim inputs, digits {list(data_mod.DIGITS)})")
    return 0


def cmd_train(opts):
    out = _outdir(opts)
    cfg = _model_config(opts)
    tcfg = dataclasses.replace(_train_config(opts),
                               checkpoint_dir=str(out / "checkpoints"))
    train_set, test_set = _datasets(opts)
    params, report = train(cfg, tcfg, train_set, val_set=test_set)
    _write_metrics(out, report)
    loss, error, cm = evaluate(cfg, params, test_set, workers=tcfg.workers)
    cm.to_csv(out / "confusion.csv")
    save_checkpoint(out / "final.npz", cfg, params,
                    {"train_config": dataclasses.asdict(tcfg)})
    input_dim = train_set.inputs.shape[1]
    _write_summary(out, opts, {
        "test_loss": loss,
        "test_error": error,
        "final_smoothed_loss": report.smoothed_loss[-1],
        "iterations": report.iterations,
        "grad_evals": report.grad_evals,
        "budget_per_sample": measurement_budget(cfg),
        "naive_budget_per_sample": naive_measurement_budget(cfg, input_dim),
        "wall_clock_s": report.wall_clock,
    })
    print(f"test error {100 * error:.2f}%  loss {loss:.4f}  "
          f"({report.iterations} iterations)")
    return 0


def cmd_eval(opts):
    out = _outdir(opts)
    cfg, params, meta = load_checkpoint(opts["checkpoint"])
    opts["classes"] = cfg.n_classes
    _, test_set = _datasets(opts)
    loss, error, cm = evaluate(cfg, params, test_set, workers=opts["workers"])
    cm.to_csv(out / "confusion.csv")
    _write_summary(out, opts, {
        "test_loss": loss,
        "test_error": error,
        "precision_pct": [round(v, 2) for v in cm.precision()],
        "recall_pct": [round(v, 2) for v in cm.recall()],
        "checkpoint_meta": meta,
    })
    print(f"test error {100 * error:.2f}%  loss {loss:.4f}  "
          f"(n={len(test_set)})")
    return 0


def cmd_ablate(opts):
    out = _outdir(opts)
    cfg = _model_config(opts)
    tcfg = _train_config(opts)
    train_set, test_set = _datasets(opts)
    variants = tuple(v.strip() for v in str(opts["variants"]).split(",") if v.strip())
    results = ablation_suite(cfg, tcfg, train_set, test_set, variants=variants)
    with open(out / "ablation.csv", "w") as fh:
        fh.write("variant,test_error,test_loss,iterations\n")
        for name in variants:
            r = results[name]
            fh.write("%s,%.17g,%.17g,%d\n" % (r.name, r.error, r.loss, r.iterations))
    _write_summary(out, opts, {
        "results": {n: dataclasses.asdict(r) for n, r in results.items()},
    })
    for name in variants:
        r = results[name]
        print(f"{name:>20s}: error {100 * r.error:.2f}%  loss {r.loss:.4f}")
    return 0


def cmd_noise_sweep(opts):
    out = _outdir(opts)
    cfg, params, _ = load_checkpoint(opts["checkpoint"])
    opts["classes"] = cfg.n_classes
    _, test_set = _datasets(opts)
    levels = [float(v) for v in str(opts["levels"]).split(",")]
    rows = noise_sweep(cfg, params, test_set, levels,
                       reps=opts["reps"], seed=opts["seed"])
    sweep_to_csv(rows, out / "sweep.csv")
    _write_summary(out, opts, {
        "sweep": [{k: (v.tolist() if isinstance(v, np.ndarray) else v)
                   for k, v in r.items()} for r in rows],
    })
    for r in rows:
        print(f"noise {r['level']:6.3f} MHz: error "
              f"{100 * r['mean_error']:.2f}% +- {100 * r['std_error']:.2f}%")
    return 0


def cmd_gradcheck(opts):
    out = _outdir(opts)
    cfg = _model_config(opts)
    rng = np.random.default_rng(opts["seed"])
    input_dim = opts["synthetic_dim"] + 1
    params = init_params(cfg, input_dim, rng, bound=opts["bound"])
    x = np.concatenate([rng.uniform(0, 1, size=opts["synthetic_dim"]), [1.0]])
    y = int(rng.integers(cfg.n_classes))
    _, ana = prob_grad(cfg, params, x, y, method=ANALYTIC)
    _, fd = prob_grad(cfg, params, x, y, method=CENTRAL_DIFFERENCE,
                      delta=opts["delta"])
    dw = float(np.max(np.abs(ana.d_weights - fd.d_weights)))
    dp = float(np.max(np.abs(ana.d_infer_pulses - fd.d_infer_pulses)))
    worst = max(dw, dp)
    ok = worst <= opts["tol"]
    _write_summary(out, opts, {
        "max_abs_diff_weights": dw,
        "max_abs_diff_infer": dp,
        "tolerance": opts["tol"],
        "passed": ok,
        "label": y,
    })
    print(f"max |analytic - central| = {worst:.3e} "
          f"(weights {dw:.3e}, pulses {dp:.3e}), tol {opts['tol']:.1e}: "
          f"{'OK' if ok else 'MISMATCH'}")
    return 0 if ok else 1


def cmd_inspect_pulse(opts):
    out = _outdir(opts)
    cfg, params, _ = load_checkpoint(opts["checkpoint"])
    opts["classes"] = cfg.n_classes
    _, test_set = _datasets(opts)
    i = opts["sample"]
    if not 0 <= i < len(test_set):
        raise SystemExit(f"sample index {i} out of range (n={len(test_set)})")
    schedule = assemble_schedule(cfg, params, test_set.inputs[i])
    names = []
    for q in range(cfg.spec.n_qubits):
        names += [f"q{q + 1}x_mhz", f"q{q + 1}y_mhz"]
    with open(out / "pulse.csv", "w") as fh:
        fh.write("period,segment," + ",".join(names) + "\n")
        for k, row in enumerate(schedule.amplitudes):
            seg = "encode" if k < cfg.encode_periods else "infer"
            fh.write("%d,%s," % (k, seg) + ",".join("%.17g" % v for v in row) + "\n")
    _write_summary(out, opts, {
        "sample": i,
        "label": int(test_set.labels[i]),
        "digit": int(test_set.digits[i]),
        "periods": int(cfg.total_periods),
        "dt_ns": cfg.dt,
    })
    print(f"wrote {cfg.total_periods}-period pulse table for sample {i} "
          f"(digit {test_set.digits[i]}) to {out / 'pulse.csv'}")
    return 0


COMMANDS = {
    "prepare-data": cmd_prepare_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "noise-sweep": cmd_noise_sweep,
    "gradcheck": cmd_gradcheck,
    "inspect-pulse": cmd_inspect_pulse,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    opts = resolve(ns)
    return COMMANDS[ns.command](opts)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
