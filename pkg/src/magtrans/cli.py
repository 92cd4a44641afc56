"""Command line: gen-data, train, eval, predict.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or
numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace

from .autodiff import ShapeError
from .checkpoint import Checkpoint, CheckpointError, atomic_write, load_checkpoint, save_checkpoint
from .graph import (Dataset, DatasetParseError, GraphPair, SchemaError, dump_dataset, load_dataset)
from .metrics import average_reports, evaluate
from .model import ModelConfig, predict_batch
from .spectral import DegenerateNormalizationError
from .synth import SynthSpec, make_dataset, preset, summarize
from .training import OptimizerConfig, TrainingAbort, train

log = logging.getLogger("magtrans")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return data


def _load_data(path) -> Dataset:
    try:
        return load_dataset(path)
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except (DatasetParseError, SchemaError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_ckpt(path) -> Checkpoint:
    try:
        return load_checkpoint(path)
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except (CheckpointError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


# configuration

def spec_from_json(d: dict, seed: int | None = None) -> SynthSpec:
    """Either plain SynthSpec fields or ``{"preset": "I", ...overrides}``."""
    d = dict(d)
    if "preset" in d:
        base = preset(d.pop("preset")).to_dict()
        base.update(d)
        d = base
    if seed is not None:
        d["seed"] = seed
    return SynthSpec.from_dict(d)


def run_config(d: dict, dims: tuple[int, int, int], seed: int | None = None):
    """Resolve ``{"model": {...}, "optimizer": {...}, "seed": n}`` against dataset dims.

    The top-level seed drives both parameter init and batch shuffling.
    """
    unknown = set(d) - {"model", "optimizer", "seed"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    seed = d.get("seed") if seed is None else seed
    if not isinstance(seed, int):
        raise ValueError("config needs an integer 'seed' (or pass --seed)")
    model = dict(d.get("model", {}))
    for key, val in zip(("node_dim", "edge_dim", "context_dim"), dims):
        if model.setdefault(key, val) != val:
            raise ShapeError(f"config {key}={model[key]} but the dataset has {val}")
    model["seed"] = seed
    opt = dict(d.get("optimizer", {}))
    opt["shuffle_seed"] = seed
    return ModelConfig.from_dict(model), OptimizerConfig.from_dict(opt), seed


def _check_dims(model, ds: Dataset) -> None:
    c = model.config
    if ds.dims != (c.node_dim, c.edge_dim, c.context_dim):
        raise ShapeError(f"dataset dims (D,K,c)={ds.dims} but checkpoint expects "
                         f"{(c.node_dim, c.edge_dim, c.context_dim)}")


def history_csv(history: list[dict]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "supervised", "regularization", "total"])
    for h in history:
        w.writerow([h["epoch"], repr(h["supervised"]), repr(h["regularization"]), repr(h["total"])])
    return buf.getvalue().encode()


def _progress(every: int):
    def cb(state, rec):
        if every and rec["epoch"] % every == 0:
            log.info("epoch %d  supervised %.6g  reg %.6g  total %.6g",
                     rec["epoch"], rec["supervised"], rec["regularization"], rec["total"])
    return cb


def _fit(ds: Dataset, mcfg: ModelConfig, ocfg: OptimizerConfig, every: int = 0):
    return train(ds, mcfg, ocfg, on_epoch=_progress(every))


# commands

def cmd_gen_data(args) -> int:
    spec = spec_from_json(_read_json(args.spec), args.seed)
    ds = make_dataset(spec)
    atomic_write(args.out, dump_dataset(ds).encode())
    print(json.dumps({"spec": spec.to_dict(), "summary": summarize(ds)}, sort_keys=True))
    return EXIT_OK


def cmd_train(args) -> int:
    ds = _load_data(args.data)
    mcfg, ocfg, seed = run_config(_read_json(args.config), ds.dims, args.seed)
    state = _fit(ds, mcfg, ocfg, args.log_every)
    rep = evaluate(state.model, ds, threshold=args.threshold)
    metrics = {"train": rep.to_dict(), "final_epoch": state.history[-1] if state.history else None}
    save_checkpoint(args.out, Checkpoint(state.model, ocfg.to_dict(), metrics, seed))
    atomic_write(str(args.out) + ".history.csv", history_csv(state.history))
    print(json.dumps({"checkpoint": str(args.out), "epochs": ocfg.epochs,
                      "final": metrics["final_epoch"]}, sort_keys=True))
    return EXIT_OK


def _write_report(path, payload: dict, table: str) -> None:
    atomic_write(path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())
    atomic_write(str(path) + ".txt", table.encode())
    sys.stdout.write(table)


def cmd_eval(args) -> int:
    ckpt = _load_ckpt(args.checkpoint)
    ds = _load_data(args.data)
    _check_dims(ckpt.model, ds)
    if not args.two_fold:
        rep = evaluate(ckpt.model, ds, threshold=args.threshold, per_pair=args.per_pair)
        _write_report(args.report, rep.to_dict(), rep.to_table())
        return EXIT_OK
    # retrain from the checkpoint's config on each half, test on the other
    if len(ds) < 2:
        raise UsageError("two-fold evaluation needs at least two pairs")
    mcfg = ckpt.model.config
    ocfg = OptimizerConfig.from_dict(ckpt.optimizer) if ckpt.optimizer else OptimizerConfig()
    if args.seed is not None:
        mcfg, ocfg = replace(mcfg, seed=args.seed), replace(ocfg, shuffle_seed=args.seed)
    a, b = ds.halves()
    folds = []
    for train_part, test_part in ((a, b), (b, a)):
        state = _fit(train_part, mcfg, ocfg, args.log_every)
        folds.append(evaluate(state.model, test_part, threshold=args.threshold))
    rep = average_reports(folds)
    payload = rep.to_dict()
    payload["folds"] = [f.to_dict() for f in folds]
    _write_report(args.report, payload, rep.to_table())
    return EXIT_OK


def node_csv(preds, threshold: float) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = preds[0].d if preds else 1
    cols = ["attribute"] if d == 1 else [f"attribute_{i}" for i in range(d)]
    w.writerow(["pair", "node", "degree", *cols])
    for p, g in enumerate(preds):
        deg = g.degrees(threshold)
        for i in range(g.n):
            w.writerow([p, i, int(deg[i]), *(repr(float(x)) for x in g.f[i])])
    return buf.getvalue().encode()


def cmd_predict(args) -> int:
    ckpt = _load_ckpt(args.checkpoint)
    ds = _load_data(args.data)
    _check_dims(ckpt.model, ds)
    preds = predict_batch(ckpt.model, [p.input for p in ds], [p.context for p in ds])
    out = Dataset(tuple(GraphPair(p.input, g, p.context) for p, g in zip(ds, preds)), ds.dims)
    atomic_write(args.out, dump_dataset(out).encode())
    atomic_write(str(args.out) + ".nodes.csv", node_csv(preds, args.threshold))
    print(json.dumps({"predictions": str(args.out), "pairs": len(out)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magtrans", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log training progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--spec", required=True, help="SynthSpec JSON (fields, or {\"preset\": \"I\", ...})")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a model and write a checkpoint")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--threshold", type=float, default=0.5)
    t.add_argument("--log-every", type=int, default=10)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint against a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--report", required=True)
    e.add_argument("--two-fold", action="store_true",
                   help="retrain on each half with the checkpoint's config, test on the other, average")
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--per-pair", action="store_true")
    e.add_argument("--seed", type=int, help="seed for --two-fold retraining (default: the checkpoint's)")
    e.add_argument("--log-every", type=int, default=10)
    e.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write generated target graphs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_predict)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    if not 0 < getattr(args, "threshold", 0.5) < 1:
        print("error: --threshold must lie in (0, 1)", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ShapeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingAbort, DegenerateNormalizationError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
