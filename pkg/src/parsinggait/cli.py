"""Command-line entry point: ``parsinggait <subcommand> [flags]``.

Numeric experiment settings live in JSON config files; flags carry only
paths, seeds, thread counts and the distance metric. Every subcommand writes
``effective_config.json`` into its output directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _read_json(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _snapshot(out: Path, command: str, args, config: dict):
    out.mkdir(parents=True, exist_ok=True)
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    with open(out / "effective_config.json", "w", encoding="utf-8") as fh:
        json.dump({"command": command, "flags": flags, "config": config}, fh, indent=2,
                  sort_keys=True, default=str)
        fh.write("\n")


def _write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(args):
    from .gps.manifest import DatasetManifest
    if args.data is None:
        raise UsageError("--data DIR (a directory holding manifest.jsonl) is required")
    path = Path(args.data)
    path = path / "manifest.jsonl" if path.is_dir() else path
    if not path.exists():
        raise UsageError(f"no manifest at {path}")
    return DatasetManifest.from_files(path)


def _require_out(args):
    if args.out is None:
        raise UsageError("--out DIR is required")
    return Path(args.out)


def _model_and_train_configs(raw: dict, seed):
    from .model.config import ModelConfig
    from .train.config import TrainConfig
    unknown = set(raw) - {"model", "train"}
    if unknown:
        raise UsageError(f"unknown config sections: {sorted(unknown)} (expected 'model', 'train')")
    try:
        mc = ModelConfig.from_dict(raw.get("model", {}))
        tc = TrainConfig.from_dict(raw.get("train", {}))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    if seed is not None:
        mc, tc = replace(mc, seed=seed), replace(tc, seed=seed)
    return mc, tc


# -- subcommands ----------------------------------------------------------------

def cmd_synth(args):
    from .synth.dataset import SynthConfig, generate_dataset
    out = _require_out(args)
    raw = _read_json(args.config)
    try:
        cfg = SynthConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synth config: {exc}") from exc
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    _snapshot(out, "synth", args, cfg.to_dict())
    m = generate_dataset(cfg, out, threads=args.threads)
    print(f"wrote {len(m)} sequences to {out}")


def cmd_stats(args):
    from .gps.stats import dataset_stats
    out = _require_out(args)
    manifest = _manifest(args)
    _snapshot(out, "stats", args, {})
    report = dataset_stats(manifest, threads=args.threads).to_dict()
    _write_json(out / "stats.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))


def cmd_entropy(args):
    from .gps.ops import LabelHistogram, entropy_bits, label_histogram
    out = _require_out(args)
    manifest = _manifest(args)
    _snapshot(out, "entropy", args, {})
    total = None
    per_frame = []
    per_seq = {}
    for e in manifest.entries:
        seq = manifest.load(e)
        h = label_histogram(seq)
        total = h if total is None else total + h
        per_seq[e.sequence_id] = entropy_bits(h)
        per_frame.extend(entropy_bits(label_histogram(f)) for f in seq.frames)
    pf = np.asarray(per_frame)
    report = {"dataset_bits": entropy_bits(total if total is not None else LabelHistogram([])),
              "per_frame": {"mean": float(pf.mean()), "min": float(pf.min()),
                            "max": float(pf.max()), "count": int(pf.size)},
              "per_sequence": per_seq}
    _write_json(out / "entropy.json", report)
    print(json.dumps({k: report[k] for k in ("dataset_bits", "per_frame")}, indent=2))


def cmd_render(args):
    from .gps.render import DEFAULT_PALETTE, render
    out = _require_out(args)
    manifest = _manifest(args)
    seq_id = args.sequence or manifest.entries[0].sequence_id
    try:
        seq = manifest.load(seq_id)
    except KeyError as exc:
        raise UsageError(f"unknown sequence {seq_id!r}") from exc
    indices = range(len(seq.frames)) if args.frame is None else [args.frame]
    if args.frame is not None and not 0 <= args.frame < len(seq.frames):
        raise UsageError(f"frame {args.frame} outside 0..{len(seq.frames) - 1}")
    _snapshot(out, "render", args, {"palette": {str(k): list(v) for k, v in DEFAULT_PALETTE.items()}})
    for i in indices:
        render(seq.frames[i], DEFAULT_PALETTE, out / f"{seq_id}_{i:04d}.ppm")
    print(f"rendered {len(indices)} frame(s) of {seq_id} to {out}")


def cmd_train(args):
    from .train.loop import train_run
    out = _require_out(args)
    manifest = _manifest(args)
    mc, tc = _model_and_train_configs(_read_json(args.config), args.seed)
    _snapshot(out, "train", args, {"model": mc.to_dict(), "train": tc.to_dict()})
    res = train_run(tc, mc, manifest, out_dir=out, resume=args.resume,
                    log=lambda s: print(s, flush=True))
    print(f"checkpoint: {res.checkpoint}")


def cmd_eval(args):
    from .eval.pipeline import evaluate
    from .model.checkpoint import load_model
    if args.checkpoint is None:
        raise UsageError("eval needs --checkpoint PATH")
    out = _require_out(args)
    manifest = _manifest(args)
    model, config, _ = load_model(args.checkpoint)
    _snapshot(out, "eval", args, {"model": config["model"]})
    report = evaluate(model, manifest, metric=args.metric, out_path=out / "report.json")
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))


def cmd_ablate(args):
    from .eval.ablate import ablate
    out = _require_out(args)
    manifest = _manifest(args)
    mc, tc = _model_and_train_configs(_read_json(args.config), args.seed)
    _snapshot(out, "ablate", args, {"model": mc.to_dict(), "train": tc.to_dict()})
    report = ablate(manifest, tc, mc, out_dir=out, metric=args.metric,
                    log=lambda s: print(s, flush=True))
    print(json.dumps(report.to_dict()["directions"], indent=2, sort_keys=True))


def cmd_gradcheck(args):
    from .autodiff.suite import run_suite
    out = _require_out(args)
    seed = 0 if args.seed is None else args.seed
    _snapshot(out, "gradcheck", args, {"seed": seed, "eps": 1e-5, "tol": 1e-4})
    entries = run_suite(seed)
    rows = [{"name": e.name, "shape": list(e.shape), "passed": e.result.passed,
             "max_rel_error": e.result.max_rel_error} for e in entries]
    _write_json(out / "gradcheck.json", rows)
    for r in rows:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']:<40} {str(tuple(r['shape'])):<16} "
              f"{r['max_rel_error']:.2e}")
    if not all(r["passed"] for r in rows):
        raise RuntimeError("gradient check failed")


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parsinggait", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, *, config=False, data=False, metric=False, checkpoint=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--seed", type=int, help="seed override")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="parallel workers (default: all cores)")
        if config:
            sp.add_argument("--config", metavar="PATH", help="JSON config file")
        if data:
            sp.add_argument("--data", metavar="DIR", help="dataset directory or manifest.jsonl")
        if metric:
            sp.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")
        if checkpoint:
            sp.add_argument("--checkpoint", metavar="PATH", help="PGCK checkpoint")
        return sp

    add("synth", cmd_synth, "generate a synthetic GPS dataset", config=True)
    add("stats", cmd_stats, "part statistics of a dataset", data=True)
    add("entropy", cmd_entropy, "pixel entropy of a dataset", data=True)
    r = add("render", cmd_render, "render frames as PPM images", data=True)
    r.add_argument("--sequence", help="sequence id (default: first in the manifest)")
    r.add_argument("--frame", type=int, help="frame index (default: all frames)")
    t = add("train", cmd_train, "train a model", config=True, data=True)
    t.add_argument("--resume", metavar="PATH", help="training checkpoint to resume from")
    add("eval", cmd_eval, "evaluate a checkpoint on the query/gallery split", data=True,
        metric=True, checkpoint=True)
    add("ablate", cmd_ablate, "run the ablation harness", config=True, data=True, metric=True)
    add("gradcheck", cmd_gradcheck, "finite-difference check of all primitives")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)      # argparse exits with EXIT_USAGE on bad flags
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"parsinggait {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # surfaced verbatim with a nonzero exit
        print(f"parsinggait {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
