"""Command-line entry point: ``wavemyo {synth,train,eval,sweep,bench}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .classifier import load_model, save_model
from .pipeline import (
    bench_latency,
    emit_report,
    feature_condition_sweep,
    fit_model,
    load_config,
    load_data,
    run_experiment,
)
from .signal_io import generate_synthetic, split_by_trial, write_recordings


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value
    return out


def _config(args):
    overrides = _overrides(args.set)
    if getattr(args, "data", None):
        overrides["data_csv"] = args.data
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return load_config(args.config, overrides)


def cmd_synth(args) -> None:
    cfg = _config(args)
    recordings = generate_synthetic(cfg.synthetic_spec())
    write_recordings(recordings, args.out)
    print(f"wrote {len(recordings)} recordings to {args.out}")


def cmd_train(args) -> None:
    cfg = _config(args)
    recordings = load_data(cfg)
    split = split_by_trial(recordings, cfg.train_trials, cfg.test_trials)
    model, history = fit_model(cfg, split.train, max(r.label for r in recordings))
    save_model(model, args.model)
    print(f"trained {len(history)} epochs, final loss {history[-1]:.4f}; saved {args.model}")


def cmd_eval(args) -> None:
    cfg = _config(args)
    # run_experiment rejects a model whose feature layout differs from the config
    model = load_model(args.model) if args.model else None
    report = run_experiment(cfg, model=model)
    for path in emit_report(report, args.out):
        print(path)


def cmd_sweep(args) -> None:
    cfg = _config(args)
    reports = feature_condition_sweep(cfg)
    for path in emit_report(reports, args.out):
        print(path)


def cmd_bench(args) -> None:
    cfg = _config(args)
    model = load_model(args.model)
    recordings = load_data(cfg)
    split = split_by_trial(recordings, cfg.train_trials, cfg.test_trials)
    stats = bench_latency(cfg, model, split.test[0], args.length_ms)
    print(f"{stats.windows} windows x {stats.channels} channels, {stats.repetitions} repetitions")
    for (stage, scope), mean in stats.mean_ms.items():
        print(f"{stage:<19}{scope:<11} mean {mean:8.3f} ms  p95 {stats.p95_ms[(stage, scope)]:8.3f} ms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavemyo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int)
        p.add_argument("--data", help="CSV recordings (default: synthetic)")
        return p

    p = common(sub.add_parser("synth", help="write a synthetic dataset as CSV"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = common(sub.add_parser("train", help="fit a model on the training trials"))
    p.add_argument("--model", required=True, help="output model file (JSON)")
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("eval", help="accuracy vs signal length for each fusion rule"))
    p.add_argument("--model", help="pre-trained model; trained from the config when omitted")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("sweep", help="conventional-12 vs all-17 feature comparison"))
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("bench", help="latency of one decision"))
    p.add_argument("--model", required=True)
    p.add_argument("--length-ms", type=float, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
