"""Latency of feature extraction, classification and fusion across signal lengths."""

import argparse

from wavemyo.pipeline import bench_latency, fit_model, load_config, load_data
from wavemyo.signal_io import split_by_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-c", "--config")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--epochs", type=int, default=5, help="latency does not depend on training length")
    args = ap.parse_args()

    overrides = dict(kv.split("=", 1) for kv in args.set)
    cfg = load_config(args.config, {"epochs": str(args.epochs), **overrides})
    recs = load_data(cfg)
    split = split_by_trial(recs, cfg.train_trials, cfg.test_trials)
    model, _ = fit_model(cfg, split.train)

    print(f"{'length_ms':>9} {'windows':>7} {'features':>10} {'classify':>10} {'fusion':>10}   (mean ms per decision)")
    for L in cfg.signal_lengths_ms:
        s = bench_latency(cfg, model, split.test[0], length_ms=L)
        m = {stage: s.mean_ms[(stage, "per_signal")] for stage in s.stages}
        print(f"{L:9g} {s.windows:7d} {m['feature_extraction']:10.3f} {m['classification']:10.3f} {m['fusion']:10.3f}")


if __name__ == "__main__":
    main()
