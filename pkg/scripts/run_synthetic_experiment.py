"""Train on the synthetic corpus and write the full report set.

Usage::

    python3 scripts/run_synthetic_experiment.py --out results/default
    python3 scripts/run_synthetic_experiment.py -c my.cfg --set synth_noise_std=2.0
"""

import argparse
import logging
import time

from wavemyo.pipeline import emit_report, load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-c", "--config")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", default="results/default")
    ap.add_argument("--no-bench", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config, dict(kv.split("=", 1) for kv in args.set))
    t0 = time.perf_counter()
    report = run_experiment(cfg, bench=not args.no_bench)
    emit_report(report, args.out)

    print(f"done in {time.perf_counter() - t0:.1f} s, {report.epochs_run} epochs")
    print(f"single-window accuracy {report.window_accuracy:.2f}%")
    for method in report.methods:
        row = "  ".join(f"{report.accuracy[(method, L)]:6.2f}" for L in report.lengths_ms)
        print(f"{method:9s} {row}")
    print(f"reports in {args.out}")


if __name__ == "__main__":
    main()
