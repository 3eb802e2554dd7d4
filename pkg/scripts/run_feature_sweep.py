"""Compare the 12 conventional features against all 17 on the same split and seed."""

import argparse
import logging

import numpy as np

from wavemyo.pipeline import emit_report, feature_condition_sweep, load_config, load_data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-c", "--config")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", default="results/sweep")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0],
                    help="repeat the sweep over these seeds (data and init)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    overrides = dict(kv.split("=", 1) for kv in args.set)
    gaps = []
    for seed in args.seeds:
        cfg = load_config(args.config, {**overrides, "seed": str(seed)})
        conv, full = feature_condition_sweep(cfg, load_data(cfg), bench=False)
        emit_report([conv, full], f"{args.out}/seed{seed}")
        mc, mf = np.mean(list(conv.accuracy.values())), np.mean(list(full.accuracy.values()))
        gaps.append(mf - mc)
        print(f"seed {seed}: conventional {mc:.2f}%  all {mf:.2f}%  "
              f"(single window {conv.window_accuracy:.2f}% vs {full.window_accuracy:.2f}%)")
    if len(gaps) > 1:
        print(f"mean gap {np.mean(gaps):+.2f} pp, std {np.std(gaps, ddof=1):.2f} pp over {len(gaps)} seeds")
    print(f"reports under {args.out}")


if __name__ == "__main__":
    main()
