#!/usr/bin/env python3
"""Run the scratch / multilingual / bilingual pretraining comparison.

Trains two parent checkpoints (source language and a four-language mixture)
and, per seed, three target-language models under equal step budgets, then
prints per-regime median MLM/NSP accuracies. With the defaults this takes
tens of minutes on a laptop CPU; pass --steps 1000 --seeds 0 1 for a quick
directional run.
"""

import argparse

from swapbert.regimes import RegimeComparisonConfig, run_regime_comparison


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--overlap", type=float, default=0.5)
    parser.add_argument("--policy", choices=["positional", "aligned"], default="positional")
    parser.add_argument("--out", default="comparison_out")
    args = parser.parse_args()

    cfg = RegimeComparisonConfig(
        steps=args.steps,
        seeds=tuple(args.seeds),
        overlap_fraction=args.overlap,
        swap_policy=args.policy,
    )
    report = run_regime_comparison(cfg, out_dir=args.out, log=print)
    print()
    print(report.render_text())
    print(f"report files written under {args.out}/")


if __name__ == "__main__":
    main()
