"""Estimation-error study: Monte-Carlo and prior-baseline ratios to the recursion.

    python scripts/run_fig2a.py --seeds 100 --out results/
"""

import argparse
from pathlib import Path

from wncs.experiments import rows_to_csv, rows_to_dat, run_fig2a


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    rows = run_fig2a(seeds=range(args.seeds), horizon=args.horizon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fig2a.csv").write_text(rows_to_csv(rows))
    (out / "fig2a.dat").write_text(rows_to_dat(rows))
    print(f"{'sp2':>6} {'tau':>3} {'mc/thm':>8} {'se':>7} {'base/thm':>9}")
    for r in rows:
        print(f"{r['sigma_p2']:>6} {r['tau']:>3} {r['mc_ratio']:>8.4f} {r['mc_ratio_se']:>7.4f} "
              f"{r['baseline_ratio']:>9.4f}")


if __name__ == "__main__":
    main()
