"""Window-size study: cost of N = 1..4 relative to N = 4 across observation probabilities.

    python scripts/run_fig2c.py --seeds 200 --out results/ [--plot]
"""

import argparse
from pathlib import Path

from wncs.experiments import (RATIO_COLUMNS, SUMMARY_COLUMNS, ratio_rows, rows_to_csv, run_fig2c,
                              summarize)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    def progress(r):
        print(f"p={r.value:<4} {r.policy:<10} J={r.batch.j_emp.mean():.4f}", flush=True)

    res = run_fig2c(seeds=range(args.seeds), horizon=args.horizon, progress=progress,
                    workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fig2c.csv").write_text(rows_to_csv(summarize(res), SUMMARY_COLUMNS))
    ratios = ratio_rows(res, "sliding:4")
    (out / "fig2c_ratios.csv").write_text(rows_to_csv(ratios, RATIO_COLUMNS))
    for r in ratios:
        print(f"p={r['value']:<4} {r['policy']:<10} ratio={r['ratio']:.5f} (se {r['ratio_se']:.5f})")
    if args.plot:
        from wncs.plotting import plot_fig2c

        plot_fig2c(ratios, out / "fig2c.png")


if __name__ == "__main__":
    main()
