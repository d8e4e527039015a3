"""Policy comparison over the noise variance of the always-on sensor.

    python scripts/run_fig2b.py --seeds 200 --out results/ [--plot]
"""

import argparse
from pathlib import Path

from wncs.experiments import (PAIRED_COLUMNS, SUMMARY_COLUMNS, paired_rows, rows_to_csv,
                              run_fig2b, summarize)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    def progress(r):
        print(f"sigma1={r.value:<5} {r.policy:<10} J={r.batch.j_emp.mean():.4f}", flush=True)

    res = run_fig2b(seeds=range(args.seeds), horizon=args.horizon, progress=progress,
                    workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = summarize(res)
    (out / "fig2b.csv").write_text(rows_to_csv(rows, SUMMARY_COLUMNS))
    (out / "fig2b_paired.csv").write_text(rows_to_csv(paired_rows(res, "sliding:4"), PAIRED_COLUMNS))
    if args.plot:
        from wncs.plotting import plot_fig2b

        plot_fig2b(rows, out / "fig2b.png")


if __name__ == "__main__":
    main()
