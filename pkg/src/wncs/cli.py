"""Command-line entry point.

    wncs validate SCENARIO
    wncs run SCENARIO [--policy P] [--seeds K] [--out DIR]
    wncs trace SCENARIO --seed S [--policy P] [--out DIR]
    wncs fig2a|fig2b|fig2c [--seeds K] [--horizon T] [--out DIR]

Exit status: 0 on success, 2 for invalid scenarios or arguments, 3 when an
episode diverges.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .analytics import BREAKDOWN_COLUMNS, breakdown_table
from .config import ScenarioError, config_hash, load_scenario
from .config import parse_policy

log = logging.getLogger("wncs")

EXIT_INVALID = 2
EXIT_UNSTABLE = 3


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _emit(out: Path, stem: str, rows, columns, gnuplot: bool) -> None:
    _write(out, f"{stem}.csv", ex.rows_to_csv(rows, columns))
    if gnuplot:
        _write(out, f"{stem}.dat", ex.rows_to_dat(rows, columns))


def _progress(res: ex.CampaignResult) -> None:
    b = res.batch
    log.info("%s=%g %-10s J=%.4f (se %.4f)", res.sweep, res.value, res.policy,
             b.j_emp.mean(), ex.mean_and_se(b.j_emp)[1])


def _seeds(args, default):
    return range(args.seeds) if args.seeds is not None else default


def _check_stable(results) -> int:
    bad = [r for r in results if not r.batch.stable]
    for r in bad:
        print(f"unstable: {r.policy} at {r.sweep}={r.value} "
              f"({int(r.batch.unstable.sum())} seeds)", file=sys.stderr)
    return EXIT_UNSTABLE if bad else 0


def cmd_validate(args) -> int:
    cfg = load_scenario(args.scenario)
    print(f"ok {config_hash(cfg)}: {cfg.n_sensors} sensors, T={cfg.horizon}, "
          f"policy={cfg.policy}, {len(cfg.seeds)} seeds")
    return 0


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.horizon:
        cfg = cfg.with_(horizon=args.horizon)
    cfg = cfg.with_(seeds=tuple(_seeds(args, cfg.seeds)))
    policies = args.policy or [cfg.policy]
    for p in policies:
        parse_policy(p, cfg.window)
    results = ex.run_sweep([("scenario", 0.0, cfg)], policies, _progress, args.workers)
    rows = ex.summarize(results)
    for r in rows:
        print(f"{r['policy']:<10} J={r['mean_j']:.5f} +- {r['se_j']:.5f}  "
              f"J_analytic={r['mean_j_analytic']:.5f}  J_E={r['mean_je']:.5f}")
    if args.out:
        _emit(Path(args.out), "summary", rows, ex.SUMMARY_COLUMNS, args.gnuplot)
    return _check_stable(results)


def cmd_trace(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.horizon:
        cfg = cfg.with_(horizon=args.horizon)
    policy = args.policy or cfg.policy
    try:
        tr, j, je = ex.run_episode(cfg, policy, args.seed)
    except ex.InstabilityError as e:
        print(f"unstable: {e}", file=sys.stderr)
        return EXIT_UNSTABLE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_trace(tr, out / f"trace_seed{args.seed}.csv")
    e0 = (cfg.x0 - (cfg.x0 if cfg.init_estimate == "true" else 0.0)) ** 2
    sl = slice(1, None)
    rows = [{"t": 0, "tau": -1, "c_p": 0.0, "c_s": 0.0, "c_e": 0.0, "f": 0.0, "ms_error": e0}]
    rows += breakdown_table(tr["tau"][sl], tr["k"][sl], np.nan_to_num(tr["sigma_o2"][sl]),
                            cfg.system, e0, cfg.zero_age == "exact" or cfg.gain_mode == "minimizing")
    _emit(out, f"breakdown_seed{args.seed}", rows, BREAKDOWN_COLUMNS, args.gnuplot)
    print(f"seed {args.seed} policy {policy}: J={j:.5f} J_E={je:.5f}")
    return 0


def cmd_fig2a(args) -> int:
    rows = ex.run_fig2a(seeds=_seeds(args, range(100)), horizon=args.horizon or 10_000)
    for r in rows:
        print(f"sp2={r['sigma_p2']:<5} tau={r['tau']}  mc/thm={r['mc_ratio']:.4f} "
              f"(se {r['mc_ratio_se']:.4f})  baseline/thm={r['baseline_ratio']:.4f}")
    _emit(Path(args.out), "fig2a", rows, None, args.gnuplot)
    return 0


def cmd_fig2b(args) -> int:
    res = ex.run_fig2b(seeds=_seeds(args, range(200)), horizon=args.horizon or 10_000,
                       progress=_progress, workers=args.workers)
    out = Path(args.out)
    _emit(out, "fig2b", ex.summarize(res), ex.SUMMARY_COLUMNS, args.gnuplot)
    _emit(out, "fig2b_paired", ex.paired_rows(res, "sliding:4"), ex.PAIRED_COLUMNS, args.gnuplot)
    if args.plot:
        from .plotting import plot_fig2b
        plot_fig2b(ex.summarize(res), out / "fig2b.png")
    return _check_stable(res)


def cmd_fig2c(args) -> int:
    res = ex.run_fig2c(seeds=_seeds(args, range(200)), horizon=args.horizon or 10_000,
                       progress=_progress, workers=args.workers)
    out = Path(args.out)
    _emit(out, "fig2c", ex.summarize(res), ex.SUMMARY_COLUMNS, args.gnuplot)
    ratios = ex.ratio_rows(res, "sliding:4")
    _emit(out, "fig2c_ratios", ratios, ex.RATIO_COLUMNS, args.gnuplot)
    if args.plot:
        from .plotting import plot_fig2c
        plot_fig2c(ratios, out / "fig2c.png")
    return _check_stable(res)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wncs", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seeds=True):
        if seeds:
            p.add_argument("--seeds", type=int, help="use seeds 0..K-1")
        p.add_argument("--horizon", type=int, help="override the horizon T")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--gnuplot", action="store_true", help="also write .dat tables")

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="Monte-Carlo run of a scenario")
    p.add_argument("scenario")
    p.add_argument("--policy", action="append", help="policy name (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_run, out=None)

    p = sub.add_parser("trace", help="per-slot trace and error breakdown for one seed")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--policy")
    common(p, seeds=False)
    p.set_defaults(func=cmd_trace)

    for name, fn in (("fig2a", cmd_fig2a), ("fig2b", cmd_fig2b), ("fig2c", cmd_fig2c)):
        p = sub.add_parser(name, help=f"{name} campaign")
        common(p)
        if name != "fig2a":
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--plot", action="store_true", help="write a PNG (needs matplotlib)")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except ScenarioError as e:
        print("invalid scenario:", file=sys.stderr)
        for msg in e.errors:
            print(f"  - {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
