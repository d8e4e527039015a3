"""Seeded Monte-Carlo campaigns.

One function, :func:`run_batch`, runs every seed of a scenario in lockstep
(vectorized over episodes). Each slot t >= 1 goes

    sample sensors -> policy decides -> transmit -> deliver
    -> estimator update -> u = L x_hat -> plant step

Slot 0 only applies u(0) = L x_hat(0) with x_hat(0) given. Alongside the
empirical costs the estimator carries the analytic mean-square error along
the realized reception history, so every episode yields both sides of the
analytic-vs-empirical check.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analytics import core_terms, ms_error_path
from .config import (ScenarioConfig, SystemParams, config_hash, fig2b_scenario, fig2c_scenario,
                     fig2_system, validate_scenario)
from .estimator import DelayedKalman, compensate, predict, update
from .lqg import error_weight, solve_lqg
from .noise import NoiseStreams
from .plant import (IDLE, PlantState, TrafficState, channel_deliver, channel_transmit,
                    sample_sensors, step_plant)
from .schedulers import Policy, SlidingWindow, WindowModel, make_policy


class InstabilityError(RuntimeError):
    pass


@dataclass
class BatchResult:
    """Per-seed outcome of one (scenario, policy) pair."""

    policy: str
    seeds: tuple[int, ...]
    horizon: int
    j_emp: np.ndarray
    je_emp: np.ndarray
    je_analytic: np.ndarray
    j_analytic: np.ndarray
    unstable: np.ndarray
    config_hash: str = ""
    trace: dict | None = None

    @property
    def stable(self) -> bool:
        return not bool(np.any(self.unstable))


def _se(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")


def run_batch(cfg: ScenarioConfig, policy: str | Policy | None = None, seeds: Sequence[int] | None = None,
              trace: bool = False, solver: SlidingWindow | None = None) -> BatchResult:
    """Simulate ``cfg`` under ``policy`` for every seed, in lockstep."""
    validate_scenario(cfg)
    seeds = tuple(cfg.seeds if seeds is None else seeds)
    if isinstance(policy, Policy):
        pol = policy
    else:
        pol = make_policy(policy or cfg.policy, cfg, solver)
    p = cfg.system
    S, T = len(seeds), cfg.horizon
    sol = solve_lqg(p, cfg.x0, cfg.gain_form, horizon=T)
    L = sol.l_gain

    streams = NoiseStreams(seeds, p.sigma_p2, cfg.sigma_o2, cfg.p_obs)
    plant = PlantState(0, np.full(S, float(cfg.x0)))
    x_hat0 = np.full(S, float(cfg.x0) if cfg.init_estimate == "true" else 0.0)
    e0sq = (plant.x - x_hat0) ** 2
    est = DelayedKalman(p, x_hat0, cfg.age_cap + 1, cfg.gain_mode, cfg.gain,
                        initial_ms_error=e0sq, exact_zero_age=cfg.zero_age == "exact")
    traffic = TrafficState(S, cfg.sigma_o2, cfg.channel.t_d, cfg.age_cap)
    sched_hist = np.full((cfg.dp_age_cap, S), -1, dtype=np.int64)

    cost = np.zeros(S)
    esq = e0sq.copy()
    ms_sum = e0sq.copy()
    unstable = np.zeros(S, dtype=bool)
    rows = {k: np.zeros((T, S)) for k in ("x", "x_hat", "u", "d", "tau", "sigma_o2", "e2", "k")} if trace else None

    u = L * x_hat0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            if t > 0:
                observed, v = streams.sensing(t)
                sample_sensors(traffic, plant.x, t, observed, v)
                d = pol.decide(traffic, sched_hist, t, streams.policy_uniform(t))
                sent_age = np.where(d != IDLE, traffic.ages(t)[np.arange(S), np.maximum(d, 0)], -1)
                channel_transmit(traffic, d, t)
                sched_hist = np.roll(sched_hist, 1, axis=0)
                sched_hist[0] = sent_age
                received, y, tau, sig, _ = channel_deliver(traffic, t)
                x_hat, k_t = est.step(y, tau, sig, received)
                u = L * x_hat
                e = plant.x - x_hat
                esq += e * e
                ms_sum += est.ms_error
            else:
                d = np.full(S, IDLE)
                received, tau, sig = np.zeros(S, bool), np.zeros(S, int), np.zeros(S)
                x_hat, k_t = x_hat0, np.zeros(S)
            cost += p.q_weight * plant.x ** 2 + p.r_weight * u ** 2
            if trace:
                rows["x"][t], rows["x_hat"][t], rows["u"][t] = plant.x, x_hat, u
                rows["d"][t] = d
                rows["tau"][t] = np.where(received, tau, -1)
                rows["sigma_o2"][t] = np.where(received, sig, np.nan)
                rows["e2"][t] = (plant.x - x_hat) ** 2
                rows["k"][t] = np.where(received, k_t, 0.0)
            est.record_input(u)
            step_plant(plant, u, p, w=streams.process(t))
            bad = ~(np.isfinite(plant.x) & np.isfinite(cost) & np.isfinite(esq))
            if bad.any():
                # diverged episodes are flagged and parked at the origin
                unstable |= bad
                plant.x = np.where(bad, 0.0, plant.x)

    nan = np.where(unstable, np.nan, 1.0)
    je_an = ms_sum / T * nan
    j_an = sol.c0 + error_weight(sol, p, cfg.gain_form) * je_an
    name = pol.name if isinstance(pol, Policy) else str(policy)
    return BatchResult(name, seeds, T, cost / T * nan, esq / T * nan, je_an, j_an, unstable,
                       config_hash(cfg), rows)


def run_episode(cfg: ScenarioConfig, policy: str | None = None, seed: int = 0,
                solver: SlidingWindow | None = None):
    """Single-seed run: ``(trace, j_emp, je_emp)``; raises on instability."""
    res = run_batch(cfg, policy, [seed], trace=True, solver=solver)
    if not res.stable:
        raise InstabilityError(f"seed {seed}: state diverged")
    tr = {k: v[:, 0] for k, v in res.trace.items()}
    tr["t"] = np.arange(cfg.horizon)
    return tr, float(res.j_emp[0]), float(res.je_emp[0])


TRACE_COLUMNS = ("t", "x", "x_hat", "u", "d", "tau", "sigma_o2", "e2")


def write_trace(tr: dict, path_or_buf) -> None:
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for i in range(len(tr["t"])):
            row = []
            for c in TRACE_COLUMNS:
                v = tr[c][i]
                row.append(int(v) if c in ("t", "d", "tau") else repr(float(v)))
            w.writerow(row)
    finally:
        if own:
            fh.close()


# --- constant-delay estimation study ----------------------------------------

def constant_delay_history(tau: int, k: float, sigma_o2: float, horizon: int):
    """Reception history of a constant-delay run for slots 1..T-1.

    Slot t receives the sample generated at t - tau once that exists.
    """
    t = np.arange(1, horizon)
    got = t - tau >= 0
    return (np.where(got, tau, 0).astype(np.int64), np.where(got, k, 0.0),
            np.where(got, sigma_o2, 0.0))


def constant_delay_je(params: SystemParams, tau: int, sigma_o2: float, k: float, horizon: int,
                      exact_zero_age: bool = False) -> float:
    """Recursion value of J_E(T) for the constant-delay run (zero initial error)."""
    taus, gains, sig = constant_delay_history(tau, k, sigma_o2, horizon)
    ms = ms_error_path(taus, gains, sig, params, 0.0, exact_zero_age)
    return float(ms.sum() / horizon)


def run_constant_delay(params: SystemParams, tau: int, sigma_o2: float, k: float, horizon: int,
                       seeds: Sequence[int], x0: float = 1.0, exact_zero_age: bool = False):
    """Every slot t >= max(1, tau) delivers y = x(t - tau) + v(t - tau).

    Returns ``(mc, analytic)``: per-seed time-average of e(t)^2 over
    t = 0..T-1, and the recursion evaluated on the same reception history.
    """
    S, T = len(seeds), horizon
    sol = solve_lqg(params, x0)
    streams = NoiseStreams(seeds, params.sigma_p2, [sigma_o2], [1.0])
    plant = PlantState(0, np.full(S, float(x0)))
    x_hat = plant.x.copy()
    ring = np.zeros((tau + 1, S))  # y generated at slot g sits at g % (tau + 1)
    u_hist = np.zeros((tau + 2, S))
    esq = np.zeros(S)
    u = sol.l_gain * x_hat
    for t in range(T):
        _, v = streams.sensing(t)
        ring[t % (tau + 1)] = plant.x + v[:, 0]
        if t > 0:
            x_minus = predict(x_hat, u_hist[0], params.a, params.b)
            if t - tau >= 0:
                y = ring[(t - tau) % (tau + 1)]
                x_star = compensate(x_hat, u_hist, tau, params.a, params.b)
                x_hat = update(x_minus, x_star, y, tau, k, params.a)
            else:
                x_hat = x_minus
            u = sol.l_gain * x_hat
            e = plant.x - x_hat
            esq += e * e
        u_hist = np.roll(u_hist, 1, axis=0)
        u_hist[0] = u
        step_plant(plant, u, params, w=streams.process(t))
    return esq / T, constant_delay_je(params, tau, sigma_o2, k, T, exact_zero_age)


def run_fig2a(sigma_p2_list=(0.01, 0.02, 0.05), delays=range(0, 7), seeds=range(100),
              horizon=10_000, sigma_o2=0.05, k=0.5, a=1.3, b=1.0) -> list[dict]:
    """Monte-Carlo / analytic and baseline / analytic ratios per (sigma_p2, tau).

    ``mc_ratio`` uses the plain core function; ``mc_ratio_exact`` the
    variant with the zero-age factor (they differ only at tau = 0).
    """
    from .analytics import f_corollary1, f_prior_baseline

    rows = []
    for sp2 in sigma_p2_list:
        params = SystemParams(a, b, sp2)
        for tau in delays:
            mc, an = run_constant_delay(params, tau, sigma_o2, k, horizon, list(seeds))
            an_exact = constant_delay_je(params, tau, sigma_o2, k, horizon, True)
            full = f_corollary1(tau, [tau] * max(tau, 1), k, sigma_o2, params)
            base = f_prior_baseline(tau, [tau] * max(tau, 1), k, sigma_o2, params)
            rows.append({
                "sigma_p2": sp2, "tau": tau, "seeds": len(mc),
                "mc_mean": float(mc.mean()), "mc_se": _se(mc), "theorem": float(an),
                "mc_ratio": float(mc.mean() / an), "mc_ratio_se": _se(mc) / float(an),
                "mc_ratio_exact": float(mc.mean() / an_exact),
                "baseline_ratio": float(base.f / full.f),
            })
    return rows


# --- scheduling campaigns ----------------------------------------------------

@dataclass
class CampaignResult:
    """One configuration of a sweep: per-seed costs plus metadata."""

    policy: str
    sweep: str
    value: float
    batch: BatchResult

    @property
    def seeds(self):
        return self.batch.seeds

    def row(self) -> dict:
        b = self.batch
        return {
            "config_hash": b.config_hash, "policy": self.policy, "sweep": self.sweep,
            "value": self.value, "horizon": b.horizon, "seeds": len(b.seeds),
            "mean_j": float(b.j_emp.mean()), "se_j": _se(b.j_emp),
            "mean_j_analytic": float(b.j_analytic.mean()), "se_j_analytic": _se(b.j_analytic),
            "mean_je": float(b.je_emp.mean()), "mean_je_analytic": float(b.je_analytic.mean()),
            "unstable": int(b.unstable.sum()),
        }


def paired_difference(a: CampaignResult, b: CampaignResult, attr: str = "j_emp") -> tuple[float, float]:
    """Mean and standard error of a - b over common seeds."""
    if a.seeds != b.seeds:
        raise ValueError("paired comparison needs identical seed lists")
    diff = getattr(a.batch, attr) - getattr(b.batch, attr)
    return float(diff.mean()), _se(diff)


def _run_one(cfg: ScenarioConfig, pol: str) -> BatchResult:
    return run_batch(cfg, pol)


def run_sweep(configs: Iterable[tuple[str, float, ScenarioConfig]], policies: Sequence[str],
              progress=None, workers: int = 1) -> list[CampaignResult]:
    """Every policy on every configuration, ordered by (configuration, policy).

    With ``workers > 1`` the (configuration, policy) jobs go to a process
    pool; output order does not depend on completion order.
    """
    configs = list(configs)
    jobs = [(sweep, value, cfg, pol) for sweep, value, cfg in configs for pol in policies]
    out = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_one, cfg, pol) for _, _, cfg, pol in jobs]
            for (sweep, value, _, pol), fut in zip(jobs, futs):
                out.append(CampaignResult(pol, sweep, value, fut.result()))
                if progress:
                    progress(out[-1])
        return out
    solvers = {}
    for sweep, value, cfg, pol in jobs:
        solver = solvers.setdefault(id(cfg), SlidingWindow(WindowModel.from_scenario(cfg)))
        out.append(CampaignResult(pol, sweep, value, run_batch(cfg, pol, solver=solver)))
        if progress:
            progress(out[-1])
    return out


FIG2B_SWEEP = (0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0)
FIG2B_POLICIES = ("sliding:4", "age-min", "var-min", "random")


def run_fig2b(sweep=FIG2B_SWEEP, seeds=range(200), horizon=10_000, policies=FIG2B_POLICIES,
              progress=None, workers: int = 1) -> list[CampaignResult]:
    cfgs = [("sigma_o2_1", v, fig2b_scenario(v, 0.4, seeds=tuple(seeds), horizon=horizon))
            for v in sweep]
    return run_sweep(cfgs, policies, progress, workers)


FIG2C_SWEEP = (0.2, 0.4, 0.6, 0.8)


def run_fig2c(p_list=FIG2C_SWEEP, windows=(1, 2, 3, 4), seeds=range(200), horizon=10_000,
              progress=None, workers: int = 1) -> list[CampaignResult]:
    cfgs = [("p", p, fig2c_scenario(p, seeds=tuple(seeds), horizon=horizon)) for p in p_list]
    return run_sweep(cfgs, [f"sliding:{n}" for n in windows], progress, workers)


Z95 = 1.959963984540054


def _group(results: Sequence[CampaignResult]) -> dict:
    by = {}
    for r in results:
        by.setdefault((r.sweep, r.value), {})[r.policy] = r
    return by


PAIRED_COLUMNS = ("sweep", "value", "policy", "reference", "mean_diff", "se_diff", "ci_low", "ci_high")


def paired_rows(results: Sequence[CampaignResult], reference: str) -> list[dict]:
    """Paired J difference (policy - reference) with 95% normal CI per sweep point."""
    rows = []
    for (sweep, value), pols in _group(results).items():
        ref = pols.get(reference)
        if ref is None:
            continue
        for name, r in pols.items():
            if name == reference:
                continue
            m, se = paired_difference(r, ref)
            rows.append({"sweep": sweep, "value": value, "policy": name, "reference": reference,
                         "mean_diff": m, "se_diff": se, "ci_low": m - Z95 * se,
                         "ci_high": m + Z95 * se})
    return rows


RATIO_COLUMNS = ("value", "policy", "mean_j", "ratio", "ratio_se")


def ratio_rows(results: Sequence[CampaignResult], reference: str) -> list[dict]:
    """Mean J of each policy divided by the reference's, per sweep point.

    The standard error uses the paired per-seed difference over the
    reference mean.
    """
    rows = []
    for (_, value), pols in _group(results).items():
        ref = pols[reference]
        base = float(ref.batch.j_emp.mean())
        for name, r in pols.items():
            m, se = paired_difference(r, ref) if name != reference else (0.0, 0.0)
            rows.append({"value": value, "policy": name, "mean_j": float(r.batch.j_emp.mean()),
                         "ratio": 1.0 + m / base, "ratio_se": se / base})
    return rows


def rows_to_dat(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    """Whitespace-separated table with a ``#`` header line (gnuplot friendly)."""
    columns = list(columns or rows[0].keys())
    out = ["# " + " ".join(columns)]
    for r in rows:
        out.append(" ".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in columns))
    return "\n".join(out) + "\n"


SUMMARY_COLUMNS = ("config_hash", "policy", "sweep", "value", "horizon", "seeds", "mean_j", "se_j",
                   "mean_j_analytic", "se_j_analytic", "mean_je", "mean_je_analytic", "unstable")


def summarize(results: Sequence[CampaignResult]) -> list[dict]:
    if not results:
        raise ValueError("nothing to summarize")
    horizons = {r.batch.horizon for r in results}
    if len(horizons) > 1:
        raise ValueError(f"cannot aggregate mixed horizons {sorted(horizons)}")
    return [r.row() for r in results]


def mean_and_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), _se(v)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    columns = list(columns or rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in columns})
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    def conv(v):
        for typ in (int, float):
            try:
                return typ(v)
            except ValueError:
                pass
        return v

    return [{k: conv(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]
