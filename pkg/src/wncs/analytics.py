"""Mean-square estimation error as a function of the age and noise processes.

The per-slot error injection (the *core function*) is

    f(t) = C_p + C_s + C_e

    C_p = sp2 + sum_{l=1}^{tau-1} a^{2l} k(t)^2 sp2
    C_s = k(t)^2 a^{2 tau} so2(t)
    C_e = 2 sum_{l=2}^{tau} a^{l-1} k(t) prod_{j=0}^{l-2} a(1-k(t-j)) sp2
        + 2 sum_{n=1}^{tau-2} k(t-n) k(t) prod_{j=0}^{n-1} a(1-k(t-j))
              sum_{l=1}^{min(tau-n, tau(t-n))-1} a^{2l+n} sp2

with tau = tau(t), and the mean-square error obeys

    E[e^2(t)] = a^2 (1-k(t))^2 E[e^2(t-1)] + f(t).

C_e is the correlation between the running error and process noise that is
still "in flight" inside a delayed observation; dropping it gives the
baseline evaluator :func:`f_prior_baseline`, which underestimates the error.

At tau = 0 the plain C_p keeps the full sp2 for w(t-1), although a
zero-age update also corrects w(t-1) (coefficient 1-k). ``exact_zero_age``
applies that factor; the default is the plain form.

Everything here is vectorised: ages and gains arrive as ``(depth, *batch)``
arrays, most recent slot first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemParams
from .history import ReceptionHistory


@dataclass(frozen=True)
class CoreFunctionBreakdown:
    c_p: np.ndarray | float
    c_s: np.ndarray | float
    c_e: np.ndarray | float

    @property
    def f(self):
        return self.c_p + self.c_s + self.c_e

    def as_floats(self) -> "CoreFunctionBreakdown":
        return CoreFunctionBreakdown(float(self.c_p), float(self.c_s), float(self.c_e))


def _geo2(a: float, m_max: int) -> np.ndarray:
    """``out[m] = sum_{l=1}^{m-1} a^{2l}`` for m = 0..m_max (0 when empty)."""
    out = np.zeros(max(m_max, 1) + 1)
    acc = 0.0
    for m in range(2, m_max + 1):
        acc += a ** (2 * (m - 1))
        out[m] = acc
    return out


def core_terms(tau, gains, sigma_o2, a: float, sigma_p2: float,
               exact_zero_age: bool = False) -> CoreFunctionBreakdown:
    """Core-function components from a most-recent-first lookback.

    ``tau[n]`` and ``gains[n]`` describe slot t-n. The lookback must reach
    back ``tau[0] - 1`` slots; entries with zero gain are no-update slots.
    """
    tau = np.asarray(tau, dtype=np.int64)
    k = np.asarray(gains, dtype=float)
    t0, k0 = tau[0], k[0]
    tmax = int(np.max(t0)) if t0.size else 0
    need = tmax if exact_zero_age else tmax - 1
    if need > tau.shape[0]:
        raise ValueError(f"history depth {tau.shape[0]} too short for age {tmax}")
    geo = _geo2(a, tmax)

    beta0 = np.where(t0 == 0, 1.0 - k0, 1.0) if exact_zero_age else 1.0
    c_p = sigma_p2 * (beta0 ** 2 + k0 ** 2 * geo[t0])
    c_s = k0 ** 2 * a ** (2.0 * t0) * np.asarray(sigma_o2, dtype=float)

    alpha = a * (1.0 - k)
    first = np.zeros_like(k0)
    prod = np.ones_like(k0)
    for l in range(2, tmax + 1):
        prod = prod * alpha[l - 2]
        term = a ** (l - 1) * prod
        if exact_zero_age:
            term = term * np.where(tau[l - 1] == 0, 1.0 - k[l - 1], 1.0)
        first = first + np.where(l <= t0, term, 0.0)

    second = np.zeros_like(k0)
    prod = np.ones_like(k0)
    for n in range(1, tmax - 1):
        prod = prod * alpha[n - 1]
        m = np.clip(np.minimum(t0 - n, tau[n]), 0, tmax)
        term = k[n] * prod * a ** n * geo[m]
        second = second + np.where(n <= t0 - 2, term, 0.0)

    c_e = 2.0 * k0 * sigma_p2 * (first + second)
    return CoreFunctionBreakdown(c_p, c_s, c_e)


def f_theorem1(history: ReceptionHistory, params: SystemParams, t: int | None = None,
               exact_zero_age: bool = False) -> CoreFunctionBreakdown:
    """Core function at the latest slot recorded in ``history``."""
    if t is not None and history.last_slot != t:
        raise ValueError(f"history ends at slot {history.last_slot}, not {t}")
    tau, k, sig, _ = history.lookback()
    br = core_terms(tau, k, sig[0], params.a, params.sigma_p2, exact_zero_age)
    return br.as_floats() if not history.batch else br


def _check_constant_gain(a: float, k: float) -> None:
    if not abs(a * (1 - k)) < 1:
        raise ValueError("constant-gain closed form requires |a(1-k)|<1")
    if a * a == 1:
        raise ValueError("constant-gain closed form requires a^2 != 1")
    if a * a * (1 - k) == 1:
        raise ValueError("constant-gain closed form requires a^2(1-k) != 1")


def f_corollary1(tau_now: int, past_ages, k: float, sigma_o2: float,
                 params: SystemParams) -> CoreFunctionBreakdown:
    """Closed-form core function for a constant gain ``k`` at every slot.

    ``past_ages[n-1]`` is tau(t-n). Geometric sums use the closed forms;
    empty sums (tau <= 1, or a past age below 2) are zero.
    """
    a, sp2 = params.a, params.sigma_p2
    _check_constant_gain(a, k)
    a2 = a * a
    r = a2 * (1 - k)

    def geo(m):  # sum_{l=1}^{m-1} a^{2l}
        return (a2 ** m - a2) / (a2 - 1) if m >= 2 else 0.0

    c_p = k * k * sp2 * geo(tau_now) + sp2
    c_s = k * k * sigma_o2 * a2 ** tau_now
    c_e = 0.0
    if tau_now >= 2:
        c_e = 2 * (r ** tau_now - r) * k * sp2 / (r - 1)
        for n in range(1, tau_now - 1):
            m = min(tau_now - n, int(past_ages[n - 1]))
            c_e += 2 * k * k * sp2 * r ** n / (a2 - 1) * (a2 ** m - a2) if m >= 2 else 0.0
    return CoreFunctionBreakdown(c_p, c_s, c_e)


def f_prior_baseline(tau_now: int, past_ages, k: float, sigma_o2: float,
                     params: SystemParams) -> CoreFunctionBreakdown:
    """Evaluator that ignores the error/process-noise correlation (C_e = 0)."""
    br = f_corollary1(tau_now, past_ages, k, sigma_o2, params)
    return CoreFunctionBreakdown(br.c_p, br.c_s, 0.0)


def error_recursion_step(prev_ms_error, f, k_t, a: float):
    """``a^2 (1-k)^2 prev + f``."""
    return (a * (1.0 - k_t)) ** 2 * prev_ms_error + f


def _padded_lookbacks(taus, gains, depth):
    taus = np.asarray(taus, dtype=np.int64)
    gains = np.asarray(gains, dtype=float)
    pad = ((depth, 0),) + ((0, 0),) * (taus.ndim - 1)
    return np.pad(taus, pad), np.pad(gains, pad)


def breakdown_path(taus, gains, sigma_o2s, params: SystemParams, initial_ms_error=0.0,
                   exact_zero_age: bool = False):
    """Per-slot components and mean-square error along a realized history.

    Inputs are chronological, shape ``(T, *batch)``; slot 0 of the arrays is
    the first slot whose error is propagated from ``initial_ms_error``.
    Returns ``(c_p, c_s, c_e, ms)`` arrays of the same shape.
    """
    taus = np.asarray(taus, dtype=np.int64)
    T = taus.shape[0]
    depth = max(int(taus.max(initial=0)), 2) + 1
    tp, kp = _padded_lookbacks(taus, gains, depth)
    sig = np.asarray(sigma_o2s, dtype=float)
    out = np.zeros((4,) + taus.shape)
    prev = np.broadcast_to(np.asarray(initial_ms_error, dtype=float), taus.shape[1:])
    for t in range(T):
        sl = slice(t + 1, t + depth + 1)
        br = core_terms(tp[sl][::-1], kp[sl][::-1], sig[t], params.a, params.sigma_p2,
                        exact_zero_age)
        prev = error_recursion_step(prev, br.f, kp[t + depth], params.a)
        out[0, t], out[1, t], out[2, t], out[3, t] = br.c_p, br.c_s, br.c_e, prev
    return out[0], out[1], out[2], out[3]


def ms_error_path(taus, gains, sigma_o2s, params: SystemParams, initial_ms_error=0.0,
                  exact_zero_age: bool = False) -> np.ndarray:
    return breakdown_path(taus, gains, sigma_o2s, params, initial_ms_error, exact_zero_age)[3]


def j_e_time_average(taus, gains, sigma_o2s, params: SystemParams, initial_ms_error=0.0,
                     exact_zero_age: bool = False):
    """Time-average mean-square error over the given slots.

    Evaluates the double sum over (t, q) through the one-step recursion,
    which is O(T * tau_max) and free of the large partial products.
    """
    ms = ms_error_path(taus, gains, sigma_o2s, params, initial_ms_error, exact_zero_age)
    return ms.mean(axis=0)


def j_e_from_history(records, params: SystemParams, initial_ms_error=0.0,
                     exact_zero_age: bool = False) -> float:
    """:func:`j_e_time_average` over a list of :class:`Reception` records."""
    recs = records.records() if isinstance(records, ReceptionHistory) else list(records)
    taus = [r.tau if r.updated else 0 for r in recs]
    gains = [r.k if r.updated else 0.0 for r in recs]
    sig = [r.sigma_o2 if r.updated else 0.0 for r in recs]
    return float(j_e_time_average(taus, gains, sig, params, initial_ms_error, exact_zero_age))


def stationary_factor(a: float, k: float) -> float:
    g = (a * (1 - k)) ** 2
    if not g < 1:
        raise ValueError("steady state requires |a(1-k)|<1")
    return 1.0 / (1.0 - g)


def j_e_steady(f_stream, k: float, a: float) -> float:
    """Infinite-horizon average error for a constant gain: mean(f) / (1 - (a(1-k))^2)."""
    return float(np.mean(f_stream)) * stationary_factor(a, k)


BREAKDOWN_COLUMNS = ("t", "tau", "c_p", "c_s", "c_e", "f", "ms_error")


def breakdown_table(taus, gains, sigma_o2s, params: SystemParams, initial_ms_error=0.0,
                    exact_zero_age: bool = False, t0: int = 1) -> list[dict]:
    """One row per slot (single episode), for CSV export.

    Slots without an update carry ``tau = -1`` in the output and k = 0 in
    the recursion. ``t0`` labels the first slot.
    """
    taus = np.asarray(taus, dtype=np.int64)
    gains = np.asarray(gains, dtype=float)
    upd = gains > 0
    t_in = np.where(upd, taus, 0)
    c_p, c_s, c_e, ms = breakdown_path(t_in, gains, sigma_o2s, params, initial_ms_error,
                                       exact_zero_age)
    return [
        {"t": t0 + i, "tau": int(taus[i]) if upd[i] else -1, "c_p": float(c_p[i]),
         "c_s": float(c_s[i]), "c_e": float(c_e[i]), "f": float(c_p[i] + c_s[i] + c_e[i]),
         "ms_error": float(ms[i])}
        for i in range(taus.shape[0])
    ]
