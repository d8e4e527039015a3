"""Transmission scheduling policies.

Baselines (age-minimal, variance-minimal, random) look only at the current
traffic. The sliding-window policy solves an N-step dynamic program over
per-sensor ages at every slot and applies the first action; the greedy
policy is its N = 1 case.

DP model
--------
A state holds, per sensor, the age at the controller of its untransmitted
observation, or ``None`` when nothing is eligible. Sending sensor d costs
``w(r) * f(Delta_d, sigma2_d, history)`` where r is the number of stages
left (this one included) and ``w(r) = sum_{m=0}^{r} gamma^m`` with
``gamma = (a(1-k))^2``. Between stages every sensor independently
regenerates with probability p_m (age t_d, eligible) or ages by one slot.

The history is the sequence of ages sent in earlier slots (most recent
first, ``-1`` for an idle slot); the reception at slot s+t_d belongs to the
packet scheduled at s, so working in scheduling order is exact for any t_d.
Only the last ``amax - 1`` entries (amax = largest age that can be sent in
the window's first stage) can influence the cost, each only up to
``amax - n``; keys are compressed accordingly, which makes the value
function shareable across slots and episodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .analytics import core_terms
from .config import ScenarioConfig, SystemParams, parse_policy
from .history import ReceptionHistory
from .plant import IDLE, ContractViolation, TrafficState

_REL_TIE = 1e-12

Ages = tuple  # tuple[int | None, ...]


@dataclass(frozen=True)
class PolicyDecision:
    sensor: int | None
    value: float | None = None

    @property
    def idle(self) -> bool:
        return self.sensor is None


# --- baselines on a single state -------------------------------------------

def _eligible(ages: Ages) -> list[int]:
    return [m for m, g in enumerate(ages) if g is not None]


def age_minimal(ages: Ages, sigma_o2) -> PolicyDecision:
    """Smallest age; among those the most precise sensor, then lowest index."""
    el = _eligible(ages)
    if not el:
        return PolicyDecision(None)
    return PolicyDecision(min(el, key=lambda m: (ages[m], sigma_o2[m], m)))


def variance_minimal(ages: Ages, sigma_o2) -> PolicyDecision:
    """Most precise sensor; ties by smaller age, then lowest index."""
    el = _eligible(ages)
    if not el:
        return PolicyDecision(None)
    return PolicyDecision(min(el, key=lambda m: (sigma_o2[m], ages[m], m)))


def random_policy(ages: Ages, u: float) -> PolicyDecision:
    """Uniform over eligible sensors; ``u`` is a uniform draw in [0, 1)."""
    el = _eligible(ages)
    if not el:
        return PolicyDecision(None)
    return PolicyDecision(el[min(int(u * len(el)), len(el) - 1)])


# --- DP model ---------------------------------------------------------------

@dataclass(frozen=True)
class WindowModel:
    """Everything the DP needs: plant/gain constants and the sensor set."""

    a: float
    sigma_p2: float
    k: float
    sigma_o2: tuple[float, ...]
    p_obs: tuple[float, ...]
    t_d: int
    age_cap: int = 16
    exact_zero_age: bool = False

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig) -> "WindowModel":
        return cls(cfg.system.a, cfg.system.sigma_p2, cfg.gain, cfg.sigma_o2, cfg.p_obs,
                   cfg.channel.t_d, cfg.dp_age_cap, cfg.zero_age == "exact")

    @property
    def gamma(self) -> float:
        return (self.a * (1 - self.k)) ** 2

    def weight(self, remaining: int) -> float:
        return sum(self.gamma ** m for m in range(remaining + 1))


def dp_transition(ages: Ages, d: int | None, model: WindowModel) -> list[tuple[float, Ages]]:
    """Successor states after sending ``d`` (``None`` = idle), with probabilities."""
    if d is not None and ages[d] is None:
        raise ContractViolation(f"sensor {d} is not eligible")
    stay = []
    for m, g in enumerate(ages):
        if g is None or m == d:
            stay.append(None)
        else:
            stay.append(min(g + 1, model.age_cap))
    options = []
    for m, p in enumerate(model.p_obs):
        if p >= 1.0:
            options.append(((1.0, model.t_d),))
        else:
            options.append(((p, model.t_d), (1.0 - p, stay[m])))
    out = []
    for combo in itertools.product(*options):
        prob = 1.0
        for q, _ in combo:
            prob *= q
        out.append((prob, tuple(g for _, g in combo)))
    return out


def _amax(ages: Ages, t_d: int) -> int:
    amax = t_d
    for g in ages:
        if g is not None and g > amax:
            amax = g
    return amax


def compress_history(ages: Ages, hist, model: WindowModel) -> tuple[int, ...]:
    """Part of ``hist`` (most recent first) that can affect the window cost."""
    amax = _amax(ages, model.t_d)
    keep = amax - 1
    h = list(hist[:keep])
    if len(h) < keep:
        h += [-1] * (keep - len(h))
    cap = amax - 1
    for i, x in enumerate(h):
        if x > cap:
            h[i] = cap
        cap -= 1
    return tuple(h)


class SlidingWindow:
    """Memoized backward induction over the window.

    Values depend only on (stages left, ages, compressed history), so one
    instance serves every slot and episode of a scenario.
    """

    def __init__(self, model: WindowModel):
        self.model = model
        self._v: dict = {}
        self._f: dict = {}
        self._root: dict = {}
        self._w = {}
        self._succ: dict = {}

    def weight(self, remaining: int) -> float:
        w = self._w.get(remaining)
        if w is None:
            w = self._w[remaining] = self.model.weight(remaining)
        return w

    def core_f(self, tau: int, sigma_o2: float, hist: tuple[int, ...]) -> float:
        """f for sending an age-``tau`` packet after ``hist`` (most recent first)."""
        m = self.model
        sub = compress_history((tau,), hist, m)[: tau - 1] if tau >= 2 else ()
        key = (tau, sub)
        base = self._f.get(key)
        if base is None:
            taus = np.array([tau] + [max(h, 0) for h in sub] + [0], dtype=np.int64)
            ks = np.array([m.k] + [m.k if h >= 0 else 0.0 for h in sub] + [0.0])
            br = core_terms(taus, ks, 0.0, m.a, m.sigma_p2, m.exact_zero_age)
            base = self._f[key] = float(br.c_p + br.c_e)
        return base + m.k ** 2 * m.a ** (2 * tau) * sigma_o2

    def stage_cost(self, ages: Ages, d: int | None, hist, remaining: int) -> float:
        if d is None:
            return self.weight(remaining) * self.model.sigma_p2
        return self.weight(remaining) * self.core_f(ages[d], self.model.sigma_o2[d], hist)

    def _successors(self, ages: Ages, d):
        key = (ages, d)
        s = self._succ.get(key)
        if s is None:
            s = self._succ[key] = dp_transition(ages, d, self.model)
        return s

    def q_values(self, ages: Ages, hist, remaining: int) -> list[tuple[int | None, float]]:
        """Expected window cost of each first action, ``remaining`` stages."""
        hist = compress_history(ages, hist, self.model)
        actions = _eligible(ages) or [None]
        out = []
        for d in actions:
            q = self.stage_cost(ages, d, hist, remaining)
            if remaining > 1:
                sent = -1 if d is None else ages[d]
                nxt_hist = (sent,) + hist
                for prob, nxt in self._successors(ages, d):
                    q += prob * self.value(nxt, nxt_hist, remaining - 1)
            out.append((d, q))
        return out

    def value(self, ages: Ages, hist, remaining: int) -> float:
        if remaining <= 0:
            return 0.0
        hist = compress_history(ages, hist, self.model)
        key = (remaining, ages, hist)
        v = self._v.get(key)
        if v is None:
            v = self._v[key] = min(q for _, q in self.q_values(ages, hist, remaining))
        return v

    def decide(self, ages: Ages, hist, window: int) -> PolicyDecision:
        cap = self.model.age_cap
        ages = tuple(None if g is None else (g if g < cap else cap) for g in ages)
        hist = compress_history(ages, hist, self.model)
        key = (window, ages, hist)
        hit = self._root.get(key)
        if hit is None:
            qs = self.q_values(ages, hist, window)
            hit = self._root[key] = _argmin_tiebreak(qs, self.model.sigma_o2)
        return hit


def _argmin_tiebreak(qs, sigma_o2) -> PolicyDecision:
    best = min(q for _, q in qs)
    tol = _REL_TIE * max(abs(best), 1e-300)
    ties = [d for d, q in qs if q <= best + tol]
    if ties == [None]:
        return PolicyDecision(None, best)
    d = min(ties, key=lambda m: (sigma_o2[m], m))
    return PolicyDecision(d, best)


def sliding_window_decide(ages: Ages, hist, window: int, model: WindowModel,
                          solver: SlidingWindow | None = None) -> PolicyDecision:
    """First action of the N-step window problem and its expected cost."""
    if window < 1:
        raise ValueError("window size must be >= 1")
    solver = solver or SlidingWindow(model)
    return solver.decide(ages, hist, window)


def greedy_decide(ages: Ages, hist, model: WindowModel, params: SystemParams | None = None
                  ) -> PolicyDecision:
    """Minimize the one-stage weighted core function.

    Builds the reception history explicitly and evaluates it with the
    analytics module, independently of the DP's compressed keys.
    """
    from .analytics import f_theorem1

    el = _eligible(ages)
    if not el:
        return PolicyDecision(None, model.weight(1) * model.sigma_p2)
    ages = tuple(None if g is None else min(g, model.age_cap) for g in ages)
    params = params or SystemParams(model.a, 1.0, model.sigma_p2)
    depth = max(len(hist), max(ages[d] for d in el)) + 2
    qs = []
    for d in el:
        h = ReceptionHistory(depth)
        for n, past in enumerate(reversed(list(hist))):
            h.push(n, max(past, 0), 0.0, model.k if past >= 0 else 0.0, past >= 0)
        h.push(len(hist), ages[d], model.sigma_o2[d], model.k, True)
        qs.append((d, model.weight(1) * f_theorem1(h, params, exact_zero_age=model.exact_zero_age).f))
    return _argmin_tiebreak(qs, model.sigma_o2)


# --- batch policies used by the simulator ----------------------------------

class Policy:
    name = "policy"

    def decide(self, traffic: TrafficState, sched_hist: np.ndarray, t: int, u: np.ndarray) -> np.ndarray:
        """Sensor index per episode, or ``IDLE``. ``sched_hist`` is
        ``(H, S)``: ages sent in slots t-1, t-2, ... (-1 idle)."""
        raise NotImplementedError


class _KeyedPolicy(Policy):
    """Vectorized baselines: lexicographic minimum of a per-sensor score."""

    def __init__(self, sigma_o2):
        s = np.asarray(sigma_o2, dtype=float)
        self.sigma_o2 = s
        m = len(s)
        order = sorted(range(m), key=lambda i: (s[i], i))
        self._rank = np.empty(m, dtype=np.int64)
        self._rank[order] = np.arange(m)
        uniq = sorted(set(s.tolist()))
        self._vgroup = np.array([uniq.index(v) for v in s], dtype=np.int64)
        self._m = m


class AgeMinimal(_KeyedPolicy):
    name = "age-min"

    def decide(self, traffic, sched_hist, t, u):
        el = traffic.eligible(t)
        score = traffic.ages(t) * self._m + self._rank
        score = np.where(el, score, np.iinfo(np.int64).max)
        return np.where(el.any(axis=1), score.argmin(axis=1), IDLE)


class VarianceMinimal(_KeyedPolicy):
    name = "var-min"

    def decide(self, traffic, sched_hist, t, u):
        el = traffic.eligible(t)
        big = traffic.age_cap + traffic.t_d + 2
        score = (self._vgroup * big + traffic.ages(t)) * self._m + np.arange(self._m)
        score = np.where(el, score, np.iinfo(np.int64).max)
        return np.where(el.any(axis=1), score.argmin(axis=1), IDLE)


class RandomPolicy(Policy):
    name = "random"

    def decide(self, traffic, sched_hist, t, u):
        el = traffic.eligible(t)
        cnt = el.sum(axis=1)
        pick = np.minimum((u * cnt).astype(np.int64), np.maximum(cnt - 1, 0))
        # index of the (pick+1)-th eligible sensor
        csum = np.cumsum(el, axis=1)
        d = (csum <= pick[:, None]).sum(axis=1)
        return np.where(cnt > 0, d, IDLE)


class WindowPolicy(Policy):
    def __init__(self, model: WindowModel, window: int, solver: SlidingWindow | None = None):
        self.model = model
        self.window = window
        self.solver = solver or SlidingWindow(model)
        self.name = "greedy" if window == 1 else f"sliding:{window}"

    def decide(self, traffic, sched_hist, t, u):
        el = traffic.eligible(t)
        ages = np.where(el, np.minimum(traffic.ages(t), self.model.age_cap), -1).tolist()
        depth = min(sched_hist.shape[0], self.model.age_cap)
        hists = sched_hist[:depth].T.tolist()
        out = np.empty(traffic.n_episodes, dtype=np.int64)
        decide = self.solver.decide
        for s, (row, h) in enumerate(zip(ages, hists)):
            dec = decide(tuple(None if g < 0 else g for g in row), h, self.window)
            out[s] = IDLE if dec.sensor is None else dec.sensor
        return out


def make_policy(name: str, cfg: ScenarioConfig, solver: SlidingWindow | None = None) -> Policy:
    kind, n = parse_policy(name, cfg.window)
    if kind == "age-min":
        return AgeMinimal(cfg.sigma_o2)
    if kind == "var-min":
        return VarianceMinimal(cfg.sigma_o2)
    if kind == "random":
        return RandomPolicy()
    return WindowPolicy(WindowModel.from_scenario(cfg), n, solver)
