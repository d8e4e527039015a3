"""Delayed Kalman-type estimator for a scalar plant.

An observation of x(t - tau) is pushed forward with a^tau, and the inputs
applied since it was taken are compensated::

    x_minus = a x_hat(t-1) + b u(t-1)
    x_star  = x_minus                                          (tau = 0)
            = a x_hat(t-1) - sum_{l=1}^{tau-1} a^l b u(t-1-l)   (tau > 0)
    x_hat   = x_minus + k (a^tau y - x_star)

All functions are elementwise and accept numpy arrays, so a batch of
independent episodes can be filtered in lockstep.
"""

from __future__ import annotations

import numpy as np

from .analytics import core_terms, error_recursion_step
from .config import SystemParams


def predict(x_prev, u_prev, a: float, b: float):
    return a * x_prev + b * u_prev


def compensate(x_prev, u_hist, tau, a: float, b: float):
    """Age-``tau`` compensation term; ``u_hist[l]`` is u(t-1-l).

    ``tau`` may be an array (one age per episode); the input history must
    then be shaped ``(depth, *batch)``.
    """
    u_hist = np.asarray(u_hist, dtype=float)
    tau = np.asarray(tau)
    t_max = int(np.max(tau)) if tau.size else 0
    if t_max - 1 >= u_hist.shape[0]:
        raise ValueError(f"input history of depth {u_hist.shape[0]} cannot compensate age {t_max}")
    x_minus = predict(x_prev, u_hist[0], a, b)
    acc = np.zeros(np.broadcast(x_prev, tau).shape)
    pw = 1.0
    for l in range(1, t_max):
        pw *= a
        acc = acc + np.where(l <= tau - 1, pw * b * u_hist[l], 0.0)
    out = np.where(tau == 0, x_minus, a * x_prev - acc)
    return out if out.ndim else float(out)


def update(x_minus, x_star, y, tau, k, a: float):
    return x_minus + k * (a ** np.asarray(tau, dtype=float) * y - x_star)


def minimizing_gain(prev_ms_error, tau, gains_hist, tau_hist, sigma_o2, params: SystemParams,
                    exact_zero_age: bool = True):
    """Gain minimizing E[e^2(t)] given the realized past.

    E[e^2(t)] is quadratic in k(t) (the recursion factor, C_p, C_s and the
    1-k(t) inside C_e); three evaluations fix it and the vertex is returned.
    ``gains_hist``/``tau_hist`` are most-recent-first *past* records
    (index 0 = slot t-1). Returns ``(k, degenerate)``; ``degenerate`` marks
    zero curvature, where k = 0 is returned.
    """
    a = params.a
    tau = np.asarray(tau)
    tau_hist = np.asarray(tau_hist)
    gains_hist = np.asarray(gains_hist, dtype=float)

    def mse(kk):
        kk = np.broadcast_to(np.asarray(kk, dtype=float), tau.shape)
        taus = np.concatenate([tau[None], tau_hist], axis=0)
        ks = np.concatenate([kk[None], gains_hist], axis=0)
        br = core_terms(taus, ks, sigma_o2, a, params.sigma_p2, exact_zero_age)
        return error_recursion_step(prev_ms_error, br.f, kk, a)

    g0, gh, g1 = mse(0.0), mse(0.5), mse(1.0)
    curv = 2.0 * (g1 - 2.0 * gh + g0)
    lin = g1 - g0 - curv
    degenerate = ~(curv > 1e-300)
    k = np.where(degenerate, 0.0, -lin / np.where(degenerate, 1.0, 2.0 * curv))
    if k.ndim == 0:
        return float(k), bool(degenerate)
    return k, degenerate


def compute_gain(mode: str, constant: float, **context):
    """Gain for the current slot: ``constant`` or the per-slot minimizer.

    Minimizing mode needs ``prev_ms_error``, ``tau``, ``gains_hist``,
    ``tau_hist``, ``sigma_o2`` and ``params`` in ``context``.
    """
    if mode == "constant":
        return constant, False
    if mode == "minimizing":
        return minimizing_gain(**context)
    raise ValueError(f"unknown gain mode {mode!r}")


class DelayedKalman:
    """Estimator state for a batch of episodes.

    Keeps x_hat(t-1), the input history u(t-1), u(t-2), ... and the analytic
    mean-square error used by the minimizing gain mode.
    """

    def __init__(self, params: SystemParams, x_hat0, depth: int, gain_mode="constant",
                 gain=0.5, initial_ms_error=0.0, exact_zero_age=False):
        self.params = params
        self.x_hat = np.array(x_hat0, dtype=float)
        self.batch = self.x_hat.shape
        self.depth = depth
        self.u_hist = np.zeros((depth,) + self.batch)
        self.tau_hist = np.zeros((depth,) + self.batch, dtype=np.int64)
        self.k_hist = np.zeros((depth,) + self.batch)
        self.gain_mode = gain_mode
        self.gain = gain
        # the minimizing gain is only meaningful against the exact zero-age form
        self._exact = exact_zero_age or gain_mode == "minimizing"
        self.ms_error = np.broadcast_to(np.asarray(initial_ms_error, dtype=float), self.batch).copy()
        self.degenerate = np.zeros(self.batch, dtype=bool)

    def record_input(self, u) -> None:
        self.u_hist = np.roll(self.u_hist, 1, axis=0)
        self.u_hist[0] = u

    def step(self, y, tau, sigma_o2, received):
        """Filter one slot. ``received`` masks episodes that got a packet;
        the rest run prediction only with k = 0. Returns ``(x_hat, k)``."""
        p = self.params
        received = np.broadcast_to(np.asarray(received, dtype=bool), self.batch)
        tau = np.where(received, tau, 0)
        sigma_o2 = np.where(received, sigma_o2, 0.0)
        y = np.where(received, y, 0.0)
        if self.gain_mode == "constant":
            k = np.where(received, self.gain, 0.0)
        else:
            k, deg = minimizing_gain(self.ms_error, tau, self.k_hist, self.tau_hist, sigma_o2, p)
            k = np.where(received, k, 0.0)
            self.degenerate = np.asarray(deg) & received
        x_minus = predict(self.x_hat, self.u_hist[0], p.a, p.b)
        x_star = compensate(self.x_hat, self.u_hist, tau, p.a, p.b)
        x_new = np.where(received, update(x_minus, x_star, y, tau, k, p.a), x_minus)

        taus = np.concatenate([np.broadcast_to(tau, self.batch)[None], self.tau_hist[:-1]])
        ks = np.concatenate([np.broadcast_to(k, self.batch)[None], self.k_hist[:-1]])
        br = core_terms(taus, ks, sigma_o2, p.a, p.sigma_p2, self._exact)
        self.ms_error = error_recursion_step(self.ms_error, br.f, k, p.a)
        self.tau_hist, self.k_hist = taus, ks
        self.x_hat = np.asarray(x_new, dtype=float)
        return self.x_hat, k
