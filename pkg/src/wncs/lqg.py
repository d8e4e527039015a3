"""Scalar LQG pieces: Riccati solution, feedback gain and cost mapping.

The certainty-equivalent gain is L = -a b P / (R + b^2 P). An alternative form
puts Q in the denominator; with Q = R (every reference scenario) both agree,
so ``gain_form="Q"`` is kept as a switch rather than the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemParams


@dataclass(frozen=True)
class LqgSolution:
    p_ric: float
    l_gain: float
    c0: float


def solve_dare(params: SystemParams) -> float:
    """Positive root of b^2 P^2 + (R(1-a^2) - Q b^2) P - Q R = 0."""
    a, b, q, r = params.a, params.b, params.q_weight, params.r_weight
    if b == 0:
        if abs(a) >= 1:
            raise ValueError("unstabilizable: b = 0 with |a| >= 1")
        return q / (1 - a * a)
    A = b * b
    B = r * (1 - a * a) - q * b * b
    C = -q * r
    disc = math.sqrt(B * B - 4 * A * C)
    # numerically stable root selection
    return (-B + disc) / (2 * A) if B <= 0 else (2 * -C) / (B + disc)


def dare_fixed_point(params: SystemParams, tol: float = 1e-14, max_iter: int = 100_000) -> float:
    """P <- Q + a^2 P - (a b P)^2 / (R + b^2 P), from P = Q."""
    a, b, q, r = params.a, params.b, params.q_weight, params.r_weight
    P = q
    for _ in range(max_iter):
        nxt = q + a * a * P - (a * b * P) ** 2 / (r + b * b * P)
        if abs(nxt - P) <= tol * max(1.0, abs(nxt)):
            return nxt
        P = nxt
    raise RuntimeError("Riccati iteration did not converge")


def _denominator(P: float, params: SystemParams, gain_form: str) -> float:
    w = params.r_weight if gain_form == "R" else params.q_weight
    return w + params.b ** 2 * P


def control_gain(P: float, params: SystemParams, gain_form: str = "R") -> float:
    return -params.a * params.b * P / _denominator(P, params, gain_form)


def initial_cost(P: float, params: SystemParams, x0: float, horizon: int | None = None) -> float:
    """Policy-independent part of the average cost.

    Without ``horizon`` this is x0^2 P + sigma_p2 P. With a horizon T the
    initial-condition term is spread over the T slots (x0^2 P / T), which
    is what the empirical time average converges to.
    """
    x_term = x0 * x0 * P
    if horizon is not None:
        x_term /= horizon
    return x_term + params.sigma_p2 * P


def solve_lqg(params: SystemParams, x0: float = 1.0, gain_form: str = "R",
              horizon: int | None = None) -> LqgSolution:
    P = solve_dare(params)
    return LqgSolution(P, control_gain(P, params, gain_form), initial_cost(P, params, x0, horizon))


def error_weight(sol: LqgSolution, params: SystemParams, gain_form: str = "R") -> float:
    """Coefficient of J_E in the LQG cost, L^2 (R + b^2 P)."""
    return sol.l_gain ** 2 * _denominator(sol.p_ric, params, gain_form)


def lqg_cost_from_je(j_e, sol: LqgSolution, params: SystemParams, gain_form: str = "R"):
    """J = c0 + L^2 (R + b^2 P) J_E."""
    return sol.c0 + error_weight(sol, params, gain_form) * np.asarray(j_e)


def empirical_lqg(x, u, params: SystemParams):
    """(1/T) sum_t Q x(t)^2 + R u(t)^2 along the leading (time) axis."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.mean(params.q_weight * x * x + params.r_weight * u * u, axis=0)
