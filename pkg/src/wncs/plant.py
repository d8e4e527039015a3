"""Plant dynamics, probabilistic sensors and the one-packet-per-slot channel.

State is batch-first: ``S`` independent episodes advance in lockstep, and
every array below has a leading episode axis. A single episode is ``S = 1``.
Random draws are passed in explicitly (see :mod:`wncs.noise`), so that all
policies in a campaign consume identical plant and sensor noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemParams

IDLE = -1


class ContractViolation(RuntimeError):
    """A caller broke a precondition (e.g. scheduled an ineligible sensor)."""


@dataclass
class PlantState:
    t: int
    x: np.ndarray


def step_plant(ps: PlantState, u, params: SystemParams, w=None, rng=None) -> PlantState:
    """x(t+1) = a x(t) + b u + w with w ~ N(0, sigma_p2) (drawn if not given)."""
    if w is None:
        w = rng.normal(0.0, np.sqrt(params.sigma_p2), size=np.shape(ps.x))
    ps.x = params.a * ps.x + params.b * np.asarray(u) + w
    ps.t += 1
    return ps


@dataclass(frozen=True)
class ObservationPacket:
    sensor: int
    generated: int
    value: float
    delivery: int


class TrafficState:
    """Latest observation per sensor, fresh flags and the in-flight pipeline.

    ``gen[s, m]`` is G_m (-1 before the first observation), ``value[s, m]``
    the noisy sample, ``fresh[s, m]`` whether it is still untransmitted.
    Observations older than ``age_cap`` are dropped (no longer eligible).
    """

    def __init__(self, n_episodes: int, sigma_o2, t_d: int, age_cap: int = 64):
        self.sigma_o2 = np.asarray(sigma_o2, dtype=float)
        self.n_sensors = len(self.sigma_o2)
        self.t_d = t_d
        self.age_cap = age_cap
        shape = (n_episodes, self.n_sensors)
        self.gen = np.full(shape, -1, dtype=np.int64)
        self.value = np.zeros(shape)
        self.fresh = np.zeros(shape, dtype=bool)
        # ring of t_d + 1 delivery slots
        self.q_sensor = np.full((t_d + 1, n_episodes), IDLE, dtype=np.int64)
        self.q_gen = np.zeros((t_d + 1, n_episodes), dtype=np.int64)
        self.q_value = np.zeros((t_d + 1, n_episodes))
        self._last_tx = None

    @property
    def n_episodes(self) -> int:
        return self.gen.shape[0]

    def ages(self, t: int) -> np.ndarray:
        """Age at the controller if sent now, t - G_m + t_d (-1 when undefined)."""
        return np.where(self.gen >= 0, t - self.gen + self.t_d, -1)

    def eligible(self, t: int) -> np.ndarray:
        return self.fresh & (self.gen >= 0) & (t - self.gen + self.t_d <= self.age_cap)

    def in_flight(self, t: int) -> list[list[ObservationPacket]]:
        out = [[] for _ in range(self.n_episodes)]
        for j in range(self.t_d + 1):
            slot = t + j
            r = slot % (self.t_d + 1)
            for s in np.flatnonzero(self.q_sensor[r] != IDLE):
                out[s].append(ObservationPacket(int(self.q_sensor[r, s]), int(self.q_gen[r, s]),
                                                float(self.q_value[r, s]), slot))
        return out


def sample_sensors(traffic: TrafficState, x, t: int, observed, noise) -> TrafficState:
    """Sensors with ``observed[s, m]`` take y = x(t) + v now.

    ``noise`` holds v_m(t) (already scaled to each sensor's variance).
    Sensors that do not observe keep their previous sample and flag.
    """
    observed = np.asarray(observed, dtype=bool)
    y = np.asarray(x)[:, None] + noise
    traffic.gen = np.where(observed, t, traffic.gen)
    traffic.value = np.where(observed, y, traffic.value)
    traffic.fresh = traffic.fresh | observed
    return traffic


def channel_transmit(traffic: TrafficState, d, t: int) -> TrafficState:
    """Enqueue each episode's chosen sensor for delivery at t + t_d.

    ``d[s]`` is a sensor index or ``IDLE``. Scheduling an ineligible sensor
    (never observed, already sent, or expired) raises ContractViolation.
    """
    if traffic._last_tx == t:
        raise ContractViolation(f"second transmission in slot {t}")
    d = np.asarray(d, dtype=np.int64)
    send = d != IDLE
    s_idx = np.flatnonzero(send)
    if s_idx.size:
        ok = traffic.eligible(t)[s_idx, d[s_idx]]
        if not ok.all():
            bad = s_idx[~ok][0]
            raise ContractViolation(f"episode {bad}: sensor {d[bad]} is not eligible at slot {t}")
    r = (t + traffic.t_d) % (traffic.t_d + 1)
    traffic.q_sensor[r] = np.where(send, d, IDLE)
    if s_idx.size:
        traffic.q_gen[r, s_idx] = traffic.gen[s_idx, d[s_idx]]
        traffic.q_value[r, s_idx] = traffic.value[s_idx, d[s_idx]]
        traffic.fresh[s_idx, d[s_idx]] = False
    traffic._last_tx = t
    return traffic


def channel_deliver(traffic: TrafficState, t: int):
    """Packets due at slot t: ``(received, y, tau, sigma_o2, sensor)`` arrays.

    tau = t - G; entries with ``received`` False carry no packet.
    """
    r = t % (traffic.t_d + 1)
    sensor = traffic.q_sensor[r].copy()
    received = sensor != IDLE
    y = np.where(received, traffic.q_value[r], 0.0)
    tau = np.where(received, t - traffic.q_gen[r], 0)
    sig = np.where(received, traffic.sigma_o2[np.maximum(sensor, 0)], 0.0)
    traffic.q_sensor[r] = IDLE
    return received, y, tau, sig, sensor
