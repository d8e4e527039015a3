"""Per-source random streams for paired comparisons.

Every seed owns independent generators for the process noise, each sensor's
sampling coin and observation noise, and the policy. Draws are produced in
blocks for all episodes at once; a policy change never shifts the plant or
sensor streams.
"""

from __future__ import annotations

import numpy as np

PROCESS, POLICY, SENSOR_BASE = 0, 1, 2


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


class NoiseStreams:
    def __init__(self, seeds, sigma_p2: float, sigma_o2, p_obs, block: int = 1024):
        self.seeds = list(seeds)
        self.sigma_p = float(np.sqrt(sigma_p2))
        self.sigma_o = np.sqrt(np.asarray(sigma_o2, dtype=float))
        self.p_obs = np.asarray(p_obs, dtype=float)
        self.block = block
        m = len(self.p_obs)
        self._proc = [_rng(s, PROCESS) for s in self.seeds]
        self._pol = [_rng(s, POLICY) for s in self.seeds]
        self._sens = [[_rng(s, SENSOR_BASE + j) for j in range(m)] for s in self.seeds]
        self._start = None
        self._fill(0)

    def _fill(self, start: int) -> None:
        n, S, M = self.block, len(self.seeds), len(self.p_obs)
        self._w = np.empty((n, S))
        self._coin = np.empty((n, S, M))
        self._v = np.empty((n, S, M))
        self._u = np.empty((n, S))
        for i in range(S):
            self._w[:, i] = self._proc[i].normal(0.0, self.sigma_p, n)
            self._u[:, i] = self._pol[i].random(n)
            for j in range(M):
                g = self._sens[i][j]
                self._coin[:, i, j] = g.random(n)
                self._v[:, i, j] = g.normal(0.0, 1.0, n) * self.sigma_o[j]
        self._start = start

    def _row(self, t: int) -> int:
        if t < self._start:
            raise ValueError("streams are consumed forward only")
        while t >= self._start + self.block:
            self._fill(self._start + self.block)
        return t - self._start

    def process(self, t: int) -> np.ndarray:
        return self._w[self._row(t)]

    def sensing(self, t: int):
        """``(observed, v)`` for slot t, each ``(S, M)``."""
        r = self._row(t)
        return self._coin[r] < self.p_obs, self._v[r]

    def policy_uniform(self, t: int) -> np.ndarray:
        return self._u[self._row(t)]
