"""Bounded record of what the estimator received at each slot.

The cross-correlation term of the core function at slot t reads ages and
gains up to tau(t) - 1 slots back, so the buffer keeps ``depth`` records and
serves them most-recent-first. A slot without a delivery is stored with
``k = 0`` and ``updated = False``.

The buffer is batch-aware: ``batch=(S,)`` keeps S independent episodes in
lockstep, which is how the campaign runner uses it. ``batch=()`` is the
ordinary single-episode case.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Reception(NamedTuple):
    t: int
    tau: int
    sigma_o2: float
    k: float
    updated: bool


class ReceptionHistory:
    def __init__(self, depth: int, batch: tuple[int, ...] = ()):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.depth = depth
        self.batch = tuple(batch)
        shape = (depth,) + self.batch
        self._tau = np.zeros(shape, dtype=np.int64)
        self._sig = np.zeros(shape)
        self._k = np.zeros(shape)
        self._upd = np.zeros(shape, dtype=bool)
        self._head = -1
        self.count = 0
        self.last_slot: int | None = None
        self.max_tau = 0

    def push(self, t: int, tau, sigma_o2, k, updated=True) -> None:
        """Append the record of slot ``t`` (slots must be consecutive)."""
        if self.last_slot is not None and t != self.last_slot + 1:
            raise ValueError(f"slot {t} does not follow {self.last_slot}")
        tau = np.asarray(tau)
        upd = np.broadcast_to(np.asarray(updated, dtype=bool), self.batch)
        if np.any(tau[upd] < 0) if tau.ndim else (bool(upd) and tau < 0):
            raise ValueError("age must be nonnegative")
        self._head = (self._head + 1) % self.depth
        h = self._head
        self._upd[h] = upd
        self._tau[h] = np.where(upd, tau, 0)
        self._sig[h] = np.where(upd, sigma_o2, 0.0)
        self._k[h] = np.where(upd, k, 0.0)
        self.count += 1
        self.last_slot = t
        if np.any(upd):
            self.max_tau = max(self.max_tau, int(np.max(self._tau[h])))

    def push_record(self, rec: Reception) -> None:
        self.push(rec.t, rec.tau, rec.sigma_o2, rec.k, rec.updated)

    def _order(self) -> np.ndarray:
        return (self._head - np.arange(self.depth)) % self.depth

    def lookback(self):
        """``(tau, k, sigma_o2, updated)``, each shaped ``(depth, *batch)``;
        index 0 is the latest slot. Slots before the first record read as
        no-update."""
        idx = self._order()
        valid = np.arange(self.depth) < self.count
        vb = valid.reshape((-1,) + (1,) * len(self.batch))
        return (
            np.where(vb, self._tau[idx], 0),
            np.where(vb, self._k[idx], 0.0),
            np.where(vb, self._sig[idx], 0.0),
            np.where(vb, self._upd[idx], False),
        )

    def records(self) -> list[Reception]:
        """Stored records, oldest first (single-episode buffers only)."""
        if self.batch:
            raise ValueError("records() needs an unbatched history")
        n = min(self.count, self.depth)
        tau, k, sig, upd = self.lookback()
        out = []
        for i in reversed(range(n)):
            out.append(Reception(self.last_slot - i, int(tau[i]), float(sig[i]),
                                 float(k[i]), bool(upd[i])))
        return out

    @classmethod
    def from_records(cls, records, depth: int | None = None) -> "ReceptionHistory":
        records = list(records)
        h = cls(depth or max(len(records), 1))
        for r in records:
            h.push_record(r if isinstance(r, Reception) else Reception(*r))
        return h

    def __len__(self) -> int:
        return min(self.count, self.depth)
