"""Hazard-aware loss: piecewise-linear error with region-dependent weights."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

BELOW, ABOVE = "below", "above"


@dataclass(frozen=True)
class HalParams:
    u_safe: float = 1.05
    o_safe: float = 1.0
    u_unsafe: float = 1.2
    o_unsafe: float = 1.1
    qbar: float | None = None  # None: no unsafe region
    direction: str = BELOW

    def __post_init__(self):
        w = (self.u_safe, self.o_safe, self.u_unsafe, self.o_unsafe)
        if min(w) < 0 or max(w) <= 0:
            raise ValueError("HAL weights must be nonnegative with at least one positive")
        if self.direction not in (BELOW, ABOVE):
            raise ValueError(f"unknown direction {self.direction!r}")

    def unsafe(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.qbar is None:
            return np.zeros(q.shape, dtype=bool)
        return q < self.qbar if self.direction == BELOW else q > self.qbar

    def weights(self, q) -> tuple[np.ndarray, np.ndarray]:
        bad = self.unsafe(q)
        return np.where(bad, self.u_unsafe, self.u_safe), np.where(bad, self.o_unsafe, self.o_safe)

    def standardized(self, mean: float, std: float) -> "HalParams":
        """Same loss expressed on z-scored targets (up to the 1/std factor)."""
        if self.qbar is None:
            return self
        return replace(self, qbar=(self.qbar - mean) / std)


def unit_params(qbar=None, direction=BELOW) -> HalParams:
    return HalParams(1.0, 1.0, 1.0, 1.0, qbar, direction)


def hal_loss(q, qhat, params: HalParams):
    """Elementwise loss; the region is decided by the true value ``q``."""
    q = np.asarray(q, dtype=float)
    qhat = np.asarray(qhat, dtype=float)
    wu, wo = params.weights(q)
    err = qhat - q
    out = wu * np.maximum(-err, 0.0) + wo * np.maximum(err, 0.0)
    return out if out.ndim else float(out)


def hal_subgradient(q, qhat, params: HalParams):
    """d loss / d qhat, taking 0 at qhat == q."""
    q = np.asarray(q, dtype=float)
    qhat = np.asarray(qhat, dtype=float)
    wu, wo = params.weights(q)
    out = np.where(qhat < q, -wu, np.where(qhat > q, wo, 0.0))
    return out if out.ndim else float(out)
