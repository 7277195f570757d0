"""Milling quality metrics: instantaneous fatness and tangentness, rolling
window averages, and the circliness score built from them."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

#: Below this swarm radius the cluster is treated as degenerate.
DEGENERATE_RADIUS = 1e-12


@dataclass(frozen=True)
class SwarmSnapshot:
    """Positions and headings of the swarm at one tick."""

    positions: tuple[tuple[float, float], ...]
    headings: tuple[float, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.headings):
            raise ValueError("positions and headings must have equal length")
        if len(self.positions) < 2:
            raise ValueError("a swarm snapshot needs at least 2 agents")


def centroid(snap: SwarmSnapshot) -> tuple[float, float]:
    n = len(snap.positions)
    sx = 0.0
    sy = 0.0
    for x, y in snap.positions:
        sx += x
        sy += y
    return sx / n, sy / n


def phi_tau(snap: SwarmSnapshot) -> tuple[float, float]:
    """Both instantaneous metrics in one centroid pass."""
    cx, cy = centroid(snap)
    r_min_sq = math.inf
    r_max_sq = 0.0
    cos_total = 0.0
    for (x, y), theta in zip(snap.positions, snap.headings):
        dx = x - cx
        dy = y - cy
        r_sq = dx * dx + dy * dy
        if r_sq < r_min_sq:
            r_min_sq = r_sq
        if r_sq > r_max_sq:
            r_max_sq = r_sq
        ray = math.atan2(dy, dx)  # atan2(0, 0) == 0 by convention
        cos_total += abs(math.cos(theta - ray))
    if r_max_sq < DEGENERATE_RADIUS * DEGENERATE_RADIUS:
        phi = 1.0
    else:
        phi = 1.0 - r_min_sq / r_max_sq
    return phi, cos_total / len(snap.positions)


def fatness(snap: SwarmSnapshot) -> float:
    """Radial variance about the centroid: 1 - r_min^2 / r_max^2.

    0 on a perfect circle, approaching 1 for radial scatter. A cluster
    collapsed below DEGENERATE_RADIUS scores 1.0 (maximal disorder).
    """
    return phi_tau(snap)[0]


def tangentness(snap: SwarmSnapshot) -> float:
    """Mean |cos| between each heading and its centroid ray.

    0 when every heading is perpendicular to its centroid ray (tangent to
    the ring), 1 when all agents face into or away from the centroid. The
    cosine form is used throughout; an agent sitting exactly on the
    centroid contributes |cos(theta)| with the ray angle taken as 0.
    """
    return phi_tau(snap)[1]


class CirclinessTracker:
    """Rolling-window accumulator turning per-tick fatness/tangentness into
    the circliness score.

    Circliness is undefined until `window` samples have been pushed; before
    that, push() returns None.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._phi = deque()
        self._tau = deque()
        self._phi_sum = 0.0
        self._tau_sum = 0.0

    def __len__(self) -> int:
        return len(self._phi)

    def push(self, snap: SwarmSnapshot) -> float | None:
        """Record this tick's metrics; return circliness once the window
        is full."""
        return self.push_values(*phi_tau(snap))

    def push_values(self, phi: float, tau: float) -> float | None:
        """Record precomputed per-tick metric values."""
        self._phi.append(phi)
        self._tau.append(tau)
        self._phi_sum += phi
        self._tau_sum += tau
        if len(self._phi) > self.window:
            self._phi_sum -= self._phi.popleft()
            self._tau_sum -= self._tau.popleft()
        return self.value()

    def value(self) -> float | None:
        """Current circliness, or None while the window is unfilled."""
        if len(self._phi) < self.window:
            return None
        return 1.0 - max(self._phi_sum / self.window,
                         self._tau_sum / self.window)

    def means(self) -> tuple[float, float] | None:
        """Window means (phi, tau), or None while the window is unfilled."""
        if len(self._phi) < self.window:
            return None
        return self._phi_sum / self.window, self._tau_sum / self.window


def push_and_circliness(tracker: CirclinessTracker,
                        snap: SwarmSnapshot) -> float | None:
    """Functional alias for CirclinessTracker.push()."""
    return tracker.push(snap)
