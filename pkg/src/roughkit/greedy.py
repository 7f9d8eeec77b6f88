"""Greedy stopping times on a grid and the closed-form bounds on their count."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .norms import rough_holder, rough_holder_profile, rough_pvar, rough_pvar_profile

__all__ = [
    "GreedyResult",
    "greedy_times_pvar",
    "greedy_times_holder",
    "count_bound_pvar",
    "count_bound_holder",
]

_FIRST_WINDOW = 16


@dataclass(frozen=True)
class GreedyResult:
    """Greedy partition of a grid range.

    ``indices`` are grid indices of the stopping times, ``taus`` the times;
    ``overshoot_steps`` lists the pieces ``i`` whose single grid step already
    exceeded ``gamma``.
    """

    taus: np.ndarray
    indices: np.ndarray
    gamma: float
    gauge: str
    exponent: float
    overshoot_steps: tuple = field(default=())

    @property
    def count(self):
        return int(self.indices.shape[0] - 1)

    @property
    def overshoot(self):
        return len(self.overshoot_steps) > 0

    @property
    def single_step_pieces(self):
        """Number of non-final pieces made of one grid interval."""
        lengths = np.diff(self.indices)[:-1]
        return int(np.sum(lengths == 1))

    def to_dict(self):
        return {
            "count": self.count,
            "gamma": self.gamma,
            "gauge": self.gauge,
            "exponent": self.exponent,
            "indices": [int(i) for i in self.indices],
            "taus": [float(t) for t in self.taus],
            "overshoot": self.overshoot,
            "overshoot_steps": list(self.overshoot_steps),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _greedy(rp, gamma, lo, hi, profile):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    lo, hi = rp.check_range(lo, hi)
    idx = [lo]
    over = []
    i = lo
    w = _FIRST_WINDOW
    while i < hi:
        w = max(1, min(w, hi - i))
        while True:
            prof = profile(i, i + w)
            bad = np.flatnonzero(prof > gamma)
            if bad.size:
                j = i + int(bad[0]) - 1
                break
            if i + w == hi:
                j = hi
                break
            w = min(2 * w, hi - i)
        if j == i:
            over.append(len(idx) - 1)
            j = i + 1
        # next window: about twice the last piece
        w = 2 * (j - i)
        idx.append(j)
        i = j
    idx = np.asarray(idx, dtype=int)
    return idx, tuple(over)


def greedy_times_pvar(rp, gamma, lo=0, hi=None, p=None):
    """Greedy times for the rough p-variation gauge.

    ``tau_{i+1}`` is the largest grid point whose gauge on ``[tau_i, t]`` does
    not exceed ``gamma``; if the first grid step already exceeds it, the next
    grid point is taken and the piece is recorded as an overshoot.
    """
    p = rp.p if p is None else float(p)
    idx, over = _greedy(rp, gamma, lo, hi, lambda a, b: rough_pvar_profile(rp, a, b, p))
    return GreedyResult(rp.times[idx].copy(), idx, float(gamma), "pvar", p, over)


def greedy_times_holder(rp, gamma, lo=0, hi=None, alpha=None):
    """Greedy times for the gauge ``(t - tau)^{1 - 2 alpha} + |||x|||_{alpha, [tau, t]}``."""
    alpha = rp.alpha if alpha is None else float(alpha)
    t = rp.times

    def profile(a, b):
        return (t[a : b + 1] - t[a]) ** (1.0 - 2.0 * alpha) + rough_holder_profile(rp, a, b, alpha)

    idx, over = _greedy(rp, gamma, lo, hi, profile)
    return GreedyResult(rp.times[idx].copy(), idx, float(gamma), "holder", alpha, over)


def count_bound_pvar(rp, gamma, lo=0, hi=None, p=None):
    """``1 + gamma^{-p} |||x|||_p^p`` on the range."""
    p = rp.p if p is None else float(p)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    norm = rough_pvar(rp, p, lo, hi)
    try:
        return 1.0 + (norm / gamma) ** p
    except OverflowError:
        return math.inf


def count_bound_holder(rp, gamma, lo=0, hi=None, alpha=None, nu=None):
    """``1 + |I| gamma^{-1/(nu - alpha)} (1 + |||x|||_nu^{1/(nu - alpha)})``.

    ``|||x|||_nu`` is the rough Hölder norm at exponent ``nu``.
    """
    alpha = rp.alpha if alpha is None else float(alpha)
    if nu is None or not nu > alpha:
        raise ValueError("need nu > alpha")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    lo, hi = rp.check_range(lo, hi)
    e = 1.0 / (nu - alpha)
    length = rp.times[hi] - rp.times[lo]
    norm = rough_holder(rp, nu, lo, hi)
    try:
        return 1.0 + length * gamma ** (-e) * (1.0 + norm**e)
    except OverflowError:
        return math.inf
