"""Hölder and variation gauges of grid paths, areas and controlled paths.

All suprema run over grid points only.  Variation norms are exact over
partitions made of grid points; they are computed by an ``O(L^2)`` dynamic
programme over the index range ``[lo, hi]``.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .rough_core import ControlledGridPath, GridPath, RoughPathGrid

__all__ = [
    "MAX_RANGE",
    "NormReport",
    "holder_seminorm",
    "pvar_seminorm",
    "area_qvar",
    "area_2holder",
    "rough_holder",
    "rough_pvar",
    "rough_pvar_profile",
    "rough_holder_profile",
    "controlled_norm",
    "remainder_qvar",
    "remainder_2holder",
    "path_remainder_pvar",
    "norm_report",
]

MAX_RANGE = 20000


def _resolve(obj, lo, hi):
    path = obj.path if isinstance(obj, RoughPathGrid) else obj
    n = path.n
    hi = n if hi is None else int(hi)
    lo = int(lo)
    if not (0 <= lo < hi <= n):
        raise ValueError(f"range [{lo}, {hi}] needs at least two grid points inside [0, {n}]")
    if hi - lo > MAX_RANGE:
        raise ValueError(f"range of {hi - lo} intervals exceeds the cap of {MAX_RANGE}")
    return lo, hi


def _values(obj):
    path = obj.path if isinstance(obj, RoughPathGrid) else obj
    return path.times, np.ascontiguousarray(path.values)


def _check_p(p, name="p"):
    if not p >= 1:
        raise ValueError(f"{name} must be >= 1, got {p}")


def holder_seminorm(path, alpha, lo=0, hi=None):
    """``max ||x_{s,t}|| / (t - s)^alpha`` over grid pairs in the range."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    lo, hi = _resolve(path, lo, hi)
    t, v = _values(path)
    return float(_kernels.path_holder(t, v, lo, hi, float(alpha))[-1])


def pvar_seminorm(path, p, lo=0, hi=None):
    """Exact grid-restricted p-variation of a path."""
    _check_p(p)
    lo, hi = _resolve(path, lo, hi)
    _, v = _values(path)
    return float(_kernels.path_dp(v, lo, hi, float(p))[-1] ** (1.0 / p))


def area_qvar(rp, q, lo=0, hi=None):
    """Exact grid-restricted q-variation of the area, ``X_{s,t}`` via Chen."""
    _check_p(q, "q")
    lo, hi = _resolve(rp, lo, hi)
    V = _kernels.area_dp(np.ascontiguousarray(rp.values), np.ascontiguousarray(rp.blocks), lo, hi, float(q))
    return float(V[-1] ** (1.0 / q))


def area_2holder(rp, alpha, lo=0, hi=None):
    """``max ||X_{s,t}|| / (t - s)^{2 alpha}`` over grid pairs."""
    lo, hi = _resolve(rp, lo, hi)
    prof = _kernels.area_holder(
        rp.times, np.ascontiguousarray(rp.values), np.ascontiguousarray(rp.blocks), lo, hi, 2.0 * alpha
    )
    return float(prof[-1])


def rough_holder_profile(rp, lo=0, hi=None, alpha=None):
    """Rough Hölder norm of ``[t_lo, t_j]`` for every ``j`` in the range."""
    alpha = rp.alpha if alpha is None else alpha
    lo, hi = _resolve(rp, lo, hi)
    v = np.ascontiguousarray(rp.values)
    hx = _kernels.path_holder(rp.times, v, lo, hi, float(alpha))
    ha = _kernels.area_holder(rp.times, v, np.ascontiguousarray(rp.blocks), lo, hi, 2.0 * alpha)
    return hx + np.sqrt(ha)


def rough_holder(rp, alpha=None, lo=0, hi=None):
    return float(rough_holder_profile(rp, lo, hi, alpha)[-1])


def rough_pvar_profile(rp, lo=0, hi=None, p=None):
    """Rough p-variation norm of ``[t_lo, t_j]`` for every ``j`` in the range.

    Uses ``q = p / 2`` for the area; the profile is non-decreasing in ``j``.
    """
    p = rp.p if p is None else float(p)
    _check_p(p)
    q = p / 2.0
    lo, hi = _resolve(rp, lo, hi)
    v = np.ascontiguousarray(rp.values)
    vx = _kernels.path_dp(v, lo, hi, p)
    va = _kernels.area_dp(v, np.ascontiguousarray(rp.blocks), lo, hi, q)
    return (vx + va) ** (1.0 / p)


def rough_pvar(rp, p=None, lo=0, hi=None):
    return float(rough_pvar_profile(rp, lo, hi, p)[-1])


def _check_controlled(y, rp):
    if not isinstance(y, ControlledGridPath):
        raise TypeError("expected a ControlledGridPath")
    if y.values.shape[0] != rp.n + 1:
        raise ValueError("controlled path and rough path live on different grids")


def remainder_qvar(y, rp, q, lo=0, hi=None):
    """q-variation of ``R^y_{s,t} = y_{s,t} - y'_s x_{s,t}``."""
    _check_p(q, "q")
    _check_controlled(y, rp)
    lo, hi = _resolve(rp, lo, hi)
    yv, yp = y.flat()
    V = _kernels.remainder_dp(yv, yp, np.ascontiguousarray(rp.values), lo, hi, float(q))
    return float(V[-1] ** (1.0 / q))


def remainder_2holder(y, rp, alpha, lo=0, hi=None):
    _check_controlled(y, rp)
    lo, hi = _resolve(rp, lo, hi)
    yv, yp = y.flat()
    prof = _kernels.remainder_holder(
        rp.times, yv, yp, np.ascontiguousarray(rp.values), lo, hi, 2.0 * alpha
    )
    return float(prof[-1])


def _derivative_path(y, rp):
    n1 = y.values.shape[0]
    return GridPath(rp.times, y.gubinelli.reshape(n1, -1))


def _values_path(y, rp):
    n1 = y.values.shape[0]
    return GridPath(rp.times, y.values.reshape(n1, -1))


def controlled_norm(y, rp, mode="holder", lo=0, hi=None):
    """``|||y'||| + |||R^y|||`` in the Hölder (alpha, 2 alpha) or (p, q) gauge."""
    _check_controlled(y, rp)
    if mode == "holder":
        return holder_seminorm(_derivative_path(y, rp), rp.alpha, lo, hi) + remainder_2holder(
            y, rp, rp.alpha, lo, hi
        )
    if mode == "pvar":
        return pvar_seminorm(_derivative_path(y, rp), rp.p, lo, hi) + remainder_qvar(
            y, rp, rp.q, lo, hi
        )
    raise ValueError(f"mode must be 'holder' or 'pvar', got {mode!r}")


def path_remainder_pvar(y, rp, lo=0, hi=None):
    """``|||y|||_{p-var} + |||R^y|||_{q-var}`` for a solution path."""
    _check_controlled(y, rp)
    return pvar_seminorm(_values_path(y, rp), rp.p, lo, hi) + remainder_qvar(y, rp, rp.q, lo, hi)


@dataclass(frozen=True)
class NormReport:
    holder: float
    pvar: float
    area_2holder: float
    area_qvar: float
    rough_holder: float
    rough_pvar: float
    interval: tuple

    def to_json(self):
        d = asdict(self)
        d["interval"] = list(self.interval)
        return json.dumps(d, sort_keys=True)


def norm_report(rp, lo=0, hi=None):
    """All first- and second-level gauges of ``rp`` on one grid range."""
    lo, hi = _resolve(rp, lo, hi)
    hx = holder_seminorm(rp.path, rp.alpha, lo, hi)
    px = pvar_seminorm(rp.path, rp.p, lo, hi)
    ha = area_2holder(rp, rp.alpha, lo, hi)
    qa = area_qvar(rp, rp.q, lo, hi)
    return NormReport(
        holder=hx,
        pvar=px,
        area_2holder=ha,
        area_qvar=qa,
        rough_holder=hx + math.sqrt(ha),
        rough_pvar=(px**rp.p + qa**rp.q) ** (1.0 / rp.p),
        interval=(float(rp.times[lo]), float(rp.times[hi])),
    )
