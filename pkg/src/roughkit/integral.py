"""Rough integral of a controlled integrand by compensated Riemann sums."""

import math

import numpy as np

from .fields import jac_times
from .norms import (
    area_2holder,
    area_qvar,
    holder_seminorm,
    pvar_seminorm,
    remainder_2holder,
    remainder_qvar,
)
from .rough_core import (
    ControlledGridPath,
    GridPath,
    Tolerances,
    chen_extend,
    contract_area,
    frobenius,
)

__all__ = [
    "rough_integrate",
    "integral_terms",
    "sewing_bound",
    "sewing_defect",
    "compose_controlled",
]

_EPS = np.finfo(float).eps


def _check_integrand(y, rp):
    if not isinstance(y, ControlledGridPath):
        raise TypeError("expected a ControlledGridPath")
    if y.values.shape[0] != rp.n + 1:
        raise ValueError("integrand and driver live on different grids")
    if y.values.ndim != 3 or y.values.shape[2] != rp.dim:
        raise ValueError(
            f"integrand values must have shape (n+1, d, {rp.dim}), got {y.values.shape}"
        )


def integral_terms(y, rp, lo=0, hi=None):
    """Per-interval terms ``y_u x_{u,v} + y'_u X_{u,v}`` with shape ``(hi - lo, d)``."""
    _check_integrand(y, rp)
    lo, hi = rp.check_range(lo, hi)
    dx = np.diff(rp.values[lo : hi + 1], axis=0)
    first = np.einsum("kai,ki->ka", y.values[lo:hi], dx)
    second = np.einsum("kaij,kji->ka", y.gubinelli[lo:hi], rp.blocks[lo:hi])
    return first + second


def rough_integrate(y, rp, lo=0, hi=None):
    """``int_{t_lo}^{t_hi} y dx`` as the compensated sum on the finest grid.

    Each component is summed with :func:`math.fsum`, which returns the
    correctly rounded sum of the per-interval terms regardless of length.
    """
    terms = integral_terms(y, rp, lo, hi)
    return np.array([math.fsum(terms[:, a]) for a in range(terms.shape[1])])


def sewing_defect(y, rp, lo=0, hi=None):
    """``(||int - y_s x_{s,t} - y'_s X_{s,t}||, allowance)`` for ``s, t = t_lo, t_hi``.

    ``allowance`` is a rounding budget proportional to the magnitudes summed;
    comparisons against :func:`sewing_bound` should add it to the bound.
    """
    hi = rp.n if hi is None else hi
    terms = integral_terms(y, rp, lo, hi)
    total = np.array([math.fsum(terms[:, a]) for a in range(terms.shape[1])])
    dx = rp.values[hi] - rp.values[lo]
    X = chen_extend(rp, lo, hi)
    lin = y.values[lo] @ dx
    quad = contract_area(y.gubinelli[lo], X)
    defect = frobenius(total - lin - quad)
    scale = float(np.sum(np.abs(terms))) + float(np.sum(np.abs(lin))) + float(np.sum(np.abs(quad)))
    scale += float(np.sum(np.abs(y.gubinelli[lo]))) * float(np.sum(np.abs(X)))
    return defect, 64.0 * (hi - lo + 1) * _EPS * scale


def sewing_bound(y, rp, lo=0, hi=None, mode="holder", tolerances=None):
    """Remainder bound for the one-step approximation of the integral.

    Hölder mode: ``C_alpha |t-s|^{3 alpha} (|x|_a |R|_{2a} + |y'|_a |X|_{2a})``;
    p-var mode: ``C_p (|x|_p |R|_q + |y'|_p |X|_q)``.  Seminorms are those
    of :mod:`roughkit.norms` on the given range.
    """
    _check_integrand(y, rp)
    hi = rp.n if hi is None else hi
    tol = (tolerances or Tolerances()).resolved(rp.alpha)
    n1 = rp.n + 1
    yp_path = GridPath(rp.times, y.gubinelli.reshape(n1, -1))
    if mode == "holder":
        a = rp.alpha
        h = rp.times[hi] - rp.times[lo]
        inner = holder_seminorm(rp.path, a, lo, hi) * remainder_2holder(y, rp, a, lo, hi)
        inner += holder_seminorm(yp_path, a, lo, hi) * area_2holder(rp, a, lo, hi)
        return tol.sewing_constant_alpha * h ** (3 * a) * inner
    if mode == "pvar":
        p, q = rp.p, rp.q
        inner = pvar_seminorm(rp.path, p, lo, hi) * remainder_qvar(y, rp, q, lo, hi)
        inner += pvar_seminorm(yp_path, p, lo, hi) * area_qvar(rp, q, lo, hi)
        return tol.sewing_constant_p * inner
    raise ValueError(f"mode must be 'holder' or 'pvar', got {mode!r}")


def compose_controlled(diffusion, y):
    """Controlled path ``g(y)`` with derivative ``Dg(y_s) y'_s``.

    With ``y' = g(y)`` the derivative is ``Dg(y) g(y)``; for a linear field it
    is ``C y'_s``.
    """
    if not isinstance(y, ControlledGridPath):
        raise TypeError("expected a ControlledGridPath")
    if y.values.ndim != 2 or y.values.shape[1] != diffusion.d:
        raise ValueError(f"y must be R^{diffusion.d}-valued")
    if y.base.dim != diffusion.m:
        raise ValueError("diffusion noise dimension does not match the driver")
    vals = np.stack([diffusion(v) for v in y.values])
    der = np.stack([jac_times(diffusion.jac(v), yp) for v, yp in zip(y.values, y.gubinelli)])
    return ControlledGridPath(y.base, vals, der)
