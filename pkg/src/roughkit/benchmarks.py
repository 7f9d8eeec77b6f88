"""Reference drivers, vector fields and closed-form solutions used by the audits."""

import numpy as np

from .fields import LinearDiffusion, VectorFieldPair, linear_drift, ridge_diffusion, zero_drift
from .lift import FbmSpec, lift_piecewise_linear, sample_fbm
from .rough_core import GridPath

__all__ = [
    "sine_driver",
    "smooth_driver",
    "fbm_driver",
    "sin_field",
    "linear_field",
    "exp_field",
    "exp_oracle",
    "backward_exp_oracle",
    "BENCH_Y0",
]

BENCH_Y0 = np.array([0.3, -0.2])


def sine_driver(n, horizon=1.0, alpha=0.45):
    """Scalar ``x_t = sin t`` on ``[0, horizon]``, piecewise-linear lift."""
    t = np.linspace(0.0, horizon, n + 1)
    return lift_piecewise_linear(GridPath(t, np.sin(t)[:, None]), alpha)


def smooth_driver(n, horizon=1.0, alpha=0.45):
    """Two-dimensional ``x_t = (sin 2t, cos 3t - 1)`` with its piecewise-linear lift."""
    t = np.linspace(0.0, horizon, n + 1)
    v = np.stack([np.sin(2.0 * t), np.cos(3.0 * t) - 1.0], axis=1)
    return lift_piecewise_linear(GridPath(t, v), alpha)


def fbm_driver(n, hurst, seed, m=2, horizon=1.0, alpha=None):
    """Lift of an ``m``-dimensional fBm sample; ``alpha`` defaults to ``0.9 H``."""
    alpha = 0.9 * hurst if alpha is None else alpha
    path = sample_fbm(FbmSpec(hurst=hurst, horizon=horizon, n=n, seed=seed), m=m)
    return lift_piecewise_linear(path, alpha)


def sin_field(with_drift=True):
    """Sine ridge diffusion on ``R^2`` with two noise channels, plus a linear drift."""
    dif = ridge_diffusion(2, 2, "sin", scale=0.8, phase=[[0.0, 0.5], [1.0, -0.3]])
    if not with_drift:
        return VectorFieldPair(zero_drift(2), dif)
    drift = linear_drift([[-0.5, 0.3], [-0.3, -0.5]], [0.1, -0.2])
    return VectorFieldPair(drift, dif)


def linear_field(with_drift=True):
    """Linear diffusion ``C y + g0`` on ``R^2`` with non-commuting channels."""
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    D = np.diag([1.0, -1.0])
    C = np.stack([0.5 * J, 0.3 * D], axis=1)
    g0 = 0.1 * np.eye(2)
    dif = LinearDiffusion(C, g0)
    if not with_drift:
        return VectorFieldPair(zero_drift(2), dif)
    return VectorFieldPair(linear_drift([[-0.5, 0.2], [0.0, -0.3]], [0.1, 0.0]), dif)


def exp_field():
    """Scalar ``dy = y dx``."""
    return VectorFieldPair(zero_drift(1), LinearDiffusion(np.ones((1, 1, 1))))


def exp_oracle(rp, y_a):
    """``y_a exp(x_t - x_a)`` for scalar drivers."""
    x = rp.values[:, 0]
    return y_a * np.exp(x - x[0])


def backward_exp_oracle(rp, h_b):
    """``h_b exp(-(x_b - x_t))`` for scalar drivers."""
    x = rp.values[:, 0]
    return h_b * np.exp(-(x[-1] - x))
