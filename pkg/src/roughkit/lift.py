"""Constructors for rough paths: interpolant lifts, analytic lifts, fBm samples."""

from dataclasses import dataclass

import numpy as np

from .rough_core import GridPath, LevyIncrements, RoughPathGrid, Tolerances, chen_residual

__all__ = [
    "FbmSpec",
    "lift_piecewise_linear",
    "lift_analytic",
    "sample_fbm",
    "fbm_covariance",
    "circle_area",
    "DEFAULT_CHOLESKY_CAP",
]

DEFAULT_CHOLESKY_CAP = 4096


def lift_piecewise_linear(path, alpha=0.45):
    """Canonical geometric lift of the linear interpolant of ``path``.

    Each block is ``1/2 dx (x) dx``, the exact iterated integral of a segment.
    """
    if not isinstance(path, GridPath):
        raise TypeError("expected a GridPath")
    dx = path.increments()
    blocks = 0.5 * np.einsum("ka,kb->kab", dx, dx)
    return RoughPathGrid(path, LevyIncrements(blocks), float(alpha), geometric=True)


def lift_analytic(path, area_formula, alpha=0.45, geometric=True, tolerances=None, check=True):
    """Lift with blocks ``area_formula(s, t, x_s, x_t)`` on adjacent intervals.

    The formula is validated against Chen's relation on the dense grid table
    it induces; a residual above ``tol_chen`` raises ``ValueError``.
    """
    tol = (tolerances or Tolerances()).tol_chen
    t, v = path.times, path.values
    n = path.n

    def X(i, j):
        return np.asarray(area_formula(t[i], t[j], v[i], v[j]), dtype=float).reshape(path.dim, path.dim)

    blocks = np.stack([X(k, k + 1) for k in range(n)])
    rp = RoughPathGrid(path, LevyIncrements(blocks), float(alpha), geometric)
    if check:
        dense = np.zeros((n + 1, n + 1, path.dim, path.dim))
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                dense[i, j] = X(i, j)
        res = chen_residual(rp, dense)
        if res > tol:
            raise ValueError(f"area formula violates Chen's relation: residual {res:.3e} > {tol:.1e}")
    return rp


def circle_area(s, t, xs, xt):
    """Exact area of ``u -> (cos u, sin u)`` between times ``s <= t``.

    Symmetric part ``1/2 x_{s,t} (x) x_{s,t}``; antisymmetric part is the
    signed area swept relative to the chord start.
    """
    d = np.asarray(xt) - np.asarray(xs)
    sym = 0.5 * np.outer(d, d)
    h = t - s
    # Levy area of the arc relative to its starting point.
    lev = 0.5 * (h - np.sin(h))
    return sym + np.array([[0.0, lev], [-lev, 0.0]])


@dataclass(frozen=True)
class FbmSpec:
    hurst: float
    horizon: float = 1.0
    n: int = 1024
    seed: int = 0

    def __post_init__(self):
        if not (1.0 / 3.0 < self.hurst <= 0.5):
            raise ValueError(f"hurst must lie in (1/3, 1/2], got {self.hurst}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def fbm_covariance(s, t, hurst):
    """``1/2 (s^{2H} + t^{2H} - |t - s|^{2H})``."""
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)


def _fgn_autocov(n, hurst):
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def _generator(seed, component):
    # Philox is counter based: the key pins the stream, draws advance the counter.
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(component) << 64)))


def _fgn_circulant(n, hurst, rng):
    r = _fgn_autocov(n, hurst)
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        return None
    lam = np.clip(lam, 0.0, None)
    M = row.shape[0]
    z = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    w = np.fft.fft(np.sqrt(lam / M) * z)
    return w.real[:n]


def _fgn_cholesky(n, hurst, rng, cap):
    if n > cap:
        raise ValueError(f"n = {n} exceeds the Cholesky fallback cap of {cap}")
    r = _fgn_autocov(n, hurst)[:n]
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    L = np.linalg.cholesky(r[idx])
    return L @ rng.standard_normal(n)


def sample_fbm(spec, m=1, method="auto", cholesky_cap=DEFAULT_CHOLESKY_CAP):
    """Sample ``m`` independent fBm components on the uniform grid of ``spec``.

    ``method`` is ``"circulant"`` (Davies-Harte, needs ``n`` a power of two),
    ``"cholesky"`` or ``"auto"`` (circulant with a Cholesky fallback when the
    embedding is not nonnegative definite or ``n`` is not a power of two).
    Component ``c`` draws from its own counter-based stream keyed by
    ``(seed, c)``, so output is reproducible independent of evaluation order.
    """
    n, H, T = int(spec.n), float(spec.hurst), float(spec.horizon)
    pow2 = n & (n - 1) == 0
    if method == "circulant" and not pow2:
        raise ValueError("the circulant method needs n to be a power of two")
    if method not in ("auto", "circulant", "cholesky"):
        raise ValueError(f"unknown method {method!r}")
    scale = (T / n) ** H
    comps = []
    for c in range(m):
        rng = _generator(spec.seed, c)
        inc = None
        if method != "cholesky" and pow2:
            inc = _fgn_circulant(n, H, rng)
            if inc is None and method == "circulant":
                raise ValueError("circulant embedding is not nonnegative definite")
        if inc is None:
            inc = _fgn_cholesky(n, H, _generator(spec.seed, c), cholesky_cap)
        comps.append(np.concatenate([[0.0], np.cumsum(inc * scale)]))
    times = np.linspace(0.0, T, n + 1)
    return GridPath(times, np.stack(comps, axis=1))
