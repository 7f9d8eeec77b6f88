"""Grid-sampled rough paths, controlled paths and Chen-relation arithmetic.

Conventions used throughout the package:

* a path on ``n + 1`` grid points stores ``values`` with shape ``(n + 1, m)``;
* the area block ``X[k]`` over ``[t_k, t_{k+1}]`` is an ``m x m`` matrix with
  ``X[k][a, b]`` standing for the iterated integral of ``x^a`` against ``dx^b``;
* the tensor product ``u (x) w`` is ``np.outer(u, w)``;
* every matrix or tensor norm is the Frobenius norm.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "GridPath",
    "LevyIncrements",
    "RoughPathGrid",
    "ControlledGridPath",
    "Tolerances",
    "default_sewing_constant",
    "frobenius",
    "chen_extend",
    "chen_table",
    "chen_residual",
    "remainder",
    "contract_area",
    "reverse_rough_path",
    "coarsen",
]


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def frobenius(a):
    """Frobenius norm of the trailing two axes (Euclidean norm for 1-d input).

    Squares are summed sequentially in row-major order so that results are
    bitwise identical to the compiled kernels.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return abs(float(a))
    if a.ndim == 1:
        flat = a.reshape(1, -1)
        lead = ()
    else:
        lead = a.shape[:-2]
        flat = a.reshape(lead + (-1,)) if lead else a.reshape(1, -1)
    s = flat[..., 0] * flat[..., 0]
    for k in range(1, flat.shape[-1]):
        s = s + flat[..., k] * flat[..., k]
    out = np.sqrt(s)
    if not lead:
        return float(out[0]) if out.ndim else float(out)
    return out


def _vector_norm(v):
    return frobenius(np.asarray(v, dtype=float).ravel())


def default_sewing_constant(alpha):
    """Sewing-lemma constant ``(1 - 2^{1 - 3 alpha})^{-1}`` used by default."""
    if not alpha > 1.0 / 3.0:
        raise ValueError(f"alpha must exceed 1/3 for the sewing constant, got {alpha}")
    return 1.0 / (1.0 - 2.0 ** (1.0 - 3.0 * alpha))


@dataclass(frozen=True)
class Tolerances:
    tol_chen: float = 1e-10
    tol_solve: float = 1e-8
    sewing_constant_p: float = None
    sewing_constant_alpha: float = None

    def __post_init__(self):
        for name in ("tol_chen", "tol_solve"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sewing_constant_p", "sewing_constant_alpha"):
            val = getattr(self, name)
            if val is not None and not val > 1:
                raise ValueError(f"{name} must exceed 1, got {val}")

    @classmethod
    def for_alpha(cls, alpha, **overrides):
        c = default_sewing_constant(alpha)
        overrides.setdefault("sewing_constant_p", c)
        overrides.setdefault("sewing_constant_alpha", c)
        return cls(**overrides)

    def resolved(self, alpha):
        """Fill in unset sewing constants from ``alpha``."""
        c = None
        cp, ca = self.sewing_constant_p, self.sewing_constant_alpha
        if cp is None or ca is None:
            c = default_sewing_constant(alpha)
        return Tolerances(
            tol_chen=self.tol_chen,
            tol_solve=self.tol_solve,
            sewing_constant_p=c if cp is None else cp,
            sewing_constant_alpha=c if ca is None else ca,
        )


@dataclass(frozen=True)
class GridPath:
    """A path sampled on a strictly increasing time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times)
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        v.setflags(write=False)
        if t.ndim != 1 or t.shape[0] < 2:
            raise ValueError("a grid path needs at least two time points")
        if v.ndim != 2 or v.shape[0] != t.shape[0]:
            raise ValueError(
                f"values must have shape (len(times), m); got {v.shape} for {t.shape[0]} times"
            )
        if not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("grid path contains non-finite entries")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        """Number of grid intervals."""
        return self.times.shape[0] - 1

    @property
    def dim(self):
        return self.values.shape[1]

    def increment(self, i, j):
        return self.values[j] - self.values[i]

    def increments(self):
        return np.diff(self.values, axis=0)

    def sup_norm(self, lo=0, hi=None):
        hi = self.n if hi is None else hi
        return float(np.max(frobenius(self.values[lo : hi + 1, None, :])))


@dataclass(frozen=True)
class LevyIncrements:
    """Second-level increments on adjacent grid intervals."""

    blocks: np.ndarray

    def __post_init__(self):
        b = _frozen(self.blocks)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError(f"blocks must have shape (n, m, m), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("area blocks contain non-finite entries")
        object.__setattr__(self, "blocks", b)

    @property
    def n(self):
        return self.blocks.shape[0]

    def symmetric_defect(self, path):
        """Max over blocks of ``||Sym(X_k) - 1/2 x_k (x) x_k||``."""
        dx = path.increments()
        sym = 0.5 * (self.blocks + np.swapaxes(self.blocks, 1, 2))
        target = 0.5 * np.einsum("ka,kb->kab", dx, dx)
        if sym.shape[0] == 0:
            return 0.0
        return float(np.max(frobenius(sym - target)))


@dataclass(frozen=True)
class RoughPathGrid:
    """Discrete rough path: first level on a grid plus adjacent area blocks."""

    path: GridPath
    area: LevyIncrements
    alpha: float
    geometric: bool = True

    def __post_init__(self):
        if self.area.n != self.path.n:
            raise ValueError(
                f"area has {self.area.n} blocks but the path has {self.path.n} intervals"
            )
        if self.area.blocks.shape[1] != self.path.dim:
            raise ValueError("area block size does not match path dimension")
        if not (1.0 / 3.0 < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in (1/3, 1/2), got {self.alpha}")

    @property
    def p(self):
        return 1.0 / self.alpha

    @property
    def q(self):
        return self.p / 2.0

    @property
    def times(self):
        return self.path.times

    @property
    def values(self):
        return self.path.values

    @property
    def blocks(self):
        return self.area.blocks

    @property
    def n(self):
        return self.path.n

    @property
    def dim(self):
        return self.path.dim

    def check_range(self, lo=0, hi=None):
        hi = self.n if hi is None else hi
        if not (0 <= lo < hi <= self.n):
            raise ValueError(f"range [{lo}, {hi}] must satisfy 0 <= lo < hi <= {self.n}")
        return lo, hi

    def window(self, lo, hi):
        """Sub rough path on grid indices ``lo..hi``."""
        lo, hi = self.check_range(lo, hi)
        return RoughPathGrid(
            GridPath(self.times[lo : hi + 1], self.values[lo : hi + 1]),
            LevyIncrements(self.blocks[lo:hi]),
            self.alpha,
            self.geometric,
        )


@dataclass(frozen=True)
class ControlledGridPath:
    """Controlled path ``(y, y')`` on the grid of a driving rough path.

    ``values`` has shape ``(n + 1,) + S`` and ``gubinelli`` shape
    ``(n + 1,) + S + (m,)`` where ``S`` is ``(d,)`` for vector-valued paths or
    ``(d, m)`` for integrands of the rough integral.
    """

    base: RoughPathGrid
    values: np.ndarray
    gubinelli: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n1, m = self.base.n + 1, self.base.dim
        if v.ndim == 1:
            v = v[:, None]
        if self.gubinelli is None:
            yp = np.zeros(v.shape + (m,))
        else:
            yp = np.array(self.gubinelli, dtype=float)
        if v.shape[0] != n1:
            raise ValueError(f"controlled path has {v.shape[0]} points, grid has {n1}")
        if yp.shape != v.shape + (m,):
            raise ValueError(
                f"gubinelli derivative must have shape {v.shape + (m,)}, got {yp.shape}"
            )
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(yp))):
            raise ValueError("controlled path contains non-finite entries")
        v.setflags(write=False)
        yp.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gubinelli", yp)

    @property
    def value_shape(self):
        return self.values.shape[1:]

    def flat(self):
        """``(values, gubinelli)`` reshaped to ``(n+1, K)`` and ``(n+1, K, m)``."""
        n1 = self.values.shape[0]
        m = self.base.dim
        return (
            np.ascontiguousarray(self.values.reshape(n1, -1)),
            np.ascontiguousarray(self.gubinelli.reshape(n1, -1, m)),
        )


def _check_indices(rp, i, j):
    if not (0 <= i <= j <= rp.n):
        raise IndexError(f"grid indices must satisfy 0 <= i <= j <= {rp.n}, got ({i}, {j})")


def chen_extend(rp, i, j):
    """Area ``X_{t_i, t_j}`` rebuilt from adjacent blocks by Chen's relation."""
    _check_indices(rp, i, j)
    v, blocks = rp.values, rp.blocks
    X = np.zeros((rp.dim, rp.dim))
    for k in range(i, j):
        X = X + (blocks[k] + np.outer(v[k] - v[i], v[k + 1] - v[k]))
    return X


def chen_table(rp, lo=0, hi=None):
    """Dense table ``T[a, b] = X_{t_{lo+a}, t_{lo+b}}`` for ``a <= b``."""
    hi = rp.n if hi is None else hi
    _check_indices(rp, lo, hi)
    L = hi - lo
    m = rp.dim
    v, blocks = rp.values, rp.blocks
    T = np.zeros((L + 1, L + 1, m, m))
    for a in range(L):
        i = lo + a
        terms = blocks[i:hi] + np.einsum("ka,kb->kab", v[i:hi] - v[i], v[i + 1 : hi + 1] - v[i:hi])
        T[a, a + 1 :] = np.cumsum(terms, axis=0)
    return T


def chen_residual(rp, dense_area, lo=0):
    """Max Chen defect of an externally supplied dense area table.

    ``dense_area[a, b]`` must hold ``X_{t_{lo+a}, t_{lo+b}}`` for all
    ``a <= b``; entries marked NaN on or above the diagonal count as missing.
    """
    T = np.asarray(dense_area, dtype=float)
    L = T.shape[0] - 1
    if T.ndim != 4 or T.shape[1] != L + 1 or T.shape[2:] != (rp.dim, rp.dim):
        raise ValueError(f"dense area must have shape (L+1, L+1, {rp.dim}, {rp.dim})")
    if lo + L > rp.n:
        raise ValueError("dense area table exceeds the grid")
    iu = np.triu_indices(L + 1)
    if not np.all(np.isfinite(T[iu])):
        raise ValueError("dense area table has missing entries on or above the diagonal")
    T = np.ascontiguousarray(np.where(np.isfinite(T), T, 0.0))
    x = np.ascontiguousarray(rp.values[lo : lo + L + 1])
    return float(_kernels.chen_residual(T, x))


def remainder(y, rp, i, j):
    """``R^y_{t_i, t_j} = y_{t_i, t_j} - y'_{t_i} x_{t_i, t_j}``."""
    _check_indices(rp, i, j)
    dx = rp.values[j] - rp.values[i]
    return (y.values[j] - y.values[i]) - y.gubinelli[i] @ dx


def contract_area(deriv, X):
    """``y' X``: contract the last two slots of ``deriv`` with the area.

    ``deriv[..., i, j]`` multiplies ``X[j, i]`` (the integral of ``x^j`` against
    ``dx^i``), which is what the compensated Riemann sum requires.
    """
    return np.einsum("...ij,ji->...", deriv, X)


def _is_geometric(rp, rel):
    if rp.n == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(rp.blocks))))
    return rp.area.symmetric_defect(rp.path) <= rel * scale


def reverse_rough_path(rp, sym_tol=1e-12):
    """Time reversal ``u -> a + b - u`` of a rough path.

    Reversed blocks are ``-X_k + x_k (x) x_k`` on the mirrored interval.  For
    a geometric path this equals ``X_k^T``, which is what is computed when the
    stored blocks are geometric to within ``sym_tol`` (relative); the
    transpose makes double reversal an exact involution.
    """
    t, v, blocks = rp.times, rp.values, rp.blocks
    a, b = t[0], t[-1]
    new_t = (a + b) - t[::-1]
    new_t[0], new_t[-1] = a, b
    new_v = v[::-1]
    dx = np.diff(v, axis=0)[::-1]
    outer = np.einsum("ka,kb->kab", dx, dx)
    if rp.geometric and _is_geometric(rp, sym_tol):
        new_blocks = np.swapaxes(blocks[::-1], 1, 2)
    else:
        new_blocks = outer - blocks[::-1]
    return RoughPathGrid(GridPath(new_t, new_v), LevyIncrements(new_blocks), rp.alpha, rp.geometric)


def coarsen(rp, indices):
    """Rough path on a subset of grid points, blocks merged by Chen."""
    idx = np.asarray(indices, dtype=int)
    if idx.ndim != 1 or idx.shape[0] < 2 or np.any(np.diff(idx) <= 0):
        raise ValueError("partition indices must be strictly increasing with length >= 2")
    if idx[0] < 0 or idx[-1] > rp.n:
        raise ValueError("partition indices fall outside the grid")
    blocks = np.stack([chen_extend(rp, int(i), int(j)) for i, j in zip(idx[:-1], idx[1:])])
    return RoughPathGrid(
        GridPath(rp.times[idx], rp.values[idx]), LevyIncrements(blocks), rp.alpha, rp.geometric
    )
