"""Explicit solvers for ``dy = f(y) dt + g(y) dx`` driven by a discrete rough path.

All schemes iterate the second-order step

    y <- y + f(y) dt + g(y) x_{k,k+1} + (Dg(y) g(y)) X_{k,k+1}

on a partition of the driver's grid, where ``(Dg g)[a, i, j]`` multiplies
``X[j, i]``.  The Doss-Sussmann solver wraps the drift-free step in an ODE
integrated by the classical fourth-order Runge-Kutta method.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import LinearDiffusion, VectorFieldPair, apply_jac, jac_times, zero_drift
from .rough_core import GridPath, RoughPathGrid, coarsen, reverse_rough_path

__all__ = [
    "SolverError",
    "SolveReport",
    "davie_step",
    "solve_davie",
    "solve_linear",
    "solve_pure_rough",
    "solve_backward",
    "solve_linearized",
    "solve_doss_sussmann",
    "resolve_partition",
    "COND_LIMIT",
]

COND_LIMIT = 1e12


class SolverError(RuntimeError):
    """Raised when an iteration produces non-finite values or a singular Jacobian."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class SolveReport:
    """Numerical solution on a partition of the driver's grid.

    ``gubinelli`` holds ``g(y_t)`` at each partition point.  ``diagnostics``
    carries per-step arrays such as the one-step remainder magnitudes
    ``||y_{k,k+1} - g(y_k) x_{k,k+1}||``.
    """

    solution: GridPath
    gubinelli: np.ndarray
    scheme: str
    partition: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self):
        return self.solution.values

    @property
    def times(self):
        return self.solution.times


def resolve_partition(rp, partition):
    """Validate a partition given as grid indices; ``None`` means every point."""
    if partition is None:
        return np.arange(rp.n + 1)
    idx = np.asarray(partition, dtype=int)
    if idx.ndim != 1 or idx.shape[0] < 2 or np.any(np.diff(idx) <= 0):
        raise ValueError("partition must be strictly increasing grid indices of length >= 2")
    if idx[0] < 0 or idx[-1] > rp.n:
        raise ValueError("partition indices fall outside the grid")
    return idx


def _driver_on(rp, idx):
    if idx.shape[0] == rp.n + 1:
        return rp
    return coarsen(rp, idx)


def _area_term(H, X):
    # sum_{ij} H[a, i, j] X[j, i]
    d, m, _ = H.shape
    return H.reshape(d, m * m) @ X.T.reshape(m * m)


def davie_step(vf, y, dt, dx, X, with_drift=True):
    """One step of the scheme; returns ``(y_next, g(y))``."""
    dif = vf.diffusion
    gy = dif(y)
    H = jac_times(dif.jac(y), gy)
    if with_drift:
        out = y + vf.drift(y) * dt
        out = out + gy @ dx
    else:
        out = y + gy @ dx
    return out + _area_term(H, X), gy


def _iterate(rp, vf, y_a, idx, with_drift, scheme):
    drv = _driver_on(rp, idx)
    d = vf.d
    if drv.dim != vf.m:
        raise ValueError(f"driver has dimension {drv.dim}, diffusion expects {vf.m}")
    y = np.asarray(y_a, dtype=float).reshape(d).copy()
    if not np.all(np.isfinite(y)):
        raise ValueError("initial value must be finite")
    n = drv.n
    t, v, B = drv.times, drv.values, drv.blocks
    out = np.empty((n + 1, d))
    gub = np.empty((n + 1, d, vf.m))
    rem = np.empty(n)
    out[0] = y
    for k in range(n):
        dx = v[k + 1] - v[k]
        y_next, gy = davie_step(vf, y, t[k + 1] - t[k], dx, B[k], with_drift)
        if not np.all(np.isfinite(y_next)):
            raise SolverError("non-finite value", k)
        gub[k] = gy
        rem[k] = float(np.sqrt(np.sum(((y_next - y) - gy @ dx) ** 2)))
        out[k + 1] = y_next
        y = y_next
    gub[n] = vf.diffusion(y)
    return SolveReport(GridPath(t, out), gub, scheme, idx, {"step_remainder": rem})


def solve_davie(rp, vf, y_a, partition=None):
    """Second-order explicit scheme with drift."""
    if not isinstance(vf, VectorFieldPair):
        raise TypeError("expected a VectorFieldPair")
    idx = resolve_partition(rp, partition)
    return _iterate(rp, vf, y_a, idx, not vf.drift.is_zero, "davie")


def solve_linear(rp, C, g0=None, drift=None, y_a=None, partition=None):
    """The scheme for ``dy = f(y) dt + (C y + g0) dx``.

    Uses ``g(y) = C y + g0`` and ``Dg(y) g(y) = C (C y + g0)``.
    """
    dif = LinearDiffusion(C, g0)
    drift = zero_drift(dif.d) if drift is None else drift
    vf = VectorFieldPair(drift, dif)
    if y_a is None:
        raise ValueError("initial value required")
    idx = resolve_partition(rp, partition)
    return _iterate(rp, vf, y_a, idx, not drift.is_zero, "linear")


def _pure(diffusion):
    return VectorFieldPair(zero_drift(diffusion.d), diffusion)


def solve_pure_rough(rp, diffusion, y_a, partition=None):
    """Drift-free equation ``dy = g(y) dx``."""
    idx = resolve_partition(rp, partition)
    return _iterate(rp, _pure(diffusion), y_a, idx, False, "pure")


def solve_backward(rp, diffusion, h_b, partition=None):
    """Solve ``h_b = h_t + int_t^b g(h_u) dx_u`` for ``h`` on the original axis.

    The equation is run forward on the time-reversed rough path starting from
    ``h_b``; the result is flipped back.
    """
    idx = resolve_partition(rp, partition)
    rev = reverse_rough_path(rp)
    ridx = (rp.n - idx)[::-1]
    rep = _iterate(rev, _pure(diffusion), h_b, ridx, False, "backward")
    times = rp.times[idx]
    return SolveReport(
        GridPath(times, rep.values[::-1]),
        rep.gubinelli[::-1].copy(),
        "backward",
        idx,
        {"step_remainder": rep.diagnostics["step_remainder"][::-1].copy()},
    )


def _lin_column(dif, Sig, Hs, gy, v, dx, X):
    A = apply_jac(Sig, v)
    B = jac_times(Sig, A)
    if Hs is not None:
        B = B + jac_times(np.einsum("aibc,c->aib", Hs, v), gy)
    out = v + A @ dx
    return out + _area_term(B, X)


def solve_linearized(rp, sol, diffusion, xi_a, partition=None):
    """Derivative of the discrete flow along ``sol``.

    ``xi_{k+1} = xi_k + (Sigma xi_k) x_{k,k+1} + (Sigma' + Sigma Sigma) xi_k X_{k,k+1}``
    with ``Sigma = Dg(y_k)`` and ``Sigma' = D^2 g(y_k) g(y_k)``; this is the
    exact Jacobian of the pure-rough step, column by column.  Returns an
    array of shape ``(len(partition), d, r)`` for ``xi_a`` of shape ``(d, r)``.
    """
    idx = resolve_partition(rp, sol.partition if partition is None else partition)
    if not np.array_equal(idx, sol.partition):
        raise ValueError("linearization partition differs from the solution partition")
    drv = _driver_on(rp, idx)
    xi = np.asarray(xi_a, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    d = diffusion.d
    if xi.shape[0] != d:
        raise ValueError(f"xi_a must have {d} rows")
    v, B = drv.values, drv.blocks
    out = np.empty((drv.n + 1,) + xi.shape)
    out[0] = xi
    cur = xi.copy()
    for k in range(drv.n):
        y = sol.values[k]
        Sig = diffusion.jac(y)
        Hs = diffusion.hess(y)
        gy = diffusion(y)
        dx = v[k + 1] - v[k]
        nxt = np.empty_like(cur)
        for c in range(cur.shape[1]):
            nxt[:, c] = _lin_column(diffusion, Sig, Hs, gy, cur[:, c], dx, B[k])
        if not np.all(np.isfinite(nxt)):
            raise SolverError("non-finite Jacobian", k)
        out[k + 1] = nxt
        cur = nxt
    return out


def _flow_with_jacobian(diffusion, v, B, i0, i1, w, need_jac=True):
    """Drift-free flow from grid index ``i0`` to ``i1`` started at ``w``."""
    vf = _pure(diffusion)
    y = w
    J = np.eye(w.shape[0]) if need_jac else None
    for k in range(i0, i1):
        dx = v[k + 1] - v[k]
        if need_jac:
            Sig = diffusion.jac(y)
            Hs = diffusion.hess(y)
            gy = diffusion(y)
            J = np.stack(
                [_lin_column(diffusion, Sig, Hs, gy, J[:, c], dx, B[k]) for c in range(J.shape[1])],
                axis=1,
            )
        y, _ = davie_step(vf, y, 0.0, dx, B[k], with_drift=False)
    return y, J


def solve_doss_sussmann(rp, vf, y_a, partition=None):
    """Doss-Sussmann transform with local restarts.

    On each partition step ``[t_k, t_{k+1}]`` the state is written as
    ``y_t = phi^k(t, w_t)`` where ``phi^k`` is the drift-free discrete flow
    started at ``t_k`` and ``w`` solves

        dw/dt = (d phi^k / dy (t, w))^{-1} f(phi^k(t, w)),   w(t_k) = y_k.

    ``w`` is advanced by one RK4 step; the middle stages evaluate the flow at
    the grid point ``floor((i_k + i_{k+1}) / 2)`` (the frozen-driver rule), so
    flows are only ever recomputed over the sub-grid of one step.  The default
    partition takes every second grid point.  An ill-conditioned Jacobian
    (condition number above ``COND_LIMIT``) aborts with :class:`SolverError`.
    """
    if partition is None:
        idx = np.arange(0, rp.n + 1, 2)
        if idx[-1] != rp.n:
            idx = np.append(idx, rp.n)
    else:
        idx = resolve_partition(rp, partition)
    d = vf.d
    if rp.dim != vf.m:
        raise ValueError(f"driver has dimension {rp.dim}, diffusion expects {vf.m}")
    dif, f = vf.diffusion, vf.drift
    t, v, B = rp.times, rp.values, rp.blocks
    y = np.asarray(y_a, dtype=float).reshape(d).copy()
    out = np.empty((idx.shape[0], d))
    gub = np.empty((idx.shape[0], d, vf.m))
    conds = np.empty(idx.shape[0] - 1)
    out[0] = y

    def F(i0, i1, w, k):
        if i1 == i0:
            return f(w), 1.0
        phi, J = _flow_with_jacobian(dif, v, B, i0, i1, w)
        c = np.linalg.cond(J)
        if not np.isfinite(c) or c > COND_LIMIT:
            raise SolverError(f"flow Jacobian condition number {c:.3e} exceeds {COND_LIMIT:.0e}", k)
        return np.linalg.solve(J, f(phi)), c

    for k in range(idx.shape[0] - 1):
        i0, i1 = int(idx[k]), int(idx[k + 1])
        im = (i0 + i1) // 2
        h = t[i1] - t[i0]
        if f.is_zero:
            w1 = y
            c = 1.0
        else:
            k1, _ = F(i0, i0, y, k)
            k2, c2 = F(i0, im, y + (0.5 * h) * k1, k)
            k3, c3 = F(i0, im, y + (0.5 * h) * k2, k)
            k4, c4 = F(i0, i1, y + h * k3, k)
            w1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            c = max(c2, c3, c4)
        y_next, _ = _flow_with_jacobian(dif, v, B, i0, i1, w1, need_jac=False)
        if not np.all(np.isfinite(y_next)):
            raise SolverError("non-finite value", k)
        gub[k] = dif(y)
        conds[k] = c
        out[k + 1] = y_next
        y = y_next
    gub[-1] = dif(y)
    return SolveReport(
        GridPath(t[idx], out), gub, "ds", idx, {"jacobian_condition": conds}
    )
