import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_lift
from roughkit.benchmarks import (
    backward_exp_oracle,
    exp_field,
    exp_oracle,
    linear_field,
    sin_field,
    sine_driver,
    smooth_driver,
)
from roughkit.fields import LinearDiffusion, VectorFieldPair, linear_drift, ridge_diffusion, zero_drift
from roughkit.lift import lift_piecewise_linear
from roughkit.rough_core import GridPath, coarsen
from roughkit.solver import (
    SolverError,
    resolve_partition,
    solve_backward,
    solve_davie,
    solve_doss_sussmann,
    solve_linear,
    solve_linearized,
    solve_pure_rough,
)


def rel_sup(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def test_zero_fields_keep_initial_value(rng):
    rp = random_lift(rng, 30, 2)
    vf = VectorFieldPair(zero_drift(3), LinearDiffusion(np.zeros((3, 2, 3))))
    rep = solve_davie(rp, vf, [1.0, 2.0, 3.0])
    assert np.all(rep.values == [1.0, 2.0, 3.0])


def test_constant_diffusion_telescopes(rng):
    rp = random_lift(rng, 50, 2)
    g0 = rng.standard_normal((2, 2))
    rep = solve_linear(rp, np.zeros((2, 2, 2)), g0, y_a=[0.5, -1.0])
    expect = np.array([0.5, -1.0]) + (rp.values - rp.values[0]) @ g0.T
    assert np.max(np.abs(rep.values - expect)) <= 1e-13


def test_exp_oracle_forward_and_backward():
    rp = sine_driver(4096)
    rep = solve_davie(rp, exp_field(), [2.0])
    assert rel_sup(rep.values[:, 0], exp_oracle(rp, 2.0)) <= 1e-7
    lin = solve_linear(rp, np.ones((1, 1, 1)), y_a=[2.0])
    assert np.array_equal(lin.values, rep.values)
    back = solve_backward(rp, exp_field().diffusion, [1.5])
    assert back.values[-1, 0] == 1.5
    assert rel_sup(back.values[:, 0], backward_exp_oracle(rp, 1.5)) <= 1e-7


def test_rotation_matrix_exponential(rng):
    # one noise channel: the solution is exp(theta J) y_a with theta = x_t - x_a
    t = np.linspace(0, 1, 2049)
    x = np.sin(3 * t) + t
    rp = lift_piecewise_linear(GridPath(t, x[:, None]))
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    C = J[:, None, :]
    y_a = np.array([1.0, 0.5])
    rep = solve_linear(rp, C, y_a=y_a)
    th = x - x[0]
    exact = np.stack([np.cos(th) * y_a[0] - np.sin(th) * y_a[1], np.sin(th) * y_a[0] + np.cos(th) * y_a[1]], 1)
    assert np.max(np.abs(rep.values - exact)) <= 1e-6


def test_drift_only_is_explicit_euler():
    n = 100
    rp = lift_piecewise_linear(GridPath(np.linspace(0, 1, n + 1), np.zeros((n + 1, 1))))
    vf = VectorFieldPair(linear_drift([[-1.0]]), LinearDiffusion(np.zeros((1, 1, 1))))
    rep = solve_davie(rp, vf, [1.0])
    assert np.allclose(rep.values[:, 0], (1 - 1 / n) ** np.arange(n + 1), rtol=1e-13)


def test_doss_sussmann_without_drift_is_pure_scheme(rng):
    rp = random_lift(rng, 64, 2)
    vf = sin_field(with_drift=False)
    ds = solve_doss_sussmann(rp, vf, [0.3, -0.1])
    pure = solve_pure_rough(rp, vf.diffusion, [0.3, -0.1])
    assert np.array_equal(ds.values, pure.values[ds.partition])


def test_doss_sussmann_without_diffusion_is_rk4():
    n = 40
    rp = lift_piecewise_linear(GridPath(np.linspace(0, 1, n + 1), np.zeros((n + 1, 1))))
    vf = VectorFieldPair(linear_drift([[-1.0]]), LinearDiffusion(np.zeros((1, 1, 1))))
    rep = solve_doss_sussmann(rp, vf, [1.0])
    h = 2.0 / n
    amp = 1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24
    assert np.allclose(rep.values[:, 0], amp ** np.arange(n // 2 + 1), rtol=1e-13)


def test_doss_sussmann_variation_of_constants():
    # dy = dt + y dx: y_t = e^{x_t} (y_a + int_0^t e^{-x_s} ds) for x_0 = 0
    n = 2048
    rp = sine_driver(n)
    vf = VectorFieldPair(linear_drift([[0.0]], [1.0]), LinearDiffusion(np.ones((1, 1, 1))))
    rep = solve_doss_sussmann(rp, vf, [0.5])
    fine = np.linspace(0, 1, 400001)
    w = np.exp(-np.sin(fine))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(fine))])
    t = rep.times
    exact = np.exp(np.sin(t)) * (0.5 + np.interp(t, fine, cum))
    assert np.max(np.abs(rep.values[:, 0] - exact)) <= 1e-5


def test_schemes_agree_on_benchmark():
    rp = smooth_driver(512)
    vf = sin_field()
    dav = solve_davie(rp, vf, [0.3, -0.2])
    ds = solve_doss_sussmann(rp, vf, [0.3, -0.2])
    assert np.max(np.abs(ds.values - dav.values[ds.partition])) <= 1e-3
    assert np.all(ds.diagnostics["jacobian_condition"] >= 1.0)


def test_partition_matches_coarsened_driver(rng):
    rp = random_lift(rng, 60, 2)
    idx = np.array([0, 5, 6, 20, 41, 60])
    vf = linear_field()
    a = solve_davie(rp, vf, [1.0, 0.0], idx)
    b = solve_davie(coarsen(rp, idx), vf, [1.0, 0.0])
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.times, rp.times[idx])
    with pytest.raises(ValueError):
        resolve_partition(rp, [0, 3, 3, 60])
    with pytest.raises(ValueError):
        resolve_partition(rp, [0, 61])


def test_step_remainder_is_second_order_term(rng):
    rp = random_lift(rng, 20, 2)
    vf = sin_field(with_drift=False)
    rep = solve_davie(rp, vf, [0.1, 0.2])
    rem = rep.diagnostics["step_remainder"]
    H = np.einsum("aib,bj->aij", vf.diffusion.jac(rep.values[3]), vf.diffusion(rep.values[3]))
    X = rp.blocks[3]
    assert rem[3] == pytest.approx(np.linalg.norm(np.einsum("aij,ji->a", H, X)), rel=1e-12, abs=1e-17)


def test_forward_then_backward_returns_near_start():
    rp = smooth_driver(2048)
    dif = sin_field().diffusion
    fwd = solve_pure_rough(rp, dif, [0.4, 0.1])
    back = solve_backward(rp, dif, fwd.values[-1])
    assert np.max(np.abs(back.values[0] - [0.4, 0.1])) <= 1e-5


def test_linearized_column_equals_linear_solution(rng):
    rp = random_lift(rng, 40, 2)
    dif = linear_field().diffusion
    dif0 = LinearDiffusion(dif.C)
    sol = solve_pure_rough(rp, dif0, [0.2, 0.7])
    xi = solve_linearized(rp, sol, dif0, np.eye(2))
    col = solve_pure_rough(rp, dif0, [1.0, 0.0])
    assert np.array_equal(xi[:, :, 0], col.values)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_linearized_matches_finite_differences(seed):
    r = np.random.default_rng(seed)
    rp = random_lift(r, 30, 2, scale=0.5)
    dif = ridge_diffusion(2, 2, "sin", 0.8, phase=r.standard_normal((2, 2)))
    y = r.standard_normal(2)
    sol = solve_pure_rough(rp, dif, y)
    J = solve_linearized(rp, sol, dif, np.eye(2))
    e = 1e-6
    for c in range(2):
        yp = y.copy()
        yp[c] += e
        ym = y.copy()
        ym[c] -= e
        fd = (solve_pure_rough(rp, dif, yp).values - solve_pure_rough(rp, dif, ym).values) / (2 * e)
        assert np.max(np.abs(fd - J[:, :, c])) <= 1e-7 * max(1.0, np.max(np.abs(J)))


def test_linearized_is_linear_in_initial_direction(rng):
    rp = random_lift(rng, 25, 2)
    dif = sin_field().diffusion
    sol = solve_pure_rough(rp, dif, [0.1, 0.2])
    J = solve_linearized(rp, sol, dif, np.eye(2))
    v = np.array([2.0, -3.0])
    Jv = solve_linearized(rp, sol, dif, v)[:, :, 0]
    assert np.allclose(Jv, J @ v, rtol=1e-12, atol=1e-14)
    with pytest.raises(ValueError):
        solve_linearized(rp, sol, dif, np.eye(3))


def test_blow_up_raises_solver_error():
    t = np.linspace(0, 1, 200)
    rp = lift_piecewise_linear(GridPath(t, 1e3 * np.arange(200.0)[:, None]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(SolverError) as err:
            solve_davie(rp, exp_field(), [1.0])
    assert err.value.step is not None


def test_input_validation(rng):
    rp = random_lift(rng, 10, 3)
    with pytest.raises(ValueError):
        solve_davie(rp, sin_field(), [0.0, 0.0])
    with pytest.raises(TypeError):
        solve_davie(rp, sin_field().diffusion, [0.0, 0.0])
    rp2 = random_lift(rng, 10, 2)
    with pytest.raises(ValueError):
        solve_davie(rp2, sin_field(), [np.nan, 0.0])
    with pytest.raises(ValueError):
        solve_linear(rp2, np.zeros((2, 2, 2)))
