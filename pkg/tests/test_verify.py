import math

import numpy as np
import pytest

from roughkit.benchmarks import BENCH_Y0, linear_field, sin_field, smooth_driver
from roughkit.fields import LinearDiffusion, VectorFieldPair, zero_drift
from roughkit.lift import lift_piecewise_linear
from roughkit.rough_core import GridPath
from roughkit.verify import (
    BoundCheckReport,
    _exp_times,
    _pair_reports,
    audit_ensemble,
    bound_continuity,
    bound_linear,
    bound_nonlinear,
    check_flow_lipschitz,
    check_jacobian,
    convergence_study,
    fit_order,
)


def small_driver(n=256, amp=0.05):
    rp = smooth_driver(n)
    return lift_piecewise_linear(GridPath(rp.times, amp * rp.values), rp.alpha)


def test_report_fields():
    r = BoundCheckReport("x", 1.0, 3.0, {"N": 2}, ("coarse_grid",))
    d = r.to_dict()
    assert r.margin == 2.0 and r.passed and d["pass"] and d["flags"] == ["coarse_grid"]
    assert not BoundCheckReport("y", 2.0, 1.0).passed
    assert BoundCheckReport("z", 1e300, math.inf).passed


def test_log_space_evaluation():
    assert _exp_times(0.0, 1e4) == math.inf
    assert _exp_times(-math.inf, 5.0) == 0.0
    assert _exp_times(math.log(3.0), math.log(2.0)) == pytest.approx(6.0)


def test_rhs_is_monotone_in_count():
    prev = None
    for N in (1, 2, 5, 40):
        s, v = _pair_reports("t", 0.0, 0.0, math.log(1.0 + N), 0.1 * N, N, 2.5, 1.0, {}, [])
        if prev is not None:
            assert s.rhs >= prev[0] and v.rhs >= prev[1]
        prev = (s.rhs, v.rhs)


def test_linear_bounds_on_tame_driver():
    rp = small_driver()
    reps = bound_linear(rp, linear_field(), [1.0, -0.5])
    assert [r.name for r in reps] == ["linear_sup", "linear_pvar"]
    for r in reps:
        assert r.passed and math.isfinite(r.rhs)
        assert "overshoot" not in r.flags and r.inputs["gamma_inferred"]
    with pytest.raises(ValueError):
        bound_linear(rp, VectorFieldPair(zero_drift(2), LinearDiffusion(np.zeros((2, 2, 2)))), [1.0, 0.0])
    with pytest.raises(TypeError):
        bound_linear(rp, sin_field(), [1.0, 0.0])


def test_nonlinear_bounds_on_tame_driver():
    rp = small_driver()
    for r in bound_nonlinear(rp, sin_field(), BENCH_Y0):
        assert r.passed and math.isfinite(r.rhs)


@pytest.mark.parametrize("variant,vf", [("linear", linear_field()), ("pure", sin_field(False)), ("nonlinear", sin_field())])
def test_continuity_bounds(variant, vf):
    rp = small_driver()
    y = np.array([0.3, -0.2])
    reps = bound_continuity(rp, vf, y, y + [1e-2, 5e-3], variant)
    assert all(r.passed for r in reps)
    # identical starting points give zero on both sides
    zero = bound_continuity(rp, vf, y, y, variant)
    assert all(r.lhs == 0.0 and r.passed for r in zero)


def test_continuity_variant_error():
    with pytest.raises(ValueError):
        bound_continuity(small_driver(), sin_field(), BENCH_Y0, BENCH_Y0, "ode")


def test_jacobian_check_on_sin_field():
    rp = smooth_driver(512)
    rep = check_jacobian(rp, sin_field().diffusion, BENCH_Y0, 1e-4)
    assert rep["pass"] and not rep["exact"]
    assert all(3.5 < q < 4.5 for q in rep["ratio"])


def test_jacobian_exact_for_linear_field():
    rp = smooth_driver(256)
    rep = check_jacobian(rp, LinearDiffusion(linear_field().diffusion.C), [0.0, 0.0], 2.0**-14)
    assert rep["exact"] and rep["pass"]


def test_flow_lipschitz():
    rp = small_driver()
    dif = sin_field().diffusion
    rep = check_flow_lipschitz(rp, dif, [(BENCH_Y0, BENCH_Y0 + 0.01), ([0.0, 0.0], [0.1, 0.0])])
    assert rep["pass"] and rep["sup_jacobian"] >= 1.0 - 1e-12
    assert rep["lipschitz_empirical"] > 0


def test_fit_order_recovers_slope():
    h = np.array([0.1, 0.05, 0.025])
    assert fit_order(h, 3.0 * h**2) == pytest.approx(2.0)


def test_convergence_studies():
    exp = convergence_study("exp", range(6, 10))
    assert exp["order"] >= 1.5 and len(exp["rows"]) == 4
    back = convergence_study("exp", range(6, 10), scheme="backward")
    assert back["order"] >= 1.5
    ode = convergence_study("ode", range(4, 8))
    assert ode["order"] > 3.5
    with pytest.raises(ValueError):
        convergence_study("heat", range(4, 6))
    with pytest.raises(ValueError):
        convergence_study("exp", [5])


def test_ensemble_is_independent_of_workers():
    a = audit_ensemble("all", paths=2, n=64, threads=1)
    b = audit_ensemble("all", paths=2, n=64, threads=2)
    assert a == b
    assert set(a["checks"]) >= {"linear_sup", "nonlinear_pvar", "continuity_pure_sup", "jacobian"}
    with pytest.raises(ValueError):
        audit_ensemble("bogus", paths=1)
    with pytest.raises(ValueError):
        audit_ensemble("all", paths=0)
