import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_lift
from roughkit import _kernels
from roughkit.lift import lift_piecewise_linear
from roughkit.norms import (
    MAX_RANGE,
    area_2holder,
    area_qvar,
    controlled_norm,
    holder_seminorm,
    norm_report,
    path_remainder_pvar,
    pvar_seminorm,
    remainder_qvar,
    rough_holder,
    rough_pvar,
    rough_pvar_profile,
)
from roughkit.rough_core import ControlledGridPath, GridPath, chen_table


def partitions(lo, hi):
    inner = range(lo + 1, hi)
    for r in range(len(inner) + 1):
        for pts in itertools.combinations(inner, r):
            yield (lo,) + pts + (hi,)


def brute_force(W, lo, hi):
    """Max over partitions of left-to-right sums of ``W[i, j]``."""
    best = 0.0
    for part in partitions(lo, hi):
        s = 0.0
        for i, j in zip(part[:-1], part[1:]):
            s = s + W[i, j]
        best = max(best, s)
    return best


def independent_area(rp, i, j):
    """Lévy-area form: ``1/2 x_ij (x) x_ij + antisymmetric part``."""
    v = rp.values
    d = v[j] - v[i]
    A = np.zeros((rp.dim, rp.dim))
    for k in range(i, j):
        u = v[k] - v[i]
        dk = v[k + 1] - v[k]
        A += 0.5 * (np.outer(u, dk) - np.outer(dk, u))
    return 0.5 * np.outer(d, d) + A


def test_pvar_of_monotone_scalar_path_is_total_increment():
    p = GridPath(np.linspace(0, 1, 6), [0.0, 1.0, 1.5, 3.0, 3.2, 4.0])
    assert pvar_seminorm(p, 2.5) == pytest.approx(4.0, rel=1e-15)


def test_holder_of_linear_path():
    t = np.linspace(0, 1, 9)
    p = GridPath(t, 2.0 * t)
    # |x_{s,t}| / |t-s|^a = 2 |t-s|^{1-a}, maximal on the full interval
    assert holder_seminorm(p, 0.4) == pytest.approx(2.0, rel=1e-14)


def test_zero_path_has_zero_norms():
    p = GridPath(np.linspace(0, 1, 5), np.zeros((5, 2)))
    rp = lift_piecewise_linear(p)
    rep = norm_report(rp)
    assert rep.pvar == 0 and rep.area_qvar == 0 and rep.rough_holder == 0


@given(st.integers(2, 9), st.integers(1, 3), st.floats(2.0, 3.5), st.integers(0, 2**32 - 1))
def test_pvar_dp_matches_enumeration_bitwise(n, m, p, seed):
    rp = random_lift(np.random.default_rng(seed), n, m)
    v = np.ascontiguousarray(rp.values)
    W = _kernels.path_weights(v, 0, n, p)
    assert pvar_seminorm(rp.path, p) == brute_force(W, 0, n) ** (1.0 / p)
    Wa = _kernels.area_weights(v, np.ascontiguousarray(rp.blocks), 0, n, p / 2.0)
    assert area_qvar(rp, p / 2.0) == brute_force(Wa, 0, n) ** (2.0 / p)


@given(st.integers(2, 8), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_variation_against_independent_weights(n, m, seed):
    rp = random_lift(np.random.default_rng(seed), n, m)
    p = rp.p
    W = np.zeros((n + 1, n + 1))
    Wa = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            W[i, j] = np.linalg.norm(rp.values[j] - rp.values[i]) ** p
            Wa[i, j] = np.linalg.norm(independent_area(rp, i, j)) ** (p / 2)
    assert pvar_seminorm(rp.path, p) == pytest.approx(brute_force(W, 0, n) ** (1 / p), rel=1e-12)
    assert area_qvar(rp, p / 2) == pytest.approx(brute_force(Wa, 0, n) ** (2 / p), rel=1e-12, abs=1e-300)


@given(st.integers(2, 25), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_holder_against_direct_maximum(n, m, seed):
    rp = random_lift(np.random.default_rng(seed), n, m)
    a = rp.alpha
    T = chen_table(rp)
    t, v = rp.times, rp.values
    hx = max(np.linalg.norm(v[j] - v[i]) / (t[j] - t[i]) ** a for i in range(n + 1) for j in range(i + 1, n + 1))
    ha = max(np.linalg.norm(T[i, j]) / (t[j] - t[i]) ** (2 * a) for i in range(n + 1) for j in range(i + 1, n + 1))
    assert holder_seminorm(rp.path, a) == pytest.approx(hx, rel=1e-13)
    assert area_2holder(rp, a) == pytest.approx(ha, rel=1e-12)
    assert rough_holder(rp) == pytest.approx(hx + np.sqrt(ha), rel=1e-12)


@given(st.integers(3, 30), st.integers(0, 2**32 - 1))
def test_rough_pvar_profile_is_monotone_and_prefix_stable(n, seed):
    rp = random_lift(np.random.default_rng(seed), n, 2)
    prof = rough_pvar_profile(rp, 0, n)
    assert np.all(np.diff(prof) >= 0)
    k = n // 2
    assert np.array_equal(rough_pvar_profile(rp, 0, k), prof[: k + 1])
    assert prof[-1] == rough_pvar(rp)


@given(st.integers(4, 30), st.integers(0, 2**32 - 1))
def test_variation_is_superadditive(n, seed):
    rp = random_lift(np.random.default_rng(seed), n, 2)
    p = rp.p
    k = n // 2
    whole = pvar_seminorm(rp.path, p) ** p
    parts = pvar_seminorm(rp.path, p, 0, k) ** p + pvar_seminorm(rp.path, p, k, n) ** p
    assert whole >= parts * (1 - 1e-14)


def test_pvar_decreasing_in_p(rng):
    rp = random_lift(rng, 30, 2)
    vals = [pvar_seminorm(rp.path, p) for p in (1.0, 1.5, 2.0, 2.5, 3.0)]
    assert all(a >= b * (1 - 1e-14) for a, b in zip(vals, vals[1:]))


def test_range_validation(rng):
    rp = random_lift(rng, 5, 1)
    with pytest.raises(ValueError):
        pvar_seminorm(rp.path, 2.0, 3, 3)
    with pytest.raises(ValueError):
        pvar_seminorm(rp.path, 0.5)
    with pytest.raises(ValueError):
        holder_seminorm(rp.path, 1.2)
    assert MAX_RANGE >= 4096


def test_controlled_norms_of_driver(rng):
    rp = random_lift(rng, 12, 2)
    y = ControlledGridPath(rp, rp.values, np.broadcast_to(np.eye(2), (13, 2, 2)))
    assert remainder_qvar(y, rp, rp.q) == 0.0
    assert controlled_norm(y, rp, "pvar") == 0.0
    assert controlled_norm(y, rp, "holder") == 0.0
    assert path_remainder_pvar(y, rp) == pytest.approx(pvar_seminorm(rp.path, rp.p))
    with pytest.raises(ValueError):
        controlled_norm(y, rp, "sup")


def test_norm_report_json_roundtrip(rng):
    import json

    rp = random_lift(rng, 10, 2)
    rep = norm_report(rp)
    d = json.loads(rep.to_json())
    assert d["rough_pvar"] == rep.rough_pvar
    assert rep.rough_pvar == pytest.approx((rep.pvar**rp.p + rep.area_qvar**rp.q) ** (1 / rp.p))
