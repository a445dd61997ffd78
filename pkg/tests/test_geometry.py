import math

import numpy as np
import pytest

from affine_lp.geometry import (
    Witness,
    floor_gauge,
    gauge_equivalence,
    gauge_norm,
    in_affine_ball,
    make_context,
    map_G,
    map_T,
    midpoint_ratio,
    replay_witness,
    sample_gauge_sphere,
    search_nonconvexity,
    search_triangle_violation,
    triangle_ratio,
)


@pytest.fixture(scope="module")
def coarse6():
    return make_context(6, 2.0, quad_order=24, sphere_points=64)


def test_floor_gauge_basics(ctx10, rng):
    assert floor_gauge(np.zeros(10), ctx10) == 0.0
    e1 = np.eye(10)[0]
    assert abs(floor_gauge(e1, ctx10) - math.pi / math.sqrt(2)) < 1e-12
    z = rng.standard_normal(10)
    assert abs(floor_gauge(-3 * z, ctx10) - 3 * floor_gauge(z, ctx10)) < 1e-12 * floor_gauge(z, ctx10)
    assert floor_gauge(z, ctx10) <= gauge_norm(z, ctx10) * (1 + 1e-12)


def test_in_affine_ball(ctx10):
    e1 = np.eye(10)[0]
    r = math.pi / math.sqrt(2)
    assert in_affine_ball(e1, np.zeros(10), r * (1 + 1e-9), ctx10)
    assert not in_affine_ball(e1, np.zeros(10), r * 0.99, ctx10)
    with pytest.raises(ValueError):
        in_affine_ball(e1, np.zeros(10), 0.0, ctx10)


def test_map_T_and_G_roundtrip(ctx10, rng):
    for _ in range(20):
        c = rng.standard_normal(10)
        rho = rng.uniform(0.1, 5)
        d = rng.standard_normal(10)
        x = c + d * rng.uniform(0, 1) * rho / floor_gauge(d, ctx10)
        y = map_T(x, c, rho, ctx10)
        assert gauge_norm(y, ctx10) <= 1 + 1e-12
        assert np.linalg.norm(map_G(y, c, rho, ctx10) - x) < 1e-10
        y2 = rng.standard_normal(10)
        y2 *= rng.uniform(0, 1) / gauge_norm(y2, ctx10)
        assert np.linalg.norm(map_T(map_G(y2, c, rho, ctx10), c, rho, ctx10) - y2) < 1e-10


def test_maps_fix_centers_and_boundaries(ctx10, rng):
    c = rng.standard_normal(10)
    assert not np.any(map_T(c, c, 2.0, ctx10))
    assert np.array_equal(map_G(np.zeros(10), c, 2.0, ctx10), c)
    d = rng.standard_normal(10)
    x = c + 2.0 * d / floor_gauge(d, ctx10)
    assert abs(gauge_norm(map_T(x, c, 2.0, ctx10), ctx10) - 1) < 1e-12


def test_maps_reject_outside(ctx10):
    e1 = np.eye(10)[0]
    with pytest.raises(ValueError):
        map_T(10 * e1, np.zeros(10), 1.0, ctx10)
    with pytest.raises(ValueError):
        map_G(10 * e1, np.zeros(10), 1.0, ctx10)


def test_sample_gauge_sphere(ctx10, rng):
    c = rng.standard_normal(10)
    pts = sample_gauge_sphere(ctx10, 0.7, 10, rng, center=c)
    for z in pts:
        assert abs(floor_gauge(z - c, ctx10) - 0.7) < 1e-12


def test_ratios_trivial_cases(ctx10, rng):
    z = rng.standard_normal(10)
    assert abs(triangle_ratio(z, 2 * z, ctx10) - 1) < 1e-12
    assert triangle_ratio(np.zeros(10), np.zeros(10), ctx10) == 1.0
    assert abs(midpoint_ratio(z, 5 * z, ctx10) - 1) < 1e-12


def test_no_witness_for_small_m():
    ctx = make_context(3, 2.0, quad_order=24, sphere_points=64)
    assert search_triangle_violation(ctx, seed=0, budget=1500) is None
    with pytest.raises(ValueError):
        search_nonconvexity(make_context(1, 2.0), budget=10)
    with pytest.raises(ValueError):
        search_triangle_violation(ctx, budget=0)


def test_triangle_witness_and_replay(coarse6):
    w = search_triangle_violation(coarse6, seed=0, budget=3000)
    assert isinstance(w, Witness) and w.kind == "triangle_violation"
    assert w.margin > 1e-4
    # margin is certified by direct evaluation
    lhs = floor_gauge(w.u + w.v, coarse6)
    assert lhs > floor_gauge(w.u, coarse6) + floor_gauge(w.v, coarse6)
    assert abs(triangle_ratio(w.u, w.v, coarse6) - 1 - w.margin) < 1e-14
    again = replay_witness(w, coarse6)
    assert again.margin == w.margin
    assert np.array_equal(again.u, w.u) and np.array_equal(again.v, w.v)
    d = w.to_dict()
    assert d["seed"] == 0 and len(d["u"]) == 6


def test_nonconvexity_witness(coarse6):
    w = search_nonconvexity(coarse6, seed=1, budget=3000)
    assert w is not None and w.margin > 1e-4
    assert abs(floor_gauge(w.u, coarse6) - 1) < 1e-12
    assert abs(floor_gauge(w.v, coarse6) - 1) < 1e-12
    assert floor_gauge(0.5 * (w.u + w.v), coarse6) > 1 + 1e-4


def test_gauge_equivalence(ctx10):
    rep = gauge_equivalence(ctx10, samples=100, seed=0)
    assert rep["violations"] == 0
    assert rep["min_floor_over_euclid"] > 0
    assert rep["c_m"] >= math.pi / math.sqrt(2)


def test_witness_seed42_full_resolution():
    ctx = make_context(6, 2.0)
    w = search_triangle_violation(ctx, seed=42, budget=10_000)
    assert w is not None and w.margin > 0
    assert w.seed == 42 and w.budget == 10_000
