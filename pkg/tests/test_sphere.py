import math

import numpy as np
import pytest

from affine_lp.sphere import build_circle_rule, integrate_sphere


def _angles(rule):
    return np.arctan2(rule.xis[:, 1], rule.xis[:, 0])


def test_four_point_rule():
    r = build_circle_rule(4)
    np.testing.assert_allclose(r.xis, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    np.testing.assert_allclose(r.weights, math.pi / 2)


def test_rule_invariants():
    r = build_circle_rule(256)
    assert abs(r.weights.sum() - 2 * math.pi) < 1e-12
    assert np.max(np.abs(np.linalg.norm(r.xis, axis=1) - 1)) < 1e-14
    assert len({tuple(np.round(x, 12)) for x in r.xis}) == 256


def test_rejects_small_rule():
    with pytest.raises(ValueError):
        build_circle_rule(3)


@pytest.mark.parametrize("M", [4, 7, 64, 256])
def test_constants(M):
    r = build_circle_rule(M)
    assert abs(integrate_sphere(r, np.ones(M)) - 2 * math.pi) < 1e-12
    assert integrate_sphere(r, np.zeros(M)) == 0.0
    assert abs(integrate_sphere(r, np.full(M, -1.5)) + 3 * math.pi) < 1e-12


def test_cos_squared_exact():
    r = build_circle_rule(8)
    assert abs(integrate_sphere(r, np.cos(_angles(r)) ** 2) - math.pi) < 1e-14


def test_abs_cos_cubed():
    # int_0^{2 pi} |cos|^3 = 8/3; |cos|^3 is C^2 at its zeros, so the trapezoid
    # error decays like M^-4 (about 3e-6 at M=64) and reaches 1e-10 by M=1024.
    errs = {}
    for M in (64, 128, 256, 1024):
        r = build_circle_rule(M)
        errs[M] = abs(integrate_sphere(r, np.abs(np.cos(_angles(r))) ** 3) - 8 / 3)
    assert errs[64] < 1e-5
    assert 12 < errs[64] / errs[128] < 20
    assert errs[1024] < 1e-10


def test_length_mismatch():
    with pytest.raises(ValueError):
        integrate_sphere(build_circle_rule(8), np.ones(7))


def test_rotation_shift_consistency(rng):
    M = 32
    base, shifted = build_circle_rule(M), build_circle_rule(M, shift=0.3137)
    coef = rng.standard_normal((2, M // 2 - 1))

    def trig(rule):
        th = _angles(rule)
        k = np.arange(1, M // 2)
        return 0.7 + np.cos(np.outer(th, k)) @ coef[0] + np.sin(np.outer(th, k)) @ coef[1]

    assert abs(integrate_sphere(base, trig(base)) - integrate_sphere(shifted, trig(shifted))) < 1e-12
