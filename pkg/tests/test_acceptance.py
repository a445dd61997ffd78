"""End-to-end acceptance criteria, each at its stated tolerance and time limit.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary and when this file is run as a script.
"""

import math
import time

import numpy as np
import pytest

from affine_lp.basis import DomainSpec, build_basis, expand, field_from_function
from affine_lp.energy import EnergyParams, affine_energy, energy_and_grad
from affine_lp.fixed_point import GaugeBallSpec, NormGauge, find_zero, linear_field, run_harness
from affine_lp.galerkin import (
    ProblemSpec,
    assemble_F,
    coercivity_check,
    estimate_mu,
    estimate_mu_sweep,
    existence_radius,
    m_sweep,
    phi_m,
)
from affine_lp.geometry import (
    floor_gauge,
    gauge_norm,
    make_context,
    map_G,
    map_T,
    replay_witness,
    search_nonconvexity,
    search_triangle_violation,
)
from affine_lp.sphere import build_circle_rule

from helpers import ACCEPTANCE_LINES, gaussian_bump, random_unimodular

RULE = build_circle_rule(256)
SWEEP_M = [5, 10, 15, 20, 25]


def record(num, name, ok, detail, elapsed, limit):
    in_time = elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    line = f"[{status}] {num:2d} {name}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert in_time, line


def test_01_isotropic_equality():
    t = time.perf_counter()
    worst = 0.0
    for m in (1, 2, 5, 10, 25):
        z = np.zeros(m)
        z[0] = 1.0
        E = affine_energy(expand(z, build_basis(m)), RULE, EnergyParams(2.0)).energy
        worst = max(worst, abs(E - math.pi / math.sqrt(2)) / (math.pi / math.sqrt(2)))
    record(1, "isotropic equality", worst < 1e-6, f"max rel err {worst:.2e}", time.perf_counter() - t, 1)


def test_02_upper_bound():
    t = time.perf_counter()
    rng = np.random.default_rng(2)
    b = build_basis(10)
    violations, worst = 0, 0.0
    for p in (1.5, 2.0, 3.0):
        par = EnergyParams(p)
        for _ in range(1000):
            br = affine_energy(expand(rng.standard_normal(10), b), RULE, par)
            worst = max(worst, br.energy / br.grad_norm)
            violations += br.energy > (1 + 1e-6) * br.grad_norm
    record(2, "upper bound E <= ||grad u||_p", violations == 0,
           f"{violations} violations in 3000 samples, max ratio {worst:.8f}", time.perf_counter() - t, 30)


def test_03_sl2_invariance():
    t = time.perf_counter()
    rng = np.random.default_rng(3)
    dom = DomainSpec(128)
    par = EnergyParams(2.0)
    e0 = affine_energy(field_from_function(gaussian_bump(), dom), RULE, par).energy
    worst = 0.0
    for _ in range(10):
        A = random_unimodular(rng)
        e = affine_energy(field_from_function(gaussian_bump(A), dom), RULE, par).energy
        worst = max(worst, abs(e - e0) / e0)
    record(3, "SL(2) invariance", worst < 1e-6, f"max rel change {worst:.2e} over 10 shears",
           time.perf_counter() - t, 10)


def test_04_euler_identity():
    t = time.perf_counter()
    rng = np.random.default_rng(4)
    b = build_basis(10)
    worst = 0.0
    for p in (2.0, 2.5):
        par = EnergyParams(p)
        for _ in range(100):
            z = rng.standard_normal(10)
            E, g = energy_and_grad(z, b, RULE, par)
            worst = max(worst, abs(g @ z - E**p) / E**p)
    record(4, "Euler identity", worst < 1e-10, f"max rel err {worst:.2e}", time.perf_counter() - t, 30)


def test_05_gradient_correctness():
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    spec = ProblemSpec(p=2.0, alpha=1.5, m=10)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        z = rng.standard_normal(10)
        F = assemble_F(z, spec)
        for j in range(10):
            e = np.zeros(10)
            e[j] = h
            fd = (phi_m(z + e, spec) - phi_m(z - e, spec)) / (2 * h)
            worst = max(worst, abs(fd - F[j]) / abs(F[j]))
    record(5, "assemble_F vs finite differences", worst < 1e-5, f"max componentwise rel err {worst:.2e}",
           time.perf_counter() - t, 60)


def test_06_witnesses():
    t = time.perf_counter()
    ctx = make_context(8, 2.0)
    tri = search_triangle_violation(ctx, seed=0, budget=10_000)
    non = search_nonconvexity(ctx, seed=0, budget=10_000)
    ok = tri is not None and non is not None and tri.margin > 1e-4 and non.margin > 1e-4
    detail = "no witness found"
    if ok:
        replays = [replay_witness(w, ctx) for w in (tri, non)]
        same = all(
            r.margin == w.margin and np.array_equal(r.u, w.u) and np.array_equal(r.v, w.v)
            for r, w in zip(replays, (tri, non))
        )
        ok = same
        detail = f"margins {tri.margin:.4f} / {non.margin:.4f}, replay {'bit-exact' if same else 'DIFFERS'}"
    record(6, "non-norm and non-convexity witnesses", ok, detail, time.perf_counter() - t, 60)


def test_07_homeomorphism_roundtrip():
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    ctx = make_context(10, 2.0)
    worst_tg, worst_gt = 0.0, 0.0
    for _ in range(1000):
        c = rng.standard_normal(10)
        rho = rng.uniform(0.1, 5.0)
        d = rng.standard_normal(10)
        x = c + d * rng.uniform(0, 1) * rho / floor_gauge(d, ctx)
        worst_tg = max(worst_tg, np.linalg.norm(map_G(map_T(x, c, rho, ctx), c, rho, ctx) - x))
        y = rng.standard_normal(10)
        y *= rng.uniform(0, 1) / gauge_norm(y, ctx)
        worst_gt = max(worst_gt, np.linalg.norm(map_T(map_G(y, c, rho, ctx), c, rho, ctx) - y))
    ok = max(worst_tg, worst_gt) < 1e-10
    record(7, "homeomorphism roundtrip", ok, f"max |G(T(x))-x| {worst_tg:.1e}, |T(G(y))-y| {worst_gt:.1e}",
           time.perf_counter() - t, 30)


def test_08_fixed_point_harness():
    t = time.perf_counter()
    res = run_harness(cases=100, seed=8, m_max=10, tol=1e-8, ctx_factory=lambda m: make_context(m, 2.0))
    lin_err = 0.0
    for m in range(2, 11):
        F = linear_field(m, seed=m, scale=0.5)
        zr = find_zero(F, GaugeBallSpec(NormGauge(), np.zeros(m), 1.0), tol=1e-8)
        lin_err = max(lin_err, np.max(np.abs(zr.z - F.expected_zero)) if zr.success else np.inf)
    ok = res.successes >= 95 and lin_err <= 1e-8
    record(8, "fixed-point harness", ok,
           f"{res.successes}/100 solved, linear oracle max err {lin_err:.1e}", time.perf_counter() - t, 120)


@pytest.fixture(scope="module")
def galerkin_radius():
    t = time.perf_counter()
    spec = ProblemSpec(p=2.0, alpha=1.5, m=max(SWEEP_M))
    radius = existence_radius(spec, samples=200, seed=0)
    return spec, radius, time.perf_counter() - t


def test_09_galerkin_sweep(galerkin_radius):
    spec, radius, t_radius = galerkin_radius
    t = time.perf_counter()
    sweep = m_sweep(spec, SWEEP_M, seed=1, radius=radius)
    rho = radius.rho
    bad = []
    for r in sweep.results:
        if not (r.residual_sup <= 1e-8 and r.energy <= rho and r.l2_norm_of_u > 0
                and r.identity_gap <= 1e-6 * r.energy_p and r.status == "converged"):
            bad.append(r.m)
    bound = sweep.max_energy_p
    ok = not bad and math.isfinite(bound)
    detail = (f"rho {rho:.6f}, max E^p(u_m) {bound:.6f}, max residual "
              f"{max(r.residual_sup for r in sweep.results):.1e}, failing m {bad or 'none'}")
    record(9, "Galerkin end-to-end sweep", ok, detail, t_radius + time.perf_counter() - t, 600)


def test_10_mu_estimates():
    t = time.perf_counter()
    spec = ProblemSpec(p=2.0, alpha=1.5, m=1)
    mu1 = estimate_mu(spec, 2.0).value
    sweep = [e.value for e in estimate_mu_sweep(spec, 2.0, [1, 3, 6, 10])]
    mono = all(b <= a + 1e-10 for a, b in zip(sweep, sweep[1:]))
    ok = abs(mu1 - math.pi * math.sqrt(2)) < 1e-6 and mono
    record(10, "mu estimates", ok,
           f"mu(m=1) {mu1:.10f}, sweep {', '.join(f'{v:.10f}' for v in sweep)}", time.perf_counter() - t, 60)


def test_11_boundary_coercivity(galerkin_radius):
    spec, radius, _ = galerkin_radius
    t = time.perf_counter()
    rep = coercivity_check(spec, radius.rho, samples=200, seed=11)
    ok = rep.min_pairing > 0
    record(11, "boundary coercivity at rho", ok,
           f"min <F(z),z> {rep.min_pairing:.4f} on 200 points, rho {radius.rho:.6f} "
           f"({radius.inflations} inflations)", time.perf_counter() - t, 60)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
