"""The affine floor gauge on coefficient space and the balls it defines.

``floor_gauge(zeta) = E(sum zeta_j w_j)`` is absolutely homogeneous and
positive-definite but, for large enough ``m``, neither subadditive nor
convex. The searches here look for concrete pairs showing that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .basis import BasisSpec, DomainSpec, build_basis, expand, w1pm_norm
from .energy import EnergyParams, affine_energy, energy_and_grad
from .sphere import SphereRule, build_circle_rule, DEFAULT_SPHERE_POINTS
from .basis import DEFAULT_QUAD_ORDER

WITNESS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class GaugeContext:
    basis: BasisSpec
    rule: SphereRule
    params: EnergyParams

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def p(self) -> float:
        return self.params.p


def make_context(
    m: int,
    p: float,
    quad_order: int = DEFAULT_QUAD_ORDER,
    sphere_points: int = DEFAULT_SPHERE_POINTS,
    eps_zero: float = 1e-12,
) -> GaugeContext:
    return GaugeContext(
        build_basis(m, DomainSpec(quad_order)),
        build_circle_rule(sphere_points),
        EnergyParams(p, eps_zero=eps_zero),
    )


def floor_gauge(zeta, ctx: GaugeContext) -> float:
    return affine_energy(expand(zeta, ctx.basis), ctx.rule, ctx.params).energy


def gauge_norm(zeta, ctx: GaugeContext) -> float:
    """The norm ``||zeta||_{1,p,m}`` paired with the floor gauge."""
    return w1pm_norm(zeta, ctx.basis, ctx.p)


def _gauge_and_grad(zeta, ctx):
    # gradient of E itself: grad(E^p / p) = E^{p-1} grad E
    E, g = energy_and_grad(zeta, ctx.basis, ctx.rule, ctx.params)
    if E == 0.0:
        return 0.0, np.zeros_like(g)
    return E, g / E ** (ctx.p - 1)


def in_affine_ball(zeta, center, rho: float, ctx: GaugeContext) -> bool:
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    d = np.asarray(zeta, float) - np.asarray(center, float)
    return floor_gauge(d, ctx) <= rho


def map_T(x, center, rho: float, ctx: GaugeContext, rtol: float = 1e-12) -> np.ndarray:
    """Send the affine ball about ``center`` onto the unit ball of ``||.||_{1,p,m}``."""
    d = np.asarray(x, float) - np.asarray(center, float)
    if not np.any(d):
        return np.zeros_like(d)
    fl = floor_gauge(d, ctx)
    if fl > rho * (1 + rtol):
        raise ValueError(f"point has gauge {fl:.6g} > rho={rho:.6g}; outside the affine ball")
    return (d / rho) * (fl / gauge_norm(d, ctx))


def map_G(x, center, rho: float, ctx: GaugeContext, rtol: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`map_T`."""
    x = np.asarray(x, float)
    center = np.asarray(center, float)
    if not np.any(x):
        return center.copy()
    nrm = gauge_norm(x, ctx)
    if nrm > 1 + rtol:
        raise ValueError(f"point has norm {nrm:.6g} > 1; outside the unit norm ball")
    return rho * x * (nrm / floor_gauge(x, ctx)) + center


def sample_gauge_sphere(ctx: GaugeContext, rho: float, n: int, rng, center=None) -> np.ndarray:
    """``n`` points with ``floor_gauge(z - center) == rho``, via ``map_G`` of norm-sphere points."""
    center = np.zeros(ctx.m) if center is None else np.asarray(center, float)
    out = np.empty((n, ctx.m))
    for i in range(n):
        d = rng.standard_normal(ctx.m)
        d /= gauge_norm(d, ctx)
        out[i] = map_G(d, center, rho, ctx)
    return out


@dataclass(frozen=True, eq=False)
class Witness:
    kind: str  # "triangle_violation" | "nonconvexity"
    u: np.ndarray
    v: np.ndarray
    margin: float
    seed: int
    budget: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "margin": self.margin,
            "seed": self.seed,
            "budget": self.budget,
            "u": self.u.tolist(),
            "v": self.v.tolist(),
        }


def triangle_ratio(u, v, ctx: GaugeContext) -> float:
    """``floor(u + v) / (floor(u) + floor(v))``; 1 when both vanish."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    den = floor_gauge(u, ctx) + floor_gauge(v, ctx)
    if den == 0.0:
        return 1.0
    return floor_gauge(u + v, ctx) / den


def midpoint_ratio(u, v, ctx: GaugeContext) -> float:
    """Gauge of the midpoint of ``u``, ``v`` after scaling both onto the unit gauge sphere,
    relative to the larger of the two scaled gauges."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    a, b = floor_gauge(u, ctx), floor_gauge(v, ctx)
    if a == 0.0 or b == 0.0:
        return 1.0
    uh, vh = u / a, v / b
    rho = max(floor_gauge(uh, ctx), floor_gauge(vh, ctx))
    return floor_gauge(0.5 * (uh + vh), ctx) / rho


def _triangle_objective(z, ctx):
    m = ctx.m
    u, v = z[:m], z[m:]
    a, ga = _gauge_and_grad(u, ctx)
    b, gb = _gauge_and_grad(v, ctx)
    c, gc = _gauge_and_grad(u + v, ctx)
    s = a + b
    if s == 0.0:
        return -1.0, np.zeros_like(z)
    r = c / s
    du = gc / s - r * ga / s
    dv = gc / s - r * gb / s
    return -r, -np.concatenate([du, dv])


def _midpoint_objective(z, ctx):
    m = ctx.m
    u, v = z[:m], z[m:]
    a, ga = _gauge_and_grad(u, ctx)
    b, gb = _gauge_and_grad(v, ctx)
    if a == 0.0 or b == 0.0:
        return -1.0, np.zeros_like(z)
    mid = 0.5 * (u / a + v / b)
    c, gc = _gauge_and_grad(mid, ctx)
    # d(u/a)/du = (I - u ga^T / a) / a, applied transposed to gc / 2
    du = 0.5 * (gc - ga * (u @ gc) / a) / a
    dv = 0.5 * (gc - gb * (v @ gc) / b) / b
    return -c, -np.concatenate([du, dv])


def _anisotropic_start(rng, pairs) -> np.ndarray:
    """Sparse pair with ``u`` on x-dominant modes and ``v`` on y-dominant ones."""
    m = len(pairs)
    z = np.zeros(2 * m)
    x_modes = [i for i, (j, k) in enumerate(pairs) if j >= k]
    y_modes = [i for i, (j, k) in enumerate(pairs) if k >= j]
    for half, modes in ((0, x_modes), (m, y_modes)):
        k = int(rng.integers(1, min(3, len(modes)) + 1))
        idx = rng.choice(modes, size=k, replace=False)
        z[half + idx] = rng.standard_normal(k)
    # dense low-amplitude fill so the pair is not confined to a face
    z += 0.1 * rng.standard_normal(2 * m)
    return z


def _search(kind, ctx, seed, budget, max_starts, patience):
    if ctx.m < 2:
        raise ValueError("witness searches need m >= 2")
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")
    m = ctx.m
    objective = _triangle_objective if kind == "triangle_violation" else _midpoint_objective
    score = triangle_ratio if kind == "triangle_violation" else midpoint_ratio
    rng = np.random.default_rng(seed)

    best_r, best_z = -np.inf, None
    used = 0
    since_found = 0
    for _ in range(max_starts):
        if used >= budget:
            break
        z0 = _anisotropic_start(rng, ctx.basis.pairs)
        res = minimize(
            objective,
            z0,
            args=(ctx,),
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": budget - used, "maxiter": 500, "ftol": 1e-14, "gtol": 1e-10},
        )
        used += int(res.nfev)
        r = score(res.x[:m], res.x[m:], ctx)
        if r > best_r:
            best_r, best_z = r, res.x
        if best_r > 1 + WITNESS_TOL:
            since_found += 1
            if since_found > patience:
                break

    if best_z is None or not best_r > 1 + WITNESS_TOL:
        return None
    u, v = best_z[:m].copy(), best_z[m:].copy()
    if kind == "nonconvexity":
        u /= floor_gauge(u, ctx)
        v /= floor_gauge(v, ctx)
    return Witness(kind, u, v, float(best_r - 1), seed, budget)


def search_triangle_violation(
    ctx: GaugeContext, seed: int = 0, budget: int = 10_000, max_starts: int = 64, patience: int = 3
):
    """Look for ``u, v`` with ``floor(u + v) > floor(u) + floor(v)``.

    Each start is a sparse anisotropic pair polished by L-BFGS on the ratio
    with analytic gauge gradients; the search stops ``patience`` starts after
    the first violation. ``budget`` bounds the number of ratio evaluations. Returns ``None`` when no pair beats
    ``1 + 1e-6``; that is inconclusive, not a proof of subadditivity.
    """
    return _search("triangle_violation", ctx, seed, budget, max_starts, patience)


def search_nonconvexity(
    ctx: GaugeContext, seed: int = 0, budget: int = 10_000, max_starts: int = 64, patience: int = 3
):
    """Look for ``u, v`` in the unit affine ball whose midpoint leaves the ball.

    The returned ``u``, ``v`` lie on the unit gauge sphere (up to rounding) and
    ``margin = floor((u + v) / 2) / max(floor(u), floor(v)) - 1``.
    """
    return _search("nonconvexity", ctx, seed, budget, max_starts, patience)


def replay_witness(w: Witness, ctx: GaugeContext) -> Witness | None:
    search = search_triangle_violation if w.kind == "triangle_violation" else search_nonconvexity
    return search(ctx, seed=w.seed, budget=w.budget)


def gauge_equivalence(ctx: GaugeContext, samples: int = 1000, seed: int = 0) -> dict:
    """Empirical constants for ``floor(z) <= ||z||_{1,p,m} <= c(m) |z|_2``."""
    rng = np.random.default_rng(seed)
    c_m = 0.0
    min_floor_ratio = np.inf
    violations = 0
    for _ in range(samples):
        z = rng.standard_normal(ctx.m)
        fl, nrm, eu = floor_gauge(z, ctx), gauge_norm(z, ctx), np.linalg.norm(z)
        c_m = max(c_m, nrm / eu)
        min_floor_ratio = min(min_floor_ratio, fl / eu)
        if fl > nrm * (1 + 1e-6):
            violations += 1
    return {"c_m": c_m, "min_floor_over_euclid": min_floor_ratio, "violations": violations, "samples": samples}
