"""Critical points of the affine functional on the Galerkin subspace W_m.

    Phi_m(u) = E(u)^p / p - ||u||_alpha^alpha / alpha - int f u,   1 < alpha < p.

Its coefficient-space gradient ``F`` points outward on every affine sphere of
radius ``rho`` (the existence radius computed from the affine
Poincare-Sobolev constants), so ``F`` has a zero ``u_m`` with ``E(u_m) <= rho``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .basis import DEFAULT_QUAD_ORDER, abs_pow, expand, lq_norm
from .energy import affine_energy, energy_and_grad, signed_pow
from .fixed_point import AffineGauge, GaugeBallSpec, VectorField, boundary_condition_check, find_zero
from .geometry import GaugeContext, gauge_norm, make_context
from .sphere import DEFAULT_SPHERE_POINTS

log = logging.getLogger(__name__)


# -- sources ------------------------------------------------------------------


@dataclass(frozen=True)
class Source:
    """Closed-form right-hand side ``f``.

    ``kind`` is ``constant`` (terms ``((c,),)``), ``poly`` (terms
    ``(a, b, c)`` for ``c x^a y^b``) or ``sine`` (terms ``(j, k, c)`` for
    ``c sin(j pi x) sin(k pi y)``).
    """

    kind: str = "constant"
    terms: tuple = ((1.0,),)

    def __post_init__(self):
        if self.kind not in ("constant", "poly", "sine"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        width = 1 if self.kind == "constant" else 3
        if not self.terms or any(len(t) != width for t in self.terms):
            raise ValueError(f"{self.kind} source needs terms of length {width}")

    @classmethod
    def parse(cls, text: str) -> "Source":
        """``"constant:1"``, ``"poly:0,0,1;1,0,-2"`` or ``"sine:1,1,2.0;2,1,0.5"``."""
        kind, _, body = str(text).partition(":")
        kind = kind.strip()
        if not body:
            raise ValueError(f"source {text!r} should look like kind:terms")
        terms = tuple(tuple(float(x) for x in chunk.split(",")) for chunk in body.split(";") if chunk.strip())
        return cls(kind, terms)

    def __str__(self):
        body = ";".join(",".join(repr(x) for x in t) for t in self.terms)
        return f"{self.kind}:{body}"

    def __call__(self, x, y):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        if self.kind == "constant":
            return out + self.terms[0][0]
        for a, b, c in self.terms:
            if self.kind == "poly":
                out += c * x**a * y**b
            else:
                out += c * np.sin(a * np.pi * x) * np.sin(b * np.pi * y)
        return out


# -- problem ------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    p: float = 2.0
    alpha: float = 1.5
    source: Source = field(default_factory=Source)
    m: int = 10
    quad_order: int = DEFAULT_QUAD_ORDER
    sphere_points: int = DEFAULT_SPHERE_POINTS
    eps_zero: float = 1e-12
    tol: float = 1e-8
    identity_rtol: float = 1e-6

    def __post_init__(self):
        if not 1 < self.alpha < self.p:
            raise ValueError(f"need 1 < alpha < p, got alpha={self.alpha}, p={self.p}")

    @property
    def n(self) -> int:
        return 2

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def p_star(self) -> float:
        """Critical Sobolev exponent (``inf`` when ``p >= n``)."""
        return self.n * self.p / (self.n - self.p) if self.p < self.n else math.inf

    @cached_property
    def ctx(self) -> GaugeContext:
        return make_context(self.m, self.p, self.quad_order, self.sphere_points, self.eps_zero)

    @cached_property
    def f_values(self) -> np.ndarray:
        pts = self.ctx.basis.domain.points
        return self.source(pts[:, 0], pts[:, 1])

    @cached_property
    def load(self) -> np.ndarray:
        """``int f w_j`` for every basis function."""
        b = self.ctx.basis
        return b.values @ (b.weights * self.f_values)

    @property
    def f_is_zero(self) -> bool:
        return not np.any(self.f_values)

    def f_norm(self, r: float | None = None) -> float:
        """``||f||_{L^r}``, default ``r = p'``."""
        r = self.p_conj if r is None else r
        w = self.ctx.basis.weights
        return float(w @ abs_pow(self.f_values, r)) ** (1.0 / r)

    def with_m(self, m: int) -> "ProblemSpec":
        return replace(self, m=m)


def phi_m(zeta, spec: ProblemSpec) -> float:
    ctx = spec.ctx
    fld = expand(zeta, ctx.basis)
    E = affine_energy(fld, ctx.rule, ctx.params).energy
    w = ctx.basis.weights
    ua = w @ abs_pow(fld.values, spec.alpha)
    return E**spec.p / spec.p - ua / spec.alpha - w @ (spec.f_values * fld.values)


def _nonlinear_load(values, spec):
    # int |u|^{alpha-2} u w_j ; nodes with |u| < 1e-300 contribute 0
    b = spec.ctx.basis
    s = signed_pow(values, spec.alpha - 1)
    s = np.where(np.abs(values) < 1e-300, 0.0, s)
    return b.values @ (b.weights * s)


def assemble_F(zeta, spec: ProblemSpec) -> np.ndarray:
    ctx = spec.ctx
    zeta = np.asarray(zeta, float)
    _, g = energy_and_grad(zeta, ctx.basis, ctx.rule, ctx.params)
    values = zeta @ ctx.basis.values
    return g - _nonlinear_load(values, spec) - spec.load


def pairing_rhs(zeta, spec: ProblemSpec) -> float:
    """``E^p - ||u||_alpha^alpha - int f u`` by direct quadrature."""
    ctx = spec.ctx
    fld = expand(zeta, ctx.basis)
    E = affine_energy(fld, ctx.rule, ctx.params).energy
    w = ctx.basis.weights
    return E**spec.p - w @ abs_pow(fld.values, spec.alpha) - w @ (spec.f_values * fld.values)


def galerkin_field(spec: ProblemSpec) -> VectorField:
    return VectorField(lambda z: assemble_F(z, spec), f"galerkin(m={spec.m})")


# -- affine Poincare-Sobolev constants ----------------------------------------


@dataclass
class MuEstimate:
    value: float
    zeta: np.ndarray
    converged: bool
    iterations: int
    q: float
    m: int


def _check_q(spec, q):
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if spec.p < spec.n and q > spec.p_star:
        raise ValueError(f"q={q} exceeds the critical exponent {spec.p_star}")


def _log_ratio_and_grad(zeta, spec, q):
    ctx = spec.ctx
    E, g = energy_and_grad(zeta, ctx.basis, ctx.rule, ctx.params)
    values = zeta @ ctx.basis.values
    w = ctx.basis.weights
    nq = float(w @ abs_pow(values, q))
    # d log E = g / E^p ; d log ||u||_q = int |u|^{q-2} u w_j / ||u||_q^q
    dq = ctx.basis.values @ (w * signed_pow(values, q - 1))
    val = math.log(E) - math.log(nq) / q
    return val, g / E**spec.p - dq / nq


def _descend_ratio(z, spec, q, max_iter, gtol):
    """Projected gradient descent of ``log(E / ||u||_q)`` on the unit sphere.

    Barzilai-Borwein trial steps with an Armijo safeguard; stops on a small
    tangential gradient or when the value stagnates at roundoff level.
    """
    z = z / np.linalg.norm(z)
    f, g = _log_ratio_and_grad(z, spec, q)
    g -= (g @ z) * z
    t = 1.0 / max(np.linalg.norm(g), 1e-12)
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(g) <= gtol:
            return z, f, True, it - 1
        for _ in range(40):
            zn = z - t * g
            zn /= np.linalg.norm(zn)
            fn, gn = _log_ratio_and_grad(zn, spec, q)
            if fn <= f - 1e-4 * t * (g @ g):
                break
            t *= 0.5
        else:
            return z, f, np.linalg.norm(g) <= 1e3 * gtol, it
        stalled = stalled + 1 if f - fn <= 1e-15 * abs(f) else 0
        gn -= (gn @ zn) * zn
        s, y = zn - z, gn - g
        sy = s @ y
        t = (s @ s) / sy if sy > 0 else 2 * t
        z, f, g = zn, fn, gn
        if stalled >= 3:
            return z, f, np.linalg.norm(g) <= 1e3 * gtol, it
    return z, f, np.linalg.norm(g) <= gtol, it


def estimate_mu(spec: ProblemSpec, q: float, multistarts: int = 4, budget: int = 400, seed: int = 0, starts=()) -> MuEstimate:
    """Minimize ``E(u) / ||u||_{L^q}`` over ``W_m``.

    The minimum over a finite subspace bounds the optimal constant from above.
    Starts: the supplied ``starts`` (shorter vectors are zero-padded, as the
    bases are nested), the first basis function, and ``multistarts`` random
    vectors.
    """
    _check_q(spec, q)
    m = spec.m
    rng = np.random.default_rng(seed)
    cand = []
    for s in starts:
        s = np.asarray(s, float)
        cand.append(np.concatenate([s, np.zeros(m - s.size)])[:m])
    cand.append(np.eye(m)[0])
    cand.extend(rng.standard_normal((multistarts, m)) if m > 1 else [])
    best = None
    for z0 in cand:
        z, f, ok, it = _descend_ratio(z0, spec, q, budget, gtol=1e-9)
        if best is None or f < best[1]:
            best = (z, f, ok, it)
    z, f, ok, it = best
    if not ok:
        log.info("mu estimate (q=%g, m=%d) stopped before the gradient tolerance", q, m)
    return MuEstimate(math.exp(f), z, ok, it, q, m)


def estimate_mu_sweep(spec: ProblemSpec, q: float, m_list, seed: int = 0, **kw) -> list[MuEstimate]:
    """Estimates along nested subspaces, each warm-started from the previous optimum."""
    out = []
    prev = ()
    for m in m_list:
        est = estimate_mu(spec.with_m(m), q, seed=seed, starts=prev, **kw)
        out.append(est)
        prev = (est.zeta,)
    return out


def rho_bound(spec: ProblemSpec, mu_pp: float, mu_palpha: float) -> float:
    """Existence radius ``max{[2 ||f||_{p'} / mu_pp]^{1/(p-1)}, [2 mu_palpha^{-alpha}]^{1/(p-alpha)}} + 1``."""
    return rho_formula(spec.p, spec.alpha, spec.f_norm(), mu_pp, mu_palpha)


def rho_formula(p: float, alpha: float, f_norm: float, mu_pp: float, mu_palpha: float) -> float:
    if mu_pp <= 0 or mu_palpha <= 0:
        raise ValueError("Poincare-Sobolev constants must be positive")
    if f_norm < 0:
        raise ValueError("||f|| must be nonnegative")
    a = (2 * f_norm / mu_pp) ** (1 / (p - 1))
    b = (2 * mu_palpha ** (-alpha)) ** (1 / (p - alpha))
    return max(a, b) + 1


@dataclass
class RadiusResult:
    rho: float
    rho_formula: float
    mu_pp: float
    mu_palpha: float
    mu_source: str
    inflations: int
    boundary_min: float
    boundary_passed: bool
    samples: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def coercivity_check(spec: ProblemSpec, rho: float, samples: int = 200, seed: int = 0):
    """Sample ``<F(z), z>`` on the affine sphere of radius ``rho``."""
    ball = GaugeBallSpec(AffineGauge(spec.ctx), np.zeros(spec.m), rho)
    return boundary_condition_check(galerkin_field(spec), ball, samples, seed)


def existence_radius(
    spec: ProblemSpec, mu_pp: float | None = None, mu_palpha: float | None = None,
    samples: int = 200, seed: int = 0, max_inflations: int = 5,
) -> RadiusResult:
    """The existence radius, checked for outward pointing on the affine sphere.

    Missing constants are estimated on ``W_m``. Because those estimates sit
    above the true infima, a failed sphere check doubles the radius (at most
    ``max_inflations`` times).
    """
    source = "user"
    if mu_pp is None or mu_palpha is None:
        source = f"estimated(m={spec.m})"
        mu_pp = mu_pp or estimate_mu(spec, spec.p, seed=seed).value
        mu_palpha = mu_palpha or estimate_mu(spec, spec.alpha, seed=seed).value
    rho0 = rho_bound(spec, mu_pp, mu_palpha)
    rho = rho0
    for k in range(max_inflations + 1):
        rep = coercivity_check(spec, rho, samples, seed)
        if rep.passed:
            break
        if k < max_inflations:
            log.warning("outward check failed at rho=%.6g (min %.3e); doubling", rho, rep.min_pairing)
            rho *= 2
    return RadiusResult(rho, rho0, mu_pp, mu_palpha, source, k, rep.min_pairing, rep.passed, samples)


# -- solving ------------------------------------------------------------------


@dataclass
class SolveResult:
    m: int
    zeta_star: np.ndarray
    energy: float
    energy_p: float
    phi_value: float
    residual_sup: float
    rho_used: float
    identity_gap: float
    l2_norm_of_u: float
    iterations: int
    status: str  # "converged" | "trivial-admissible" | "failed"
    flags: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == "converged" and not self.flags

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["zeta_star"] = self.zeta_star.tolist()
        d["certified"] = self.certified
        return d


def _armijo_descent(spec, z, max_iter, gtol):
    """Steepest descent on ``Phi_m`` with Barzilai-Borwein trial steps and Armijo backtracking."""
    f = phi_m(z, spec)
    g = assemble_F(z, spec)
    t = 1.0 / max(np.linalg.norm(g), 1e-12)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= gtol:
            break
        gg = g @ g
        while True:
            zn = z - t * g
            fn = phi_m(zn, spec)
            if fn <= f - 1e-4 * t * gg or t < 1e-14:
                break
            t *= 0.5
        gn = assemble_F(zn, spec)
        s, y = zn - z, gn - g
        sy = s @ y
        t = (s @ s) / sy if sy > 0 else 2 * t
        z, f, g = zn, fn, gn
    return z, it


def solve_critical_point(
    spec: ProblemSpec, seed: int = 0, rho: float | None = None,
    descent_iters: int = 2000, descent_gtol: float = 1e-6, boundary_samples: int = 0,
) -> SolveResult:
    """Nontrivial zero of ``assemble_F`` inside the affine ball of radius ``rho``.

    Minimizes ``Phi_m`` (coercive because ``alpha < p``) and polishes the
    minimizer with the gauge-ball Newton solver, then certifies the result.
    """
    m = spec.m
    if spec.f_is_zero:
        z = np.zeros(m)
        res = float(np.max(np.abs(assemble_F(z, spec))))
        return SolveResult(m, z, 0.0, 0.0, 0.0, res, rho or math.nan, 0.0, 0.0, 0, "trivial-admissible")

    if rho is None:
        rho = existence_radius(spec, seed=seed).rho

    rng = np.random.default_rng(seed)
    z0 = 1e-3 * rng.standard_normal(m)
    z, it = _armijo_descent(spec, z0, descent_iters, descent_gtol)

    ball = GaugeBallSpec(AffineGauge(spec.ctx), np.zeros(m), rho)
    zr = find_zero(
        galerkin_field(spec), ball, tol=spec.tol, seed=seed, n_starts=4, x0=ball.project(z),
        check_boundary=boundary_samples > 0, boundary_samples=max(boundary_samples, 1),
    )
    return certify(spec, zr.z, rho, it + zr.iterations, solver_ok=zr.success)


def certify(spec: ProblemSpec, zeta, rho: float, iterations: int = 0, solver_ok: bool = True) -> SolveResult:
    """Recompute every certificate for ``zeta`` from scratch."""
    ctx = spec.ctx
    zeta = np.asarray(zeta, float)
    fld = expand(zeta, ctx.basis)
    E = affine_energy(fld, ctx.rule, ctx.params).energy
    Ep = E**spec.p
    w = ctx.basis.weights
    ua = float(w @ abs_pow(fld.values, spec.alpha))
    fu = float(w @ (spec.f_values * fld.values))
    gap = abs(Ep - ua - fu)
    residual = float(np.max(np.abs(assemble_F(zeta, spec))))
    l2 = lq_norm(fld, 2)
    phi = Ep / spec.p - ua / spec.alpha - fu

    flags = []
    if residual > spec.tol:
        flags.append(f"residual {residual:.3e} > tol {spec.tol:.1e}")
    if E > rho * (1 + 1e-9):
        flags.append(f"energy {E:.6g} outside rho {rho:.6g}")
    if gap > spec.identity_rtol * (1 + Ep):
        flags.append(f"identity gap {gap:.3e}")
    if not l2 > 0:
        flags.append("trivial solution")
    status = "converged" if solver_ok and not flags else "failed"
    return SolveResult(spec.m, zeta, E, Ep, phi, residual, rho, gap, l2, iterations, status, flags)


@dataclass
class SweepResult:
    radius: RadiusResult
    results: list

    @property
    def max_energy_p(self) -> float:
        return max(r.energy_p for r in self.results)


def m_sweep(spec: ProblemSpec, m_list, seed: int = 0, radius: RadiusResult | None = None) -> SweepResult:
    """Solve for every ``m`` with one common radius, computed at the largest ``m``."""
    m_list = list(m_list)
    if radius is None:
        radius = existence_radius(spec.with_m(max(m_list)), seed=seed)
    results = [solve_critical_point(spec.with_m(m), seed=seed, rho=radius.rho) for m in m_list]
    return SweepResult(radius, results)


def convergence_study(spec: ProblemSpec, m_list, s: float, seed: int = 0, sweep: SweepResult | None = None):
    """``||u_{m_{i+1}} - u_{m_i}||_{L^s}`` along a nested sweep.

    A diagnostic only; nothing is asserted about convergence.
    """
    if s < 1 or (spec.p < spec.n and s >= spec.p_star):
        raise ValueError(f"s={s} not admissible (need 1 <= s < {spec.p_star})")
    m_list = list(m_list)
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be strictly increasing")
    sweep = sweep or m_sweep(spec, m_list, seed)
    rows = []
    for a, b in zip(sweep.results, sweep.results[1:]):
        big = spec.with_m(b.m)
        za = np.concatenate([a.zeta_star, np.zeros(b.m - a.m)])
        diff = expand(b.zeta_star - za, big.ctx.basis)
        rows.append({"m_from": a.m, "m_to": b.m, "ls_diff": lq_norm(diff, s)})
    return rows


# -- empirical inequality constants -------------------------------------------


@dataclass
class ConstantsEstimate:
    m: int
    p: float
    mu: dict
    c_m: float
    C_grad: float  # min E / ||grad u||_p
    D1: float  # min over xi of ||grad_xi u||_p / ||u||_p
    D2: float  # min over xi of ||grad_xi u||_p / ||grad u||_p
    C_dir: float  # min over xi of E / ||grad_xi u||_p
    D3: float  # max over xi of E / ||grad_xi u||_p
    samples: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def estimate_constants(spec: ProblemSpec, qs=(), samples: int = 1000, seed: int = 0) -> ConstantsEstimate:
    """Ratio extrema over random ``u`` in ``W_m`` for the gradient-norm equivalences."""
    ctx = spec.ctx
    rng = np.random.default_rng(seed)
    p = spec.p
    c_m, C_grad, D1, D2, C_dir, D3 = 0.0, np.inf, np.inf, np.inf, np.inf, 0.0
    for _ in range(samples):
        z = rng.standard_normal(spec.m)
        fld = expand(z, ctx.basis)
        br = affine_energy(fld, ctx.rule, ctx.params)
        dirs = br.dir_norms
        lp = lq_norm(fld, p)
        c_m = max(c_m, gauge_norm(z, ctx) / np.linalg.norm(z))
        C_grad = min(C_grad, br.energy / br.grad_norm)
        D1 = min(D1, dirs.min() / lp)
        D2 = min(D2, dirs.min() / br.grad_norm)
        C_dir = min(C_dir, br.energy / dirs.max())
        D3 = max(D3, br.energy / dirs.min())
    mu = {float(q): estimate_mu(spec, q, seed=seed).value for q in qs}
    return ConstantsEstimate(spec.m, p, mu, c_m, C_grad, D1, D2, C_dir, D3, samples)
