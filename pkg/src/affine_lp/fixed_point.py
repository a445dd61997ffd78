"""Zero finding for vector fields that point outward on a gauge sphere.

If ``<F(z), z - center> >= 0`` whenever ``gauge(z - center) == rho``, then
``F`` has a zero in the closed gauge ball. This holds for the affine floor
gauge as well as for any norm, and stays true when ``F`` is singular at a
single point ``excluded`` outside the ball. The solvers here search for that
zero with damped Newton steps (finite-difference Jacobian, multistart), fall
back to a least-squares descent on ``|F|^2``, and report failure with the best
candidate when both stall.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import qmc

from .geometry import GaugeContext, floor_gauge, gauge_norm

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-10
MEMBERSHIP_RTOL = 1e-9
PUNCTURE_GUARD = 1e-12


class NormGauge:
    """A norm on R^m: ``euclidean``, ``max`` or ``l1``."""

    _ORD = {"euclidean": 2, "max": np.inf, "l1": 1}

    def __init__(self, kind: str = "euclidean"):
        if kind not in self._ORD:
            raise ValueError(f"unknown norm {kind!r}; choose from {sorted(self._ORD)}")
        self.kind = kind
        self.name = kind

    def __call__(self, z) -> float:
        return float(np.linalg.norm(np.asarray(z, float), self._ORD[self.kind]))


class AffineGauge:
    """The affine floor gauge of a Galerkin context."""

    name = "affine_floor"

    def __init__(self, ctx: GaugeContext):
        self.ctx = ctx

    def __call__(self, z) -> float:
        return floor_gauge(z, self.ctx)


class W1pGauge:
    """The norm ``||.||_{1,p,m}`` of a Galerkin context."""

    name = "w1p"

    def __init__(self, ctx: GaugeContext):
        self.ctx = ctx

    def __call__(self, z) -> float:
        return gauge_norm(z, self.ctx)


@dataclass(eq=False)
class GaugeBallSpec:
    gauge: Callable[[np.ndarray], float]
    center: np.ndarray
    rho: float
    excluded: np.ndarray | None = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.excluded is not None:
            self.excluded = np.asarray(self.excluded, dtype=float)
            gap = self.gauge(self.center - self.excluded)
            if not gap > self.rho:
                raise ValueError(
                    f"excluded point lies inside the ball: gauge(center - excluded)={gap:.6g} <= rho={self.rho:.6g}"
                )

    @property
    def m(self) -> int:
        return self.center.shape[0]

    def radius_of(self, z) -> float:
        return self.gauge(np.asarray(z, float) - self.center)

    def contains(self, z, rtol: float = MEMBERSHIP_RTOL) -> bool:
        return self.radius_of(z) <= self.rho * (1 + rtol)

    def project(self, z) -> np.ndarray:
        """Pull ``z`` back along the ray from the center onto the ball (gauge homogeneity)."""
        d = np.asarray(z, float) - self.center
        g = self.gauge(d)
        if g <= self.rho:
            return np.asarray(z, float)
        return self.center + d * (self.rho / g)

    def sphere_point(self, direction, scale: float = 1.0) -> np.ndarray:
        """Point on the ray through ``direction`` at gauge radius ``scale * rho``."""
        d = np.asarray(direction, float)
        return self.center + d * (scale * self.rho / self.gauge(d))


@dataclass(eq=False)
class VectorField:
    eval: Callable[[np.ndarray], np.ndarray]
    label: str = "field"
    expected_zero: np.ndarray | None = None

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(z, float)), dtype=float)


@dataclass
class BoundaryReport:
    min_pairing: float
    passed: bool
    samples: int
    worst_point: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"min_pairing": self.min_pairing, "passed": self.passed, "samples": self.samples}


class BoundaryConditionError(ValueError):
    pass


@dataclass
class ZeroResult:
    z: np.ndarray
    residual_sup: float
    residual_l2: float
    iterations: int
    evaluations: int
    strategy_used: str  # "newton" | "least_squares" | "failed"
    success: bool
    gauge_radius: float
    message: str = ""
    boundary_check: BoundaryReport | None = None
    start_index: int | None = None

    def to_dict(self) -> dict:
        return {
            "z": self.z.tolist(),
            "residual_sup": self.residual_sup,
            "residual_l2": self.residual_l2,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "strategy_used": self.strategy_used,
            "success": self.success,
            "gauge_radius": self.gauge_radius,
            "message": self.message,
            "start_index": self.start_index,
            "boundary_check": None if self.boundary_check is None else self.boundary_check.to_dict(),
        }


def boundary_condition_check(F, ball: GaugeBallSpec, samples: int = 64, seed: int = 0) -> BoundaryReport:
    """Sample the gauge sphere and report ``min <F(z), z - center>``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst, worst_z = np.inf, None
    for _ in range(samples):
        d = rng.standard_normal(ball.m)
        if not np.any(d):
            raise RuntimeError("sphere sampling produced a zero direction")
        z = ball.sphere_point(d)
        val = float(F(z) @ (z - ball.center))
        if val < worst:
            worst, worst_z = val, z
    return BoundaryReport(worst, worst >= -BOUNDARY_TOL, samples, worst_z)


class _Counted:
    """Field wrapper counting evaluations and refusing the puncture."""

    def __init__(self, F, excluded, budget):
        self.F = F
        self.excluded = excluded
        self.budget = budget
        self.count = 0

    def __call__(self, z):
        if self.count >= self.budget:
            raise _BudgetExhausted
        if self.excluded is not None and np.linalg.norm(z - self.excluded) < PUNCTURE_GUARD:
            raise _PunctureHit
        self.count += 1
        out = self.F(z)
        if not np.all(np.isfinite(out)):
            raise _PunctureHit
        return out


class _BudgetExhausted(Exception):
    pass


class _PunctureHit(Exception):
    pass


def fd_jacobian(F, z, fz=None) -> np.ndarray:
    """Central-difference Jacobian with step ``1e-6 * (1 + |z|_inf)``."""
    m = z.shape[0]
    h = 1e-6 * (1.0 + np.max(np.abs(z)))
    J = np.empty((len(fz) if fz is not None else m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        J[:, i] = (F(z + e) - F(z - e)) / (2 * h)
    return J


def _safe_norm(F, z):
    try:
        fz = F(z)
    except _PunctureHit:
        return None, np.inf
    return fz, float(np.linalg.norm(fz))


def _newton(F, z, ball, tol, max_iter):
    fz = F(z)
    nf = float(np.linalg.norm(fz))
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(fz)) <= tol:
            return z, fz, it - 1
        try:
            J = fd_jacobian(F, z, fz)
        except _PunctureHit:
            break
        step = np.linalg.lstsq(J, -fz, rcond=None)[0]
        t = 1.0
        accepted = False
        while t > 1e-10:
            zt = ball.project(z + t * step)
            ft, nt = _safe_norm(F, zt)
            if nt < (1 - 1e-4 * t) * nf:
                z, fz, nf = zt, ft, nt
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return z, fz, it


def _starts(ball: GaugeBallSpec, n: int, seed: int, x0=None):
    if x0 is not None:
        yield np.asarray(x0, dtype=float).copy()
    yield ball.center.copy()
    if n <= 1:
        return
    halton = qmc.Halton(d=ball.m, seed=seed)
    pts = 2.0 * halton.random(n - 1) - 1.0
    scales = (0.5, 0.25, 0.75, 0.9)
    for i, d in enumerate(pts):
        if not np.any(d):
            continue
        yield ball.sphere_point(d, scales[i % len(scales)])


def find_zero(
    F,
    ball: GaugeBallSpec,
    tol: float = 1e-8,
    budget: int = 20_000,
    seed: int = 0,
    n_starts: int = 16,
    max_newton: int = 60,
    check_boundary: bool = True,
    boundary_samples: int = 32,
    x0=None,
) -> ZeroResult:
    """Find ``z`` in ``ball`` with ``|F(z)|_inf <= tol``.

    With ``check_boundary`` the outward condition is sampled first and a
    :class:`BoundaryConditionError` is raised when it fails; pass
    ``check_boundary=False`` to waive it. ``x0``, when given, is tried before
    the center and the quasi-random starts. A result with ``success=False``
    means the solver stalled, not that no zero exists.
    """
    report = None
    if check_boundary:
        report = boundary_condition_check(F, ball, boundary_samples, seed)
        if not report.passed:
            raise BoundaryConditionError(
                f"boundary condition fails: min <F(z), z - center> = {report.min_pairing:.3e}"
            )
    Fc = _Counted(F, ball.excluded, budget)
    candidates = []  # (residual_l2, start index, z)
    total_iter = 0

    def finish(z, fz, strategy, idx):
        sup = float(np.max(np.abs(fz)))
        radius = ball.radius_of(z)
        ok = sup <= tol and radius <= ball.rho * (1 + MEMBERSHIP_RTOL)
        return ZeroResult(
            z, sup, float(np.linalg.norm(fz)), total_iter, Fc.count,
            strategy if ok else "failed", ok, radius,
            "converged" if ok else f"stalled with residual {sup:.3e}", report, idx,
        )

    try:
        for idx, z0 in enumerate(_starts(ball, n_starts, seed, x0)):
            try:
                z, fz, it = _newton(Fc, ball.project(z0), ball, tol, max_newton)
            except _PunctureHit:
                continue
            total_iter += it
            if np.max(np.abs(fz)) <= tol and ball.contains(z):
                return finish(z, fz, "newton", idx)
            candidates.append((float(np.linalg.norm(fz)), idx, z))

        candidates.sort(key=lambda c: (c[0], c[1]))
        for _, idx, z0 in candidates[:3]:
            res = least_squares(
                Fc, z0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                max_nfev=max(1, min(2000, budget - Fc.count)),
            )
            z = ball.project(res.x)
            fz = Fc(z)
            total_iter += int(res.nfev)
            if np.max(np.abs(fz)) <= tol and ball.contains(z):
                return finish(z, fz, "least_squares", idx)
            candidates.append((float(np.linalg.norm(fz)), idx, z))
    except (_BudgetExhausted, _PunctureHit):
        log.info("find_zero stopped after %d evaluations", Fc.count)

    if not candidates:
        z = ball.center.copy()
        fz = F(z) if ball.excluded is None else np.full(ball.m, np.inf)
        return finish(z, fz, "failed", None)
    candidates.sort(key=lambda c: (c[0], c[1]))
    _, idx, z = candidates[0]
    fz = F(z)
    return finish(z, fz, "failed", idx)


def find_zero_punctured(F, ball: GaugeBallSpec, **kwargs) -> ZeroResult:
    """:func:`find_zero` for a field singular at ``ball.excluded`` (outside the ball)."""
    if ball.excluded is None:
        raise ValueError("punctured variant needs ball.excluded")
    return find_zero(F, ball, **kwargs)


# -- field registry -----------------------------------------------------------


def identity_field(m: int) -> VectorField:
    return VectorField(lambda z: z.copy(), "identity", np.zeros(m))


def linear_field(m: int, seed: int = 0, scale: float = 1.0) -> VectorField:
    """``F(z) = A z - b`` with ``A = M^T M + I``; the zero is ``A^{-1} b``."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((m, m))
    A = M.T @ M + np.eye(m)
    b = rng.standard_normal(m)
    zstar = np.linalg.solve(A, b)
    b *= scale / np.linalg.norm(zstar)
    zstar = np.linalg.solve(A, b)
    return VectorField(lambda z: A @ z - b, "linear", zstar)


def random_coercive_field(m: int, seed: int = 0, offset: float = 0.1, gauge=None) -> VectorField:
    """Gradient of a coercive quartic plus a skew term, with its zero at ``b``.

    ``F(z) = A (z - b) + c (z - b)**3 + S (z - b)``, ``A`` SPD, ``S`` skew.
    ``offset`` is the size of ``b`` measured by ``gauge`` (Euclidean by default).
    """
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((m, m))
    A = M.T @ M / m + np.eye(m)
    K = rng.standard_normal((m, m))
    S = 0.5 * (K - K.T)
    c = rng.uniform(0.1, 1.0)
    b = rng.standard_normal(m)
    b *= offset / (gauge or np.linalg.norm)(b)

    def F(z):
        d = z - b
        return A @ d + c * d**3 + S @ d

    return VectorField(F, "random_coercive", b)


def punctured_field(b, y0, strength: float = 1e-3) -> VectorField:
    """``F(z) = z - b + strength (z - y0) / |z - y0|^2``, singular at ``y0``."""
    b = np.asarray(b, float)
    y0 = np.asarray(y0, float)

    def F(z):
        d = z - y0
        return z - b + strength * d / (d @ d)

    return VectorField(F, "punctured")


@dataclass
class HarnessResult:
    cases: int
    successes: int
    rejected_fields: int
    failures: list = field(default_factory=list)
    max_zero_error: float = 0.0


def run_harness(cases: int = 100, seed: int = 0, m_max: int = 10, tol: float = 1e-8, ctx_factory=None) -> HarnessResult:
    """Solve randomly generated outward-pointing fields and count successes.

    Gauges cycle through euclidean, max, l1 and (when ``ctx_factory`` is
    given) the affine floor gauge of ``ctx_factory(m)``.
    """
    rng = np.random.default_rng(seed)
    successes = rejected = 0
    failures = []
    max_err = 0.0
    done = 0
    attempt = 0
    while done < cases:
        attempt += 1
        m = int(rng.integers(2, m_max + 1))
        kind = ("euclidean", "max", "l1", "affine")[done % 4]
        if kind == "affine" and ctx_factory is not None:
            gauge = AffineGauge(ctx_factory(m))
        else:
            gauge = NormGauge("euclidean" if kind == "affine" else kind)
        rho = float(rng.uniform(0.5, 2.0))
        F = random_coercive_field(m, seed=int(rng.integers(2**31)), offset=0.3 * rho * float(rng.uniform(0, 1)), gauge=gauge)
        ball = GaugeBallSpec(gauge, np.zeros(m), rho)
        report = boundary_condition_check(F, ball, samples=32, seed=attempt)
        if not report.passed:
            rejected += 1
            continue
        res = find_zero(F, ball, tol=tol, seed=attempt, check_boundary=False)
        done += 1
        if res.success:
            successes += 1
            max_err = max(max_err, float(np.max(np.abs(res.z - F.expected_zero))))
        else:
            failures.append({"m": m, "gauge": gauge.name, "residual": res.residual_sup})
            log.warning("harness case %d failed: %s", done, res.message)
    return HarnessResult(cases, successes, rejected, failures, max_err)
