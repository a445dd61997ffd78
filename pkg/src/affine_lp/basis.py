"""Domain quadrature and the nested tensor-sine Galerkin basis on (0, 1)^2.

A coefficient vector ``zeta`` of length ``m`` is identified with the function
``u = sum_i zeta[i] * w_i`` where ``w_(j,k)(x, y) = sin(j pi x) sin(k pi y)``.
Coefficient vectors are plain 1-D numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

DEFAULT_QUAD_ORDER = 48


@dataclass(frozen=True)
class DomainSpec:
    """Tensor Gauss-Legendre rule on the unit square."""

    quad_order: int = DEFAULT_QUAD_ORDER
    shape: str = "unit_square"

    def __post_init__(self):
        if self.shape != "unit_square":
            raise ValueError(f"unsupported domain shape {self.shape!r}")
        if int(self.quad_order) != self.quad_order or self.quad_order < 2:
            raise ValueError(f"quad_order must be an integer >= 2, got {self.quad_order}")

    @property
    def nodes_1d(self) -> tuple[np.ndarray, np.ndarray]:
        return _gauss_legendre_01(self.quad_order)

    @property
    def points(self) -> np.ndarray:
        """(Q, 2) array of nodes, x-index major."""
        return _tensor_rule(self.quad_order)[0]

    @property
    def weights(self) -> np.ndarray:
        return _tensor_rule(self.quad_order)[1]

    @property
    def num_nodes(self) -> int:
        return self.quad_order**2

    @property
    def measure(self) -> float:
        return 1.0


@lru_cache(maxsize=None)
def _gauss_legendre_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=None)
def _tensor_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre_01(order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    wts = np.outer(w, w).ravel()
    pts.flags.writeable = False
    wts.flags.writeable = False
    return pts, wts


def index_pairs(m: int) -> list[tuple[int, int]]:
    """First ``m`` frequency pairs, ordered by j + k and then by j."""
    pairs = []
    s = 2
    while len(pairs) < m:
        for j in range(1, s):
            pairs.append((j, s - j))
            if len(pairs) == m:
                break
        s += 1
    return pairs


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Tables of ``w_i`` and ``grad w_i`` at every domain node.

    ``values``, ``grad_x`` and ``grad_y`` have shape ``(m, Q)``.
    """

    m: int
    domain: DomainSpec
    pairs: tuple[tuple[int, int], ...]
    values: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.domain.weights

    @property
    def max_frequency(self) -> int:
        return max(max(j, k) for j, k in self.pairs)


def build_basis(m: int, domain: DomainSpec | None = None) -> BasisSpec:
    domain = domain or DomainSpec()
    if int(m) != m or m < 1:
        raise ValueError(f"basis dimension must be a positive integer, got {m}")
    return _build_basis(int(m), domain.quad_order)


@lru_cache(maxsize=64)
def _build_basis(m: int, quad_order: int) -> BasisSpec:
    domain = DomainSpec(quad_order)
    pairs = tuple(index_pairs(m))
    fmax = max(max(j, k) for j, k in pairs)
    if 2 * fmax > quad_order:
        raise ValueError(
            f"quad_order={quad_order} too coarse for frequency {fmax} "
            f"(need quad_order >= {2 * fmax}); raise quad_order or lower m"
        )
    x, _ = domain.nodes_1d
    values = np.empty((m, quad_order**2))
    grad_x = np.empty_like(values)
    grad_y = np.empty_like(values)
    # Each row depends only on its own (j, k): tables are nested bit-for-bit.
    for i, (j, k) in enumerate(pairs):
        sx, cx = np.sin(j * np.pi * x), np.cos(j * np.pi * x)
        sy, cy = np.sin(k * np.pi * x), np.cos(k * np.pi * x)
        values[i] = np.outer(sx, sy).ravel()
        grad_x[i] = (j * np.pi) * np.outer(cx, sy).ravel()
        grad_y[i] = (k * np.pi) * np.outer(sx, cy).ravel()
    for a in (values, grad_x, grad_y):
        a.flags.writeable = False
    return BasisSpec(m, domain, pairs, values, grad_x, grad_y)


@dataclass(frozen=True, eq=False)
class GradField:
    """Samples of ``u`` and ``grad u`` at the domain nodes."""

    values: np.ndarray  # (Q,)
    grads: np.ndarray  # (Q, 2)
    weights: np.ndarray  # (Q,)

    def __post_init__(self):
        q = self.weights.shape[0]
        if self.values.shape != (q,) or self.grads.shape != (q, 2):
            raise ValueError("GradField arrays do not match the node count")
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.grads))):
            raise ValueError("GradField contains non-finite entries")


def _as_coef(zeta, basis: BasisSpec) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (basis.m,):
        raise ValueError(f"coefficient vector has shape {zeta.shape}, basis has m={basis.m}")
    return zeta


def expand(zeta, basis: BasisSpec) -> GradField:
    zeta = _as_coef(zeta, basis)
    grads = np.column_stack([zeta @ basis.grad_x, zeta @ basis.grad_y])
    return GradField(zeta @ basis.values, grads, basis.weights)


def field_from_function(
    fn: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]],
    domain: DomainSpec | None = None,
) -> GradField:
    """Sample a function given as ``fn(x, y) -> (u, u_x, u_y)``."""
    domain = domain or DomainSpec()
    pts = domain.points
    u, ux, uy = fn(pts[:, 0], pts[:, 1])
    return GradField(np.asarray(u, float), np.column_stack([ux, uy]), domain.weights)


def lq_norm(field: GradField, q: float) -> float:
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    a = np.abs(field.values)
    return float(field.weights @ abs_pow(a, q)) ** (1.0 / q)


def grad_lp_norm(field: GradField, p: float) -> float:
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    g = field.grads
    r = np.sqrt(g[:, 0] ** 2 + g[:, 1] ** 2)
    return float(field.weights @ abs_pow(r, p)) ** (1.0 / p)


def w1pm_norm(zeta, basis: BasisSpec, p: float) -> float:
    """Coefficient-space norm ``||grad(sum zeta_j w_j)||_{L^p}``."""
    return grad_lp_norm(expand(zeta, basis), p)


def abs_pow(a: np.ndarray, p: float) -> np.ndarray:
    """``|a|**p`` with cheap paths for integer and half-integer ``p``."""
    if p == 1:
        return np.abs(a)
    if p == 2:
        return a * a
    a = np.abs(a)
    if p == int(p) and 2 < p <= 6:
        out = a * a
        for _ in range(int(p) - 2):
            out *= a
        return out
    if 2 * p == int(2 * p) and 1 < p <= 6:
        return abs_pow(a, p - 0.5) * np.sqrt(a)
    return a**p
