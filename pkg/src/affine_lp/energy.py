"""Affine L^p energy of a sampled function and its coefficient-space gradient.

For ``u`` with gradient samples on the domain and a rule on S^{n-1}::

    E(u) = gamma_{n,p} * ( int_S ||grad_xi u||_p^{-n} dsigma(xi) )^{-1/n}

``gamma_{n,p}`` is normalized so that ``E(u) <= ||grad u||_p`` with equality
whenever the directional norms do not depend on ``xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .basis import BasisSpec, GradField, abs_pow, expand, grad_lp_norm
from .sphere import SphereRule


class DegenerateDirectionError(ArithmeticError):
    """A directional norm vanished for a nonzero field."""


def unit_ball_volume(kappa: float) -> float:
    """Volume of the unit ball in R^kappa, continued to real kappa > 0."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return math.pi ** (kappa / 2) / gamma_fn(kappa / 2 + 1)


def gamma_np(n: int, p: float) -> float:
    if n < 2 or int(n) != n:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    w = unit_ball_volume
    return (n * w(n)) ** (1.0 / n) * (n * w(n) * w(p - 1) / (2 * w(n + p - 2))) ** (1.0 / p)


@dataclass(frozen=True)
class EnergyParams:
    p: float
    n: int = 2
    eps_zero: float = 1e-12

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError(f"p must be > 1, got {self.p}")
        if self.n != 2:
            raise ValueError("only n = 2 is implemented")
        if not 0 < self.eps_zero <= 1e-8:
            raise ValueError(f"eps_zero must lie in (0, 1e-8], got {self.eps_zero}")

    @property
    def gamma(self) -> float:
        return gamma_np(self.n, self.p)


@dataclass(frozen=True, eq=False)
class EnergyBreakdown:
    dir_norms: np.ndarray
    energy: float
    grad_norm: float


def signed_pow(x, p: float):
    """``|x|**p * sign(x)`` with ``sign(0) = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * abs_pow(x, p)
    return out if out.ndim else float(out)


def _directional(field: GradField, rule: SphereRule) -> np.ndarray:
    # (Q, M) table of grad u(x_q) . xi_k
    return np.outer(field.grads[:, 0], rule.xis[:, 0]) + np.outer(field.grads[:, 1], rule.xis[:, 1])


def directional_lp_norms(field: GradField, rule: SphereRule, p: float) -> np.ndarray:
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    if p == 2:
        # ||grad_xi u||_2^2 = xi^T G xi with G = int grad u grad u^T
        G = (field.grads * field.weights[:, None]).T @ field.grads
        q = np.einsum("ki,ij,kj->k", rule.xis, G, rule.xis)
        return np.sqrt(np.maximum(q, 0.0))
    D = _directional(field, rule)
    return (field.weights @ abs_pow(D, p)) ** (1.0 / p)


def _energy_from_norms(norms, grad_norm, rule, params) -> float:
    if grad_norm < params.eps_zero:
        return 0.0
    if np.min(norms) <= params.eps_zero * grad_norm:
        raise DegenerateDirectionError(
            f"directional norm {np.min(norms):.3e} vanishes for a field with "
            f"gradient norm {grad_norm:.3e}; sphere or domain quadrature too coarse"
        )
    n = params.n
    integral = rule.weights @ norms ** (-n)
    return params.gamma * integral ** (-1.0 / n)


def affine_energy(field: GradField, rule: SphereRule, params: EnergyParams) -> EnergyBreakdown:
    grad_norm = grad_lp_norm(field, params.p)
    if grad_norm < params.eps_zero:
        return EnergyBreakdown(np.zeros(rule.size), 0.0, grad_norm)
    norms = directional_lp_norms(field, rule, params.p)
    return EnergyBreakdown(norms, float(_energy_from_norms(norms, grad_norm, rule, params)), grad_norm)


def energy_and_grad(zeta, basis: BasisSpec, rule: SphereRule, params: EnergyParams):
    """Return ``(E(u), g)`` where ``g`` is the gradient of ``zeta -> E(u)^p / p``.

    One sweep over the sphere serves both: the directional table is reused
    for the norms and for the signed-power moments against ``grad w_j``.
    """
    field = expand(zeta, basis)
    p, n = params.p, params.n
    grad_norm = grad_lp_norm(field, p)
    if grad_norm < params.eps_zero:
        return 0.0, np.zeros(basis.m)
    D = _directional(field, rule)
    absD = np.abs(D)
    pow_pm1 = abs_pow(absD, p - 1)
    norms = (field.weights @ (pow_pm1 * absD)) ** (1.0 / p)
    E = _energy_from_norms(norms, grad_norm, rule, params)
    S = np.sign(D) * pow_pm1 * field.weights[:, None]
    # moments[j, k] = int_Omega {grad_xi u}^{p-1} (grad w_j . xi_k) dx
    moments = (basis.grad_x @ S) * rule.xis[:, 0] + (basis.grad_y @ S) * rule.xis[:, 1]
    scale = params.gamma ** (-n) * E ** (n + p)
    g = scale * (moments @ (rule.weights * norms ** (-(n + p))))
    return float(E), g


def energy_grad(zeta, basis: BasisSpec, rule: SphereRule, params: EnergyParams) -> np.ndarray:
    return energy_and_grad(zeta, basis, rule, params)[1]


def h_function(field: GradField, rule: SphereRule, params: EnergyParams, varsigma) -> float:
    """Evaluate ``H_u(varsigma)`` (degree-one homogeneous in ``varsigma``)."""
    br = affine_energy(field, rule, params)
    if br.energy == 0.0:
        raise ValueError("H_u is undefined for the zero field")
    p, n = params.p, params.n
    vs = np.asarray(varsigma, dtype=float)
    proj = abs_pow(rule.xis @ vs, p)
    hp = params.gamma ** (-n) * br.energy ** (n + p) * (rule.weights @ (br.dir_norms ** (-(n + p)) * proj))
    return float(hp) ** (1.0 / p)


def h_function_at_nodes(field: GradField, rule: SphereRule, params: EnergyParams) -> np.ndarray:
    """``H_u^p(grad u(x_q))`` at every domain node."""
    br = affine_energy(field, rule, params)
    if br.energy == 0.0:
        raise ValueError("H_u is undefined for the zero field")
    p, n = params.p, params.n
    D = _directional(field, rule)
    c = params.gamma ** (-n) * br.energy ** (n + p)
    return c * (abs_pow(D, p) @ (rule.weights * br.dir_norms ** (-(n + p))))
