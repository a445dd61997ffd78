"""Quadrature on the unit circle S^1."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_SPHERE_POINTS = 256


@dataclass(frozen=True, eq=False)
class SphereRule:
    xis: np.ndarray  # (M, 2) unit vectors
    weights: np.ndarray  # (M,)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def build_circle_rule(M: int = DEFAULT_SPHERE_POINTS, shift: float = 0.0) -> SphereRule:
    """Equispaced trapezoid rule; exact for trigonometric polynomials of degree < M.

    ``shift`` rotates every node by a constant angle.
    """
    if int(M) != M or M < 4:
        raise ValueError(f"circle rule needs M >= 4 points, got {M}")
    M = int(M)
    theta = 2.0 * math.pi * np.arange(M) / M + shift
    xis = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(M, 2.0 * math.pi / M)
    xis.flags.writeable = False
    weights.flags.writeable = False
    return SphereRule(xis, weights)


def integrate_sphere(rule: SphereRule, f) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != rule.weights.shape:
        raise ValueError(f"expected {rule.size} samples, got shape {f.shape}")
    return float(rule.weights @ f)
