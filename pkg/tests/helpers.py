"""Analytic test fields and the acceptance-report buffer shared by test modules."""

import numpy as np

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def gaussian_bump(A=np.eye(2), sigma=0.04, center=(0.5, 0.5)):
    """``u(x) = exp(-|A(x - c)|^2 / (2 sigma^2))`` as an ``fn(x, y) -> (u, ux, uy)``.

    With ``sigma * ||A^{-1}|| <= 0.06`` the bump is below 1e-15 on the boundary
    of the unit square, i.e. compactly supported at double precision.
    """
    A = np.asarray(A, float)
    c = np.asarray(center, float)

    def fn(x, y):
        Y = A @ np.stack([x - c[0], y - c[1]])
        u = np.exp(-(Y**2).sum(0) / (2 * sigma**2))
        g = A.T @ (-u * Y / sigma**2)
        return u, g[0], g[1]

    return fn


def random_unimodular(rng, max_stretch=1.5):
    """``R(a) diag(s, 1/s) R(b)`` with ``1 <= s <= max_stretch``."""

    def rot(t):
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])

    s = rng.uniform(1.0, max_stretch)
    a, b = rng.uniform(0, 2 * np.pi, 2)
    return rot(a) @ np.diag([s, 1 / s]) @ rot(b)
