"""Shared independent oracles for the test suite.

Everything here differentiates, integrates or projects without touching the
jet machinery, so the tests compare two genuinely different routes.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Array = np.ndarray
ScalarFn = Callable[[Array], float]


def fd_gradient(f: ScalarFn, x: Array, h: float = 1e-5) -> Array:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_hessian(f: ScalarFn, x: Array, h: float = 1e-4) -> Array:
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h * h)
    return 0.5 * (H + H.T)


def fd_jacobian(f: Callable[[Array], Array], x: Array, h: float = 1e-6) -> Array:
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h))
    return np.stack(cols, axis=1)


def fd_christoffel(metric_fn: Callable[[Array], Array], x: Array, h: float = 1e-6) -> Array:
    """Levi-Civita symbols from finite differences of a metric-matrix function."""
    x = np.asarray(x, dtype=float)
    n = x.size
    g = metric_fn(x)
    D = np.zeros((n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        D[a] = (metric_fn(x + e) - metric_fn(x - e)) / (2.0 * h)
    gamma = np.zeros((n, n, n))
    g_inv = np.linalg.inv(g)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                total = 0.0
                for l in range(n):
                    total += g_inv[i, l] * (D[j, l, k] + D[k, l, j] - D[l, j, k])
                gamma[i, j, k] = 0.5 * total
    return gamma


def rk4_ode(
    deriv: Callable[[Array], Array], z0: Array, t_final: float, n_steps: int
) -> Array:
    """Fixed-step classical RK4 on an autonomous first-order system."""
    z = np.asarray(z0, dtype=float).copy()
    h = t_final / n_steps
    for _ in range(n_steps):
        k1 = deriv(z)
        k2 = deriv(z + 0.5 * h * k1)
        k3 = deriv(z + 0.5 * h * k2)
        k4 = deriv(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def sphere_point_from_embedding(X: Array) -> tuple[str, Array]:
    """Algebraic inverse of the stereographic embeddings (test-side oracle)."""
    X = np.asarray(X, dtype=float)
    if X[2] <= 0.0:
        return "south", np.array([X[0] / (1.0 - X[2]), X[1] / (1.0 - X[2])])
    return "north", np.array([X[0] / (1.0 + X[2]), X[1] / (1.0 + X[2])])


def great_circle(p0: Array, w0: Array, t: float) -> Array:
    """Unit-sphere geodesic through embedded point ``p0`` with velocity ``w0``."""
    p0 = np.asarray(p0, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    speed = np.linalg.norm(w0)
    if speed == 0.0:
        return p0.copy()
    return np.cos(speed * t) * p0 + np.sin(speed * t) * (w0 / speed)
