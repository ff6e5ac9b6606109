"""Diffusion generators: rules sending a vector-field 1-jet to a diffusor.

A diffusion generator ``G`` maps a tangent input ``Y`` with components
``sigma`` to a diffusor whose second-order part is exactly
``sigma sigma^T``; the kinds differ only in the first-order (drift) part:

* Stratonovich: drift ``(d sigma) sigma`` from the field's own Jacobian,
  so integral curves of the field solve the associated equation;
* geodesic: drift ``V_ext - Gamma(sigma, sigma)`` from a connection;
* Lagrangian: drift = the Euler-Lagrange acceleration
  ``H^{-1} (dL/dx - (d2L/dx dv)^T sigma)`` with ``H`` the velocity Hessian
  of a regular Lagrangian;
* quadratic form / kinetic + potential: closed-form specializations of the
  Lagrangian rule for ``L = alpha(v, v)/2`` and ``L = g(v, v)/2 - Phi``.

All generator inputs take a :class:`~intrinsic_sde.fields.VectorFieldJet`;
kinds that do not consume the Jacobian must give identical output for any
Jacobian value.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .fields import (
    CovariantTensorField,
    Lagrangian,
    ScalarField,
    VectorField,
    VectorFieldJet,
)
from .geometry import ChartedManifold, Diffusor, Point, TangentVector
from .jets import SmoothMap

__all__ = [
    "RegularityError",
    "SingularTensorError",
    "solve_pivoted",
    "stratonovich_generate",
    "geodesic_generate",
    "lagrangian_generate",
    "quadratic_form_generate",
    "kinetic_potential_generate",
    "christoffel_from_metric",
    "DiffusionGenerator",
    "StratonovichGenerator",
    "GeodesicGenerator",
    "LagrangianGenerator",
    "QuadraticFormGenerator",
    "KineticPotentialGenerator",
    "standard_ito_generator",
]


class RegularityError(Exception):
    """The velocity Hessian of a Lagrangian failed the pivot test."""


class SingularTensorError(Exception):
    """A metric or quadratic-form matrix could not be inverted."""


def solve_pivoted(
    A: np.ndarray, rhs: np.ndarray, tol: Optional[float] = None
) -> np.ndarray:
    """Solve ``A x = rhs`` by Gaussian elimination with partial pivoting.

    Every pivot must exceed ``tol`` in magnitude (default
    ``1e-10 * max|A|``); otherwise the matrix is treated as singular and a
    :class:`RegularityError` reports the offending pivot.
    """
    A = np.array(A, dtype=float)
    b = np.array(rhs, dtype=float)
    n = b.shape[0]
    if tol is None:
        tol = 1e-10 * float(np.max(np.abs(A)))
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        pivot = A[p, k]
        if abs(pivot) <= tol:
            raise RegularityError(
                f"singular velocity Hessian: pivot magnitude {abs(pivot):.6e} "
                f"<= tolerance {tol:.6e} at column {k}"
            )
        if p != k:
            A[[k, p]] = A[[p, k]]
            b[[k, p]] = b[[p, k]]
        for r in range(k + 1, n):
            f = A[r, k] / pivot
            if f != 0.0:
                A[r, k:] -= f * A[k, k:]
                b[r] -= f * b[k]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - A[k, k + 1 :] @ x[k + 1 :]) / A[k, k]
    return x


def _tensor_and_derivatives(
    map_nn: SmoothMap, coords: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Matrix ``M[i, j]`` and derivative array ``D[a, i, j] = d_a M_{ij}``."""
    n = int(round(np.sqrt(map_nn.dimension_out)))
    jets = map_nn.jets(coords)
    M = np.array([j.value for j in jets]).reshape(n, n)
    G = np.stack([j.gradient for j in jets])
    D = G.T.reshape(n, n, n)
    return M, D


def _christoffel_from_derivatives(g: np.ndarray, D: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    g = 0.5 * (g + g.T)
    D = 0.5 * (D + D.transpose(0, 2, 1))
    # T[l, j, k] = d_j g_{lk} + d_k g_{lj} - d_l g_{jk}
    T = D.transpose(1, 0, 2) + D.transpose(1, 2, 0) - D
    try:
        gamma = 0.5 * np.linalg.solve(g, T.reshape(n, n * n)).reshape(n, n, n)
    except np.linalg.LinAlgError as e:
        raise SingularTensorError(f"metric is singular: {e}") from e
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def christoffel_from_metric(metric: SmoothMap, coords: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols ``Gamma[i, j, k]``, symmetric in ``(j, k)``.

    ``metric`` produces the ``n*n`` components ``g_{ij}`` row-major; the
    coordinate derivatives come from its jets.
    """
    coords = np.asarray(coords, dtype=float)
    g, D = _tensor_and_derivatives(metric, coords)
    if not np.allclose(g, g.T, rtol=1e-9, atol=1e-12):
        raise SingularTensorError("metric matrix is not symmetric")
    return _christoffel_from_derivatives(g, D)


# -- kind-specific generation ------------------------------------------------


def stratonovich_generate(Y: VectorFieldJet) -> Diffusor:
    """Drift ``(d sigma) sigma``; makes field flow lines solve the equation."""
    if Y.jacobian is None:
        raise ValueError("Stratonovich generation needs the field Jacobian")
    sigma = Y.value
    return Diffusor(Y.at, Y.jacobian @ sigma, np.outer(sigma, sigma))


def geodesic_generate(
    connection: Callable[[Point], np.ndarray],
    v: TangentVector,
    external: Optional[TangentVector] = None,
) -> Diffusor:
    """Drift ``V_ext - Gamma(v, v)``; pure geodesic acceleration when ``V_ext = 0``."""
    gamma = connection(v.at)
    comp = v.components
    a = -((gamma @ comp) @ comp)
    if external is not None:
        a = external.components + a
    return Diffusor(v.at, a, np.outer(comp, comp))


def lagrangian_generate(
    L: SmoothMap,
    x: Point,
    sigma: np.ndarray,
    tol: Optional[float] = None,
) -> Diffusor:
    """Euler-Lagrange acceleration at ``(x, sigma)`` as the drift.

    ``L`` is the chart-local expression on ``2n`` inputs (positions then
    velocities).  Raises :class:`RegularityError` when the velocity Hessian
    fails the pivot test.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = x.n
    jet = L.jets(np.concatenate([x.coords, sigma]))[0]
    grad_x = jet.gradient[:n]
    H_vv = jet.hessian[n:, n:]
    H_xv = jet.hessian[:n, n:]  # H_xv[k, j] = d2 L / dx^k dv^j
    w = grad_x - H_xv.T @ sigma
    a = solve_pivoted(H_vv, w, tol)
    return Diffusor(x, a, np.outer(sigma, sigma))


def quadratic_form_generate(alpha: SmoothMap, x: Point, sigma: np.ndarray) -> Diffusor:
    """Closed form for ``L = alpha(v, v)/2`` with a non-degenerate 2-tensor."""
    sigma = np.asarray(sigma, dtype=float)
    A, D = _tensor_and_derivatives(alpha, x.coords)
    lowered = 0.5 * ((D @ sigma) @ sigma) - sigma @ (D @ sigma)
    try:
        a = np.linalg.solve(A, lowered)
    except np.linalg.LinAlgError as e:
        raise SingularTensorError(f"quadratic form is singular: {e}") from e
    return Diffusor(x, a, np.outer(sigma, sigma))


def kinetic_potential_generate(
    metric: SmoothMap,
    potential: Optional[SmoothMap],
    x: Point,
    sigma: np.ndarray,
) -> Diffusor:
    """Drift ``-Gamma(sigma, sigma) - g^{-1} grad Phi`` for kinetic +/- potential."""
    sigma = np.asarray(sigma, dtype=float)
    g, D = _tensor_and_derivatives(metric, x.coords)
    gamma = _christoffel_from_derivatives(g, D)
    a = -((gamma @ sigma) @ sigma)
    if potential is not None:
        grad = potential.jets(x.coords)[0].gradient
        try:
            a = a - np.linalg.solve(0.5 * (g + g.T), grad)
        except np.linalg.LinAlgError as e:
            raise SingularTensorError(f"metric is singular: {e}") from e
    return Diffusor(x, a, np.outer(sigma, sigma))


# -- generator objects -------------------------------------------------------


class DiffusionGenerator:
    """Base interface: ``generate`` maps a field jet to a diffusor."""

    kind = "abstract"

    def generate(self, Y: VectorFieldJet) -> Diffusor:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class StratonovichGenerator(DiffusionGenerator):
    kind = "stratonovich"

    def generate(self, Y: VectorFieldJet) -> Diffusor:
        return stratonovich_generate(Y)


class GeodesicGenerator(DiffusionGenerator):
    """Generator of the standard equation on a manifold with connection.

    ``external`` is an optional force field; leave it ``None`` for the pure
    geodesic rule.  ``flat`` marks a connection that vanishes identically so
    integrators can take the vectorized path.
    """

    kind = "geodesic"

    def __init__(
        self,
        connection: Callable[[Point], np.ndarray],
        external: Optional[VectorField] = None,
        flat: bool = False,
    ):
        self.connection = connection
        self.external = external
        self.flat = bool(flat)

    def generate(self, Y: VectorFieldJet) -> Diffusor:
        ext = None
        if self.external is not None:
            ext = TangentVector(Y.at, self.external.value(Y.at))
        return geodesic_generate(self.connection, TangentVector(Y.at, Y.value), ext)


class LagrangianGenerator(DiffusionGenerator):
    kind = "lagrangian"

    def __init__(self, lagrangian: Lagrangian, tol: Optional[float] = None):
        self.lagrangian = lagrangian
        self.regularity_tolerance = tol

    def generate(self, Y: VectorFieldJet) -> Diffusor:
        L = self.lagrangian.map_for(Y.at.chart_id)
        return lagrangian_generate(L, Y.at, Y.value, self.regularity_tolerance)


class QuadraticFormGenerator(DiffusionGenerator):
    kind = "quadratic_form"

    def __init__(self, alpha: CovariantTensorField):
        self.alpha = alpha

    def generate(self, Y: VectorFieldJet) -> Diffusor:
        alpha = self.alpha.map_for(Y.at.chart_id)
        return quadratic_form_generate(alpha, Y.at, Y.value)


class KineticPotentialGenerator(DiffusionGenerator):
    kind = "kinetic_potential"

    def __init__(
        self, metric: CovariantTensorField, potential: Optional[ScalarField] = None
    ):
        self.metric = metric
        self.potential = potential

    def generate(self, Y: VectorFieldJet) -> Diffusor:
        cid = Y.at.chart_id
        phi = self.potential.map_for(cid) if self.potential is not None else None
        return kinetic_potential_generate(self.metric.map_for(cid), phi, Y.at, Y.value)


def standard_ito_generator(m: ChartedManifold) -> GeodesicGenerator:
    """The geodesic generator of the manifold's own connection."""
    if not m.has_connection:
        raise ValueError("manifold carries no connection")
    return GeodesicGenerator(m.christoffels, flat=m.flat)
