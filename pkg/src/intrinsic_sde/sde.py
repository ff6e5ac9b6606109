"""Intrinsic SDEs: the triple (drift field, noise fields, diffusion generator).

In every chart the triple has the local Ito form

    dX^i = (V^i + a^i / 2) dt + sigma^i_l dW^l,

where ``a = sum_l G(sigma_l)`` is the generator drift.  Changing the
generator while keeping the solution is a drift shift by the difference
one-form ``G - G_target``, which is an honest tangent vector because the
second-order parts of the two generators cancel identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import PointwiseVectorField, VectorFieldJet
from .generators import DiffusionGenerator
from .geometry import ChartedManifold, Point, TangentVector

__all__ = [
    "IntrinsicSDE",
    "LocalItoCoefficients",
    "SchwartzMorphismCoefficients",
    "local_ito_coefficients",
    "schwartz_morphism_coefficients",
    "difference_one_form",
    "convert_generator",
]


class IntrinsicSDE:
    """Drift field, noise fields and generator over a charted manifold."""

    def __init__(
        self,
        manifold: ChartedManifold,
        drift,
        noise: Sequence,
        generator: DiffusionGenerator,
    ):
        self.manifold = manifold
        self.drift = drift
        self.noise = tuple(noise)
        self.generator = generator

    @property
    def p(self) -> int:
        """Number of driving Brownian components; 0 degenerates to an ODE."""
        return len(self.noise)

    def __repr__(self) -> str:
        return (
            f"IntrinsicSDE(p={self.p}, generator={self.generator.kind}, "
            f"manifold={self.manifold.name or self.manifold.dimension})"
        )


@dataclass(frozen=True)
class LocalItoCoefficients:
    drift: np.ndarray
    diffusion: np.ndarray
    quadratic_variation_rate: np.ndarray


@dataclass(frozen=True)
class SchwartzMorphismCoefficients:
    f0: np.ndarray
    f: np.ndarray
    f2: np.ndarray


def _noise_values_and_drift_sum(
    sde: IntrinsicSDE, x: Point
) -> tuple[np.ndarray, np.ndarray]:
    n = sde.manifold.dimension
    p = sde.p
    diffusion = np.zeros((n, p))
    a_sum = np.zeros(n)
    for l, field in enumerate(sde.noise):
        Y = field.jet(x)
        diffusion[:, l] = Y.value
        a_sum = a_sum + sde.generator.generate(Y).first_order
    return diffusion, a_sum


def local_ito_coefficients(sde: IntrinsicSDE, x: Point) -> LocalItoCoefficients:
    """Chart drift ``V + a/2``, diffusion columns and quadratic-variation rate."""
    diffusion, a_sum = _noise_values_and_drift_sum(sde, x)
    drift = sde.drift.value(x) + 0.5 * a_sum
    return LocalItoCoefficients(
        drift=drift,
        diffusion=diffusion,
        quadratic_variation_rate=diffusion @ diffusion.T,
    )


def schwartz_morphism_coefficients(
    sde: IntrinsicSDE, x: Point
) -> SchwartzMorphismCoefficients:
    """Explicit fiber-map coefficients from the Brownian source space.

    The second-order block is only determined up to its trace; the canonical
    output spreads the generator drift isotropically,
    ``f2[i, l, m] = a^i delta_{lm} / p``.  Any symmetric block with the same
    trace is admissible.
    """
    p = sde.p
    if p < 1:
        raise ValueError("Schwartz morphism coefficients need at least one noise field")
    diffusion, a_sum = _noise_values_and_drift_sum(sde, x)
    f0 = sde.drift.value(x)
    f2 = np.einsum("i,lm->ilm", a_sum / p, np.eye(p))
    return SchwartzMorphismCoefficients(f0=f0, f=diffusion, f2=f2)


def difference_one_form(
    G: DiffusionGenerator, G_alpha: DiffusionGenerator, Y: VectorFieldJet
) -> TangentVector:
    """The tangent vector ``G(Y) - G_alpha(Y)``.

    The second-order parts agree by the defining property, so only the drift
    difference survives; that cancellation is asserted, not assumed.
    """
    d = G.generate(Y)
    d_alpha = G_alpha.generate(Y)
    if not np.array_equal(d.second_order, d_alpha.second_order):
        raise ValueError(
            "second-order parts of the two generators do not cancel; "
            "one of them violates the defining property"
        )
    return TangentVector(Y.at, d.first_order - d_alpha.first_order)


def convert_generator(sde: IntrinsicSDE, target: DiffusionGenerator) -> IntrinsicSDE:
    """Re-express the SDE with another generator, shifting the drift to match.

    The returned drift rule is a closure over the source SDE, evaluated
    lazily per point; noise fields are shared unchanged.
    """
    source = sde.generator

    def drift_fn(point: Point) -> np.ndarray:
        shift_sum = np.zeros(sde.manifold.dimension)
        for field in sde.noise:
            Y = field.jet(point)
            shift_sum = shift_sum + difference_one_form(source, target, Y).components
        return sde.drift.value(point) + 0.5 * shift_sum

    return IntrinsicSDE(
        sde.manifold,
        PointwiseVectorField(sde.manifold, drift_fn),
        sde.noise,
        target,
    )
