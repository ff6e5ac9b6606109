"""Intrinsic SDEs on charted manifolds.

A desk-scale toolkit for stochastic differential equations written in
second-order (diffusor) form: diffusion generators built from vector-field
flows, connections and regular Lagrangians; conversion between intrinsic,
Stratonovich and standard Ito representations; and sample-path generation
with chart Euler-Maruyama and exponential-map schemes.
"""

from .expr import Expression, ExpressionError, parse_expression, parse_expression_list, vector_map
from .fields import (
    CovariantTensorField,
    Lagrangian,
    PointwiseVectorField,
    ScalarField,
    VectorField,
    VectorFieldJet,
    ZeroVectorField,
    constant_field,
    kinetic_lagrangian,
)
from .generators import (
    DiffusionGenerator,
    GeodesicGenerator,
    KineticPotentialGenerator,
    LagrangianGenerator,
    QuadraticFormGenerator,
    RegularityError,
    SingularTensorError,
    StratonovichGenerator,
    christoffel_from_metric,
    geodesic_generate,
    kinetic_potential_generate,
    lagrangian_generate,
    quadratic_form_generate,
    standard_ito_generator,
    stratonovich_generate,
)
from .geometry import (
    CHART_MARGIN,
    Chart,
    ChartedManifold,
    Diffusor,
    OutOfChartError,
    Point,
    TangentVector,
    Transition,
    apply_diffusor,
    pushforward_diffusor,
    symmetric_part,
    transform_point,
    transform_vector,
)
from .integrators import (
    ErrorRow,
    LeftAtlasError,
    NoiseStream,
    PathRecord,
    SchemeConfig,
    bd_step,
    em_step,
    error_study,
    exp_map,
    fit_order,
    simulate_path,
    simulate_terminal_batch,
)
from .jets import Jet2, SmoothMap, compose, identity_map
from .manifolds import SPHERE_CHART_RADIUS, embed_sphere, make, sphere_embedding
from .sde import (
    IntrinsicSDE,
    LocalItoCoefficients,
    SchwartzMorphismCoefficients,
    convert_generator,
    difference_one_form,
    local_ito_coefficients,
    schwartz_morphism_coefficients,
)

__version__ = "0.1.0"
