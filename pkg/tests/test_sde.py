"""Local Ito coefficients, morphism coefficients, and representation changes."""

import math

import numpy as np
import pytest

from intrinsic_sde.fields import Lagrangian, VectorField, ZeroVectorField, constant_field
from intrinsic_sde.generators import (
    LagrangianGenerator,
    StratonovichGenerator,
    standard_ito_generator,
)
from intrinsic_sde.geometry import Diffusor, Point, pushforward_diffusor, transform_point
from intrinsic_sde.jets import SmoothMap, powi
from intrinsic_sde.jets import sin as jsin
from intrinsic_sde.manifolds import make
from intrinsic_sde.sde import (
    IntrinsicSDE,
    convert_generator,
    difference_one_form,
    local_ito_coefficients,
    schwartz_morphism_coefficients,
)


def _quartic_map():
    def fn(js):
        x, y, v1, v2 = js
        return [
            powi(v1, 4) + v1 * v1 + v1 + v2 + v2 * v2 + powi(v2, 4) - x * x - y * y
        ]

    return SmoothMap(4, 1, fn)


def _worked_example():
    """The quartic-Lagrangian SDE on the plane with its two linear noise fields."""
    m = make("euclidean", n=2)
    V = VectorField(
        m, "cart", SmoothMap(2, 2, lambda js: [1.0, jsin(5.0 * math.pi * js[0])])
    )
    s1 = VectorField(m, "cart", SmoothMap(2, 2, lambda js: [js[1], 0.0]))
    s2 = VectorField(m, "cart", SmoothMap(2, 2, lambda js: [0.0, js[1]]))
    gen = LagrangianGenerator(Lagrangian(m, "cart", _quartic_map()))
    return m, IntrinsicSDE(m, V, [s1, s2], gen)


def _printed_drift(x, y):
    return np.array(
        [
            1.0 + 0.5 * (-x / (6 * y * y + 1)) + 0.5 * (-x),
            math.sin(5 * math.pi * x) + 0.5 * (-y) + 0.5 * (-y / (6 * y * y + 1)),
        ]
    )


def test_local_ito_worked_example():
    m, sde = _worked_example()
    rng = np.random.default_rng(71)
    for _ in range(25):
        x, y = rng.uniform(-2.0, 2.0, size=2)
        co = local_ito_coefficients(sde, Point("cart", np.array([x, y])))
        assert np.max(np.abs(co.drift - _printed_drift(x, y))) < 1e-12
        assert np.allclose(co.diffusion, [[y, 0.0], [0.0, y]], atol=1e-14)
        assert np.array_equal(
            co.quadratic_variation_rate, co.diffusion @ co.diffusion.T
        )


def test_local_ito_ode_case():
    m = make("euclidean", n=2)
    V = constant_field(m, "cart", [0.7, -0.1])
    sde = IntrinsicSDE(m, V, [], standard_ito_generator(m))
    co = local_ito_coefficients(sde, Point("cart", np.array([1.0, 2.0])))
    assert np.array_equal(co.drift, [0.7, -0.1])
    assert co.diffusion.shape == (2, 0)
    assert np.array_equal(co.quadratic_variation_rate, np.zeros((2, 2)))


def test_local_ito_flat_constant_noise():
    m = make("euclidean", n=2)
    V = constant_field(m, "cart", [0.3, 0.4])
    s = constant_field(m, "cart", [1.0, 2.0])
    sde = IntrinsicSDE(m, V, [s], standard_ito_generator(m))
    co = local_ito_coefficients(sde, Point("cart", np.array([5.0, -1.0])))
    assert np.allclose(co.drift, [0.3, 0.4], atol=0.0)


def test_schwartz_coefficients_single_noise():
    m = make("euclidean", n=2)
    V = constant_field(m, "cart", [0.0, 0.0])
    s = VectorField(m, "cart", SmoothMap(2, 2, lambda js: [js[1], js[0]]))
    sde = IntrinsicSDE(m, V, [s], StratonovichGenerator())
    x = Point("cart", np.array([2.0, 3.0]))
    co = schwartz_morphism_coefficients(sde, x)
    # p = 1: the whole generator drift sits in the single diagonal slot
    assert np.allclose(co.f2[:, 0, 0], [2.0, 3.0], atol=1e-14)
    assert np.array_equal(co.f[:, 0], [3.0, 2.0])


def test_schwartz_coefficients_reconstruct_local_ito():
    m, sde = _worked_example()
    rng = np.random.default_rng(73)
    for _ in range(10):
        x = Point("cart", rng.uniform(-1.5, 1.5, size=2))
        co = schwartz_morphism_coefficients(sde, x)
        ito = local_ito_coefficients(sde, x)
        # trace of the second-order block restores the generator drift term
        drift = co.f0 + 0.5 * np.einsum("ill->i", co.f2)
        assert np.max(np.abs(drift - ito.drift)) < 1e-14
        assert np.array_equal(co.f, ito.diffusion)
        # isotropic split: off-diagonal slots vanish, diagonal slots equal
        p = sde.p
        for l in range(p):
            for mm in range(p):
                if l != mm:
                    assert np.array_equal(co.f2[:, l, mm], np.zeros(2))


def test_schwartz_coefficients_need_noise():
    m = make("euclidean", n=2)
    sde = IntrinsicSDE(m, ZeroVectorField(m), [], standard_ito_generator(m))
    with pytest.raises(ValueError, match="noise"):
        schwartz_morphism_coefficients(sde, Point("cart", np.zeros(2)))


def test_difference_one_form_zero_for_same_generator():
    m, sde = _worked_example()
    Y = sde.noise[0].jet(Point("cart", np.array([0.5, 1.5])))
    d = difference_one_form(sde.generator, sde.generator, Y)
    assert np.array_equal(d.components, np.zeros(2))


def test_difference_one_form_stratonovich_vs_flat():
    # sigma = (y, x): Stratonovich drift is (x, y), flat geodesic drift is 0.
    m = make("euclidean", n=2)
    s = VectorField(m, "cart", SmoothMap(2, 2, lambda js: [js[1], js[0]]))
    gs = StratonovichGenerator()
    gi = standard_ito_generator(m)
    for x, y in ((0.4, -1.2), (2.0, 3.0)):
        Y = s.jet(Point("cart", np.array([x, y])))
        d = difference_one_form(gs, gi, Y)
        assert np.allclose(d.components, [x, y], atol=1e-14)


def test_difference_one_form_quartic_vs_flat():
    m, sde = _worked_example()
    gi = standard_ito_generator(m)
    for x, y in ((1.0, 1.0), (-0.7, 0.4)):
        Y = sde.noise[0].jet(Point("cart", np.array([x, y])))
        d = difference_one_form(sde.generator, gi, Y)
        assert np.allclose(d.components, [-x / (6 * y * y + 1), -y], atol=1e-13)


def test_convert_generator_identity_and_roundtrip():
    m, sde = _worked_example()
    gi = standard_ito_generator(m)
    same = convert_generator(sde, sde.generator)
    to_flat = convert_generator(sde, gi)
    back = convert_generator(to_flat, sde.generator)
    rng = np.random.default_rng(77)
    for _ in range(10):
        x = Point("cart", rng.uniform(-1.5, 1.5, size=2))
        v0 = sde.drift.value(x)
        assert np.max(np.abs(same.drift.value(x) - v0)) < 1e-15
        assert np.max(np.abs(back.drift.value(x) - v0)) < 1e-12
        # converted-to-flat drift equals the printed chart Ito drift
        ito = local_ito_coefficients(sde, x)
        assert np.max(np.abs(to_flat.drift.value(x) - ito.drift)) < 1e-13


def test_representation_equivalence_of_local_ito():
    m, sde = _worked_example()
    targets = [standard_ito_generator(m), StratonovichGenerator()]
    rng = np.random.default_rng(79)
    for target in targets:
        converted = convert_generator(sde, target)
        for _ in range(10):
            x = Point("cart", rng.uniform(-1.5, 1.5, size=2))
            a = local_ito_coefficients(sde, x)
            b = local_ito_coefficients(converted, x)
            assert np.max(np.abs(a.drift - b.drift)) <= 1e-12
            assert np.array_equal(a.diffusion, b.diffusion)


def test_stratonovich_identity_drift():
    # source generator G_S: the chart Ito drift must be V + (d sigma) sigma / 2
    # with hand-coded Jacobians for the two fixture fields.
    m = make("euclidean", n=2)
    V = constant_field(m, "cart", [0.2, -0.3])
    s1 = VectorField(m, "cart", SmoothMap(2, 2, lambda js: [js[1], js[0]]))
    s2 = VectorField(m, "cart", SmoothMap(2, 2, lambda js: [0.5 * js[0] * js[0], js[1]]))
    sde = IntrinsicSDE(m, V, [s1, s2], StratonovichGenerator())
    rng = np.random.default_rng(81)
    for _ in range(10):
        x, y = rng.uniform(-1.5, 1.5, size=2)
        co = local_ito_coefficients(sde, Point("cart", np.array([x, y])))
        J1 = np.array([[0.0, 1.0], [1.0, 0.0]])
        J2 = np.array([[x, 0.0], [0.0, 1.0]])
        hand = (
            np.array([0.2, -0.3])
            + 0.5 * (J1 @ np.array([y, x]) + J2 @ np.array([0.5 * x * x, y]))
        )
        assert np.max(np.abs(co.drift - hand)) <= 1e-12


def test_local_ito_chart_invariance():
    # Push the full drift diffusor (drift, qv/2) through the transition and
    # compare against coefficients computed directly in the other chart.
    homes = {"euclidean_warped2": ("cart", "warp"), "sphere2": ("north", "south")}
    rng = np.random.default_rng(83)
    for name, (a, b) in homes.items():
        m = make(name)
        V = VectorField(m, a, SmoothMap(2, 2, lambda js: [0.1 + js[1], 0.2 * js[0]]))
        s = VectorField(m, a, SmoothMap(2, 2, lambda js: [0.3 * js[0], 0.1 - 0.2 * js[1]]))
        sde = IntrinsicSDE(m, V, [s], standard_ito_generator(m))
        for _ in range(10):
            coords = rng.uniform(0.4, 1.2, size=2)
            x = Point(a, coords)
            co_a = local_ito_coefficients(sde, x)
            D_a = Diffusor(x, co_a.drift, 0.5 * co_a.quadratic_variation_rate)
            pushed = pushforward_diffusor(m.transition(a, b).map, D_a, b)
            x_b = transform_point(m, x, b)
            co_b = local_ito_coefficients(sde, x_b)
            scale = max(1.0, float(np.max(np.abs(co_b.drift))))
            assert np.max(np.abs(pushed.first_order - co_b.drift)) / scale < 1e-9
            assert (
                np.max(np.abs(pushed.second_order - 0.5 * co_b.quadratic_variation_rate))
                < 1e-9
            )
