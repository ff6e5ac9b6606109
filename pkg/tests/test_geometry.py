"""Diffusor pushforward, symmetric part, and chart transforms."""

import math

import numpy as np
import pytest

from intrinsic_sde.geometry import (
    Diffusor,
    OutOfChartError,
    Point,
    TangentVector,
    apply_diffusor,
    pushforward_diffusor,
    symmetric_part,
    transform_point,
    transform_vector,
)
from intrinsic_sde.jets import SmoothMap, compose, identity_map, powi
from intrinsic_sde.manifolds import make

from helpers import fd_gradient, fd_hessian


def _pt(*coords):
    return Point("cart", np.array(coords, dtype=float))


def test_pushforward_identity():
    L = Diffusor(_pt(0.3, -0.7), [1.0, 2.0], [[1.0, 0.5], [0.5, 2.0]])
    out = pushforward_diffusor(identity_map(2), L)
    assert np.array_equal(out.first_order, L.first_order)
    assert np.array_equal(out.second_order, L.second_order)


def test_pushforward_linear_map():
    phi = SmoothMap(2, 2, lambda js: [js[0] + js[1], js[0] - js[1]])
    L = Diffusor(_pt(0.0, 0.0), [1.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])
    out = pushforward_diffusor(phi, L)
    assert np.allclose(out.first_order, [1.0, 1.0], atol=1e-14)
    assert np.allclose(out.second_order, [[1.0, 1.0], [1.0, 1.0]], atol=1e-14)


def test_pushforward_square_1d():
    # phi(x) = x^2 at x = 1 with a = 2, b = 3:
    # a' = a phi' + b phi'' = 2*2 + 3*2 = 10, b' = b (phi')^2 = 12.
    # Oracle: finite differences of phi.
    def phi_f(z):
        return z[0] ** 2

    x0 = np.array([1.0])
    d1 = fd_gradient(phi_f, x0)[0]
    d2 = fd_hessian(phi_f, x0)[0, 0]
    a_expect = 2.0 * d1 + 3.0 * d2
    b_expect = 3.0 * d1 * d1
    assert a_expect == pytest.approx(10.0, rel=1e-4)
    assert b_expect == pytest.approx(12.0, rel=1e-4)

    phi = SmoothMap(1, 1, lambda js: [powi(js[0], 2)])
    L = Diffusor(_pt(1.0), [2.0], [[3.0]])
    out = pushforward_diffusor(phi, L)
    assert out.first_order[0] == pytest.approx(10.0, abs=1e-12)
    assert out.second_order[0, 0] == pytest.approx(12.0, abs=1e-12)


def test_symmetric_part_examples():
    L = Diffusor(_pt(0.0, 0.0), [5.0, 7.0], np.zeros((2, 2)))
    assert np.array_equal(symmetric_part(L), np.zeros((2, 2)))

    b = np.array([[1.0, 2.0], [2.0, 4.0]])
    L = Diffusor(_pt(0.0, 0.0), [0.0, 0.0], b)
    assert np.array_equal(symmetric_part(L), b)


def test_symmetric_part_congruence_under_linear_map():
    rng = np.random.default_rng(17)
    A = rng.normal(size=(2, 2))
    phi = SmoothMap(
        2, 2, lambda js: [A[0, 0] * js[0] + A[0, 1] * js[1], A[1, 0] * js[0] + A[1, 1] * js[1]]
    )
    L = Diffusor(_pt(0.2, 0.4), [0.0, 0.0], np.eye(2))
    out = pushforward_diffusor(phi, L)
    assert np.allclose(symmetric_part(out), A @ np.eye(2) @ A.T, atol=1e-14)


def test_apply_diffusor_examples():
    fx = SmoothMap(2, 1, lambda js: [js[0]])
    L = Diffusor(_pt(0.0, 0.0), [1.0, 0.0], np.zeros((2, 2)))
    assert apply_diffusor(L, fx) == pytest.approx(1.0)

    quad = SmoothMap(2, 1, lambda js: [js[0] * js[0] + js[1] * js[1]])
    L = Diffusor(_pt(0.0, 0.0), [0.0, 0.0], np.eye(2))
    assert apply_diffusor(L, quad) == pytest.approx(4.0)

    # f(x, y) = x y at (2, 3) with a = (1, 1), b = e_11: oracle from
    # finite differences of f.
    def f(z):
        return z[0] * z[1]

    x0 = np.array([2.0, 3.0])
    expect = np.array([1.0, 1.0]) @ fd_gradient(f, x0) + np.sum(
        np.diag([1.0, 0.0]) * fd_hessian(f, x0)
    )
    assert expect == pytest.approx(5.0, rel=1e-4)
    prod = SmoothMap(2, 1, lambda js: [js[0] * js[1]])
    L = Diffusor(_pt(2.0, 3.0), [1.0, 1.0], np.diag([1.0, 0.0]))
    assert apply_diffusor(L, prod) == pytest.approx(5.0, abs=1e-12)


def test_diffusor_requires_exact_symmetry():
    with pytest.raises(ValueError, match="symmetric"):
        Diffusor(_pt(0.0, 0.0), [0.0, 0.0], [[0.0, 1.0], [0.0, 0.0]])


def test_transform_point_identity_and_polar():
    m = make("polar2")
    p = Point("polar", np.array([1.0, math.pi / 2]))
    assert transform_point(m, p, "polar") is p
    q = transform_point(m, p, "cart")
    assert np.max(np.abs(q.coords - [0.0, 1.0])) < 1e-12


def test_transform_vector_warp_jacobian():
    # J[cart -> warp] = [[1, 3 y^2], [0, 1]]; oracle: finite differences of
    # the transition map itself.
    m = make("euclidean_warped2")
    for y in (0.0, 0.7, -1.2):
        at = Point("cart", np.array([0.4, y]))
        v = transform_vector(m, TangentVector(at, np.array([1.0, 0.0])), "warp")
        assert np.allclose(v.components, [1.0, 0.0], atol=1e-13)
        w = transform_vector(m, TangentVector(at, np.array([0.0, 1.0])), "warp")
        assert np.allclose(w.components, [3.0 * y * y, 1.0], atol=1e-12)

    def trans(z):
        return np.array([z[0] + z[1] ** 3, z[1]])

    from helpers import fd_jacobian

    at = np.array([0.4, 0.7])
    J_fd = fd_jacobian(trans, at)
    assert np.allclose(J_fd, [[1.0, 3 * 0.49], [0.0, 1.0]], atol=1e-7)


def test_transform_point_out_of_chart():
    m = make("polar2")
    # angle pi is the slit: the cartesian image is rejected by... the polar
    # chart itself cannot host it, so build it in cart and aim at polar.
    p = Point("cart", np.array([-1.0, 0.0]))
    with pytest.raises(OutOfChartError):
        transform_point(m, p, "polar")


def test_pushforward_functoriality_on_builtin_transitions():
    rng = np.random.default_rng(11)
    m = make("euclidean_warped2")
    fwd = m.transition("cart", "warp").map
    back = m.transition("warp", "cart").map
    for _ in range(20):
        coords = rng.uniform(-1.2, 1.2, size=2)
        a = rng.normal(size=2)
        c = rng.normal(size=(2, 2))
        b = c @ c.T
        L = Diffusor(Point("cart", coords), a, b)
        step = pushforward_diffusor(back, pushforward_diffusor(fwd, L, "warp"), "cart")
        direct = pushforward_diffusor(compose(back, fwd), L)
        scale = max(1.0, np.max(np.abs(direct.first_order)), np.max(np.abs(direct.second_order)))
        assert np.max(np.abs(step.first_order - direct.first_order)) / scale < 1e-9
        assert np.max(np.abs(step.second_order - direct.second_order)) / scale < 1e-9


def test_pushforward_schwartz_condition():
    # symmetric part of the image = J (symmetric part) J^T
    rng = np.random.default_rng(13)
    m = make("polar2")
    trans = m.transition("polar", "cart")
    for _ in range(20):
        coords = np.array([rng.uniform(0.5, 2.0), rng.uniform(-2.5, 2.5)])
        a = rng.normal(size=2)
        c = rng.normal(size=(2, 2))
        b = c @ c.T
        L = Diffusor(Point("polar", coords), a, b)
        out = pushforward_diffusor(trans.map, L, "cart")
        J = trans.map.jacobian(coords)
        assert np.max(np.abs(symmetric_part(out) - J @ b @ J.T)) < 1e-9


def test_pushforward_preserves_tangency_exactly():
    rng = np.random.default_rng(19)
    m = make("sphere2")
    trans = m.transition("north", "south").map
    for _ in range(20):
        coords = rng.uniform(0.5, 1.5, size=2)
        L = Diffusor(Point("north", coords), rng.normal(size=2), np.zeros((2, 2)))
        out = pushforward_diffusor(trans, L, "south")
        assert np.array_equal(out.second_order, np.zeros((2, 2)))


def test_pushforward_dimension_mismatch():
    phi = SmoothMap(3, 1, lambda js: [js[0]])
    L = Diffusor(_pt(0.0, 0.0), [0.0, 0.0], np.zeros((2, 2)))
    with pytest.raises(ValueError, match="expects 3 inputs"):
        pushforward_diffusor(phi, L)
