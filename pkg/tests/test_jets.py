"""Jet arithmetic against finite-difference and chain-rule oracles."""

import math

import numpy as np
import pytest

from intrinsic_sde.jets import (
    Jet2,
    SmoothMap,
    compose,
    constant,
    cos,
    exp,
    identity_map,
    lift_scalar,
    log,
    powi,
    sin,
    sqrt,
    variable,
)

from helpers import fd_gradient, fd_hessian


def test_variable_seeds():
    j = variable(0, 2.0, 2)
    assert j.value == 2.0
    assert np.array_equal(j.gradient, [1.0, 0.0])
    assert np.array_equal(j.hessian, np.zeros((2, 2)))

    j = variable(1, -3.5, 2)
    assert j.value == -3.5
    assert np.array_equal(j.gradient, [0.0, 1.0])

    j = variable(0, 0.0, 1)
    assert j.value == 0.0
    assert np.array_equal(j.gradient, [1.0])
    assert np.array_equal(j.hessian, [[0.0]])


def test_variable_index_out_of_range():
    with pytest.raises(IndexError):
        variable(2, 1.0, 2)
    with pytest.raises(IndexError):
        variable(-1, 1.0, 2)


def test_square_of_variable():
    x = variable(0, 2.0, 1)
    f = x * x
    assert f.value == 4.0
    assert np.array_equal(f.gradient, [4.0])
    assert np.array_equal(f.hessian, [[2.0]])


def test_sin_at_zero():
    f = sin(variable(0, 0.0, 1))
    assert f.value == 0.0
    assert np.array_equal(f.gradient, [1.0])
    assert np.array_equal(f.hessian, [[0.0]])


def test_product_matches_finite_differences():
    # oracle first: central differences of f(x, y) = x * y at (2, 3)
    def f(z):
        return z[0] * z[1]

    x0 = np.array([2.0, 3.0])
    g_fd = fd_gradient(f, x0)
    H_fd = fd_hessian(f, x0)
    assert np.allclose(g_fd, [3.0, 2.0], rtol=1e-5)
    assert np.allclose(H_fd, [[0.0, 1.0], [1.0, 0.0]], atol=1e-4)

    jet = variable(0, 2.0, 2) * variable(1, 3.0, 2)
    assert jet.value == 6.0
    assert np.array_equal(jet.gradient, [3.0, 2.0])
    assert np.array_equal(jet.hessian, [[0.0, 1.0], [1.0, 0.0]])


def test_identity_map_jets():
    m = identity_map(2)
    jets = m.jets([1.0, 2.0])
    assert [j.value for j in jets] == [1.0, 2.0]
    assert np.array_equal(np.stack([j.gradient for j in jets]), np.eye(2))
    assert all(np.array_equal(j.hessian, np.zeros((2, 2))) for j in jets)


def test_monomial_map():
    m = SmoothMap(1, 1, lambda js: [powi(js[0], 2)])
    (jet,) = m.jets([1.0])
    assert jet.value == 1.0
    assert np.array_equal(jet.gradient, [2.0])
    assert np.array_equal(jet.hessian, [[2.0]])


def test_quartic_lagrangian_partials():
    # L(x, y, v1, v2) = v1^4 + v1^2 + v1 + v2 + v2^2 + v2^4 - x^2 - y^2
    def fn(js):
        x, y, v1, v2 = js
        return [
            powi(v1, 4) + v1 * v1 + v1 + v2 + v2 * v2 + powi(v2, 4) - x * x - y * y
        ]

    m = SmoothMap(4, 1, fn)
    (jet,) = m.jets([1.0, 1.0, 1.0, 1.0])
    assert jet.value == 4.0
    assert jet.gradient[2] == 7.0  # 4 v1^3 + 2 v1 + 1
    assert jet.hessian[2, 2] == 14.0  # 12 v1^2 + 2


# Every elementary operation, exercised through composite expressions.
_CASES = [
    ("poly", lambda z: (z[0] - 2.0) * (z[1] + z[0]) - z[1] * z[1] * z[0], [0.7, -1.3]),
    ("ratio", lambda z: (z[0] + 3.0) / (z[1] * z[1] + 0.5), [0.4, 0.9]),
    ("trig", lambda z: z[0] * math.sin(z[1]) + math.cos(z[0] * z[1]), [0.3, 1.1]),
    ("expo", lambda z: math.exp(0.5 * z[0] - z[1]) + math.log(z[0] + 2.0), [0.8, 0.2]),
    ("root", lambda z: math.sqrt(z[0] * z[0] + z[1] * z[1] + 1.0), [1.2, -0.6]),
    ("power", lambda z: (z[0] + 0.5) ** 3 + (z[1] + 2.0) ** -2, [0.5, 0.25]),
]

_JET_CASES = {
    "poly": lambda x, y: (x - 2.0) * (y + x) - y * y * x,
    "ratio": lambda x, y: (x + 3.0) / (y * y + 0.5),
    "trig": lambda x, y: x * sin(y) + cos(x * y),
    "expo": lambda x, y: exp(0.5 * x - y) + log(x + 2.0),
    "root": lambda x, y: sqrt(x * x + y * y + 1.0),
    "power": lambda x, y: powi(x + 0.5, 3) + powi(y + 2.0, -2),
}


@pytest.mark.parametrize("name,f,x0", _CASES, ids=[c[0] for c in _CASES])
def test_elementary_ops_match_finite_differences(name, f, x0):
    x0 = np.array(x0)
    jet = _JET_CASES[name](variable(0, x0[0], 2), variable(1, x0[1], 2))
    g_fd = fd_gradient(f, x0)
    H_fd = fd_hessian(f, x0)
    assert jet.value == pytest.approx(f(x0), rel=1e-12)
    scale = np.maximum(np.abs(g_fd), 1.0)
    assert np.max(np.abs(jet.gradient - g_fd) / scale) < 1e-5
    assert np.max(np.abs(jet.hessian - H_fd)) < 1e-4


@pytest.mark.parametrize("name", list(_JET_CASES), ids=list(_JET_CASES))
def test_hessian_symmetry_is_bit_exact(name):
    rng = np.random.default_rng(5)
    for _ in range(25):
        x, y = rng.uniform(0.2, 1.5, size=2)
        jet = _JET_CASES[name](variable(0, x, 2), variable(1, y, 2))
        assert np.array_equal(jet.hessian, jet.hessian.T)


def test_composition_matches_manual_chain_rule():
    # f: R^2 -> R^2 and g: R^2 -> R polynomial; oracle combines g's jets at
    # f(x) with f's jets at x through the explicit second-order chain rule.
    f = SmoothMap(2, 2, lambda js: [js[0] * js[1], js[0] + powi(js[1], 3)])
    g = SmoothMap(2, 1, lambda js: [powi(js[0], 2) - js[0] * js[1]])
    x0 = np.array([0.8, -0.5])

    f_jets = f.jets(x0)
    mid = np.array([j.value for j in f_jets])
    Jf = np.stack([j.gradient for j in f_jets])
    g_jet = g.jets(mid)[0]
    grad_manual = g_jet.gradient @ Jf
    hess_manual = Jf.T @ g_jet.hessian @ Jf
    for k, fj in enumerate(f_jets):
        hess_manual = hess_manual + g_jet.gradient[k] * fj.hessian

    comp = compose(g, f).jets(x0)[0]
    assert comp.value == pytest.approx(g_jet.value, abs=1e-15)
    assert np.max(np.abs(comp.gradient - grad_manual)) < 1e-12
    assert np.max(np.abs(comp.hessian - hess_manual)) < 1e-12


def test_lift_scalar_matches_composition():
    # atan-style lift: compare against a pure-jet construction of the same
    # function, sqrt(u^2 + 1), written via lift_scalar with hand derivatives
    u = variable(0, 0.7, 1) * variable(0, 0.7, 1) + 0.3
    hand = lift_scalar(
        [u],
        math.sqrt(u.value),
        [0.5 / math.sqrt(u.value)],
        [[-0.25 / u.value ** 1.5]],
    )
    direct = sqrt(u)
    assert hand.value == pytest.approx(direct.value, rel=1e-15)
    assert np.allclose(hand.gradient, direct.gradient, atol=1e-14)
    assert np.allclose(hand.hessian, direct.hessian, atol=1e-14)


def test_context_mismatch_raises():
    with pytest.raises(ValueError, match="context mismatch"):
        variable(0, 1.0, 2) + variable(0, 1.0, 3)


def test_division_by_zero_value():
    with pytest.raises(ZeroDivisionError):
        variable(0, 1.0, 1) / (variable(0, 1.0, 1) - 1.0)


def test_domain_errors():
    with pytest.raises(ValueError):
        log(variable(0, -1.0, 1))
    with pytest.raises(ValueError):
        sqrt(variable(0, -1.0, 1))
    with pytest.raises(TypeError):
        powi(variable(0, 1.0, 1), 0.5)
    with pytest.raises(ZeroDivisionError):
        powi(variable(0, 0.0, 1), -1)


def test_constants_and_scalars():
    c = constant(2.5, 3)
    assert c.value == 2.5
    assert np.array_equal(c.gradient, np.zeros(3))
    x = variable(0, 1.5, 1)
    assert (2.0 * x - x / 2.0 + 1.0).value == pytest.approx(3.25)
    assert (1.0 / x).value == pytest.approx(2.0 / 3.0)
    assert (x**0).value == 1.0


def test_smooth_map_shape_validation():
    m = SmoothMap(2, 1, lambda js: [js[0]])
    with pytest.raises(ValueError, match="expected 2 inputs"):
        m.jets([1.0])
    bad = SmoothMap(1, 2, lambda js: [js[0]])
    with pytest.raises(ValueError, match="produced 1 outputs"):
        bad.jets([1.0])
