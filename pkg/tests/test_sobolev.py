import math

import numpy as np
import pytest

from kerninv.geometry import Box, Circle, Interval, PointSet, uniform_refinement
from kerninv.kernels import MaternKernel, TrialSpace, restrict
from kerninv.quadrature import build_rule, build_rule_pair, lq_norm
from kerninv.sobolev import (
    FractionalSplit,
    circle_sobolev_gram,
    circle_spectral_norm,
    gagliardo_seminorm,
    gagliardo_seminorm_gram,
    h_norm_gram,
    integer_seminorm_gram,
)

from conftest import interval_space


def circle_space(n, m=2.5, offset=0.0):
    C = Circle()
    th = offset + 2 * math.pi * np.arange(n) / n
    return TrialSpace(restrict(MaternKernel(m, 2), C), PointSet(C.embed(th), C))


def test_fractional_split():
    assert FractionalSplit.of(2.5) == FractionalSplit(2.5, 2, 0.5)
    assert FractionalSplit.of(2.0).t == 0.0
    assert FractionalSplit.of(1.9999999999999).k == 2
    with pytest.raises(ValueError):
        FractionalSplit.of(-1)


def test_single_node_mass(pins):
    sp = TrialSpace(MaternKernel(1.0, 1), PointSet(np.array([[0.0]]), Interval(a=-10, b=10)))
    G = integer_seminorm_gram(sp, 0, build_rule(Interval(a=-10, b=10), 7))
    assert G.matrix[0, 0] == pytest.approx(pins["mass_single_node_exp"], rel=1e-10)


def test_zero_coefficients_give_zero():
    sp = interval_space(np.linspace(0, 1, 5))
    G = integer_seminorm_gram(sp, 2, build_rule(Interval(), 3))
    assert G.quadratic_form(np.zeros(5)) == 0.0


def test_integer_form_matches_direct_quadrature():
    sp = interval_space([0.3, 0.7])
    rule = build_rule(Interval(), 4)
    rng = np.random.default_rng(0)
    for k in (0, 1, 2):
        G = integer_seminorm_gram(sp, k, rule)
        for _ in range(20):
            c = rng.standard_normal(2)
            x = rule.nodes[:, 0]
            vals = [sum(c[j] * (sp.kernel.derivative((k,), [[xi]], [[sp.centers[j, 0]]])[0, 0] if k else
                                sp.kernel([[xi]], [[sp.centers[j, 0]]])[0, 0]) for j in range(2)) for xi in x]
            direct = float(np.sum(rule.weights * np.square(vals)))
            assert G.quadratic_form(c) == pytest.approx(direct, rel=1e-10)


def test_derivative_budget_enforced():
    sp = interval_space([0.3, 0.7], m=2.0)
    with pytest.raises(ValueError):
        integer_seminorm_gram(sp, 3, build_rule(Interval(), 2))
    with pytest.raises(ValueError):
        h_norm_gram(sp, 2.5, build_rule(Interval(), 2))


def test_gagliardo_linear_pin(pins):
    pair = build_rule_pair(Interval(), 3)
    val = gagliardo_seminorm(lambda x: x[:, 0], pair, 0.5, grad=lambda x: np.ones_like(x)) ** 2
    assert val == pytest.approx(pins["gagliardo_linear_half"], abs=1e-3)


def test_gagliardo_constant_and_scaling():
    pair = build_rule_pair(Interval(), 2)
    assert gagliardo_seminorm(lambda x: np.full(len(x), 3.0), pair, 0.3) == 0.0
    f = lambda x: np.sin(3 * x[:, 0])
    g = lambda x: 3 * np.cos(3 * x)
    a = gagliardo_seminorm(f, pair, 0.4, g) ** 2
    b = gagliardo_seminorm(lambda x: 2 * f(x), pair, 0.4, lambda x: 2 * g(x)) ** 2
    assert b == pytest.approx(4 * a, rel=1e-13)


def test_gagliardo_quadratic_form_approaches_closed_form():
    pair = build_rule_pair(Interval(), 4)
    # |x^2|^2 at t = 1/2 is the double integral of (x + y)^2, i.e. 7/6
    val = gagliardo_seminorm(lambda x: x[:, 0] ** 2, pair, 0.5, grad=lambda x: 2 * x) ** 2
    assert val == pytest.approx(7 / 6, abs=1e-3)


def test_gagliardo_errors():
    sp = interval_space(np.linspace(0, 1, 5))
    pair = build_rule_pair(Interval(), 2)
    for t in (0.0, 1.0, 1.3):
        with pytest.raises(ValueError):
            gagliardo_seminorm_gram(sp, 0, t, pair)
    with pytest.raises(ValueError):
        gagliardo_seminorm_gram(sp, 2, 0.5, pair)
    big = TrialSpace(MaternKernel(2.5, 2), uniform_refinement(Box(), 2))
    with pytest.raises(ValueError, match="exceeds"):
        gagliardo_seminorm_gram(big, 0, 0.5, build_rule_pair(Box(), 3))


def test_gagliardo_gram_matches_evaluable_path():
    sp = interval_space(np.linspace(0, 1, 6))
    pair = build_rule_pair(Interval(), 3)
    G = gagliardo_seminorm_gram(sp, 1, 0.5, pair)
    assert G.metadata["near_correction"]
    assert G.metadata["near_measure"] > 0
    rng = np.random.default_rng(4)
    for _ in range(20):
        c = rng.standard_normal(6)
        f = lambda x: sp.basis_derivative((1,), x) @ c
        g = lambda x: sp.basis_derivative((2,), x) @ c
        ref = gagliardo_seminorm(f, pair, 0.5, g) ** 2
        assert G.quadratic_form(c) == pytest.approx(ref, rel=1e-3)


def test_h_norm_composition():
    sp = interval_space(np.linspace(0, 1, 5))
    rule = build_rule(Interval(), 3)
    G0 = integer_seminorm_gram(sp, 0, rule).matrix
    G1 = integer_seminorm_gram(sp, 1, rule).matrix
    np.testing.assert_allclose(h_norm_gram(sp, 0, rule).matrix, G0, rtol=1e-14)
    np.testing.assert_allclose(h_norm_gram(sp, 1, rule).matrix, G0 + G1, rtol=1e-13)
    G15 = h_norm_gram(sp, 1.5, rule)
    assert G15.order == 1.5 and G15.kind == "full"


def test_nesting_of_full_norms():
    sp = interval_space(np.linspace(0, 1, 9))
    rule = build_rule(Interval(), 4)
    a, b = h_norm_gram(sp, 1, rule).matrix, h_norm_gram(sp, 2, rule).matrix
    w = np.linalg.eigvalsh(b - a)
    assert w.min() >= -1e-12 * w.max()


def test_gram_symmetry():
    sp = TrialSpace(MaternKernel(2.5, 2), uniform_refinement(Box(), 1))
    rule = build_rule(Box(), 2)
    G = h_norm_gram(sp, 1.5, rule, build_rule_pair(Box(), 2)).matrix
    np.testing.assert_array_equal(G, G.T)


def test_fractional_norm_equivalent_to_spectral_on_periodic_modes():
    """Interval Gagliardo and circle spectral seminorms of cos(k x) stay within fixed factors."""
    pair = build_rule_pair(Interval(a=0, b=2 * math.pi), 5)
    ratios = []
    for k in range(1, 7):
        g = gagliardo_seminorm(lambda x: np.cos(k * x[:, 0]), pair, 0.5, lambda x: -k * np.sin(k * x)) ** 2
        ratios.append(g / (math.pi * k))
    assert max(ratios) / min(ratios) < 3.0


def test_circle_spectral_examples(pins):
    th = 2 * math.pi * np.arange(128) / 128
    assert circle_spectral_norm(np.ones(128), 0) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-15)
    assert circle_spectral_norm(np.cos(3 * th), 1) == pytest.approx(pins["circle_cos3_beta1"], rel=1e-14)
    u = np.exp(np.sin(th))
    rule = build_rule(Circle(), 3)
    assert circle_spectral_norm(u, 0) == pytest.approx(lq_norm(rule, np.exp(rule.nodes[:, 1]), 2), rel=1e-10)


def test_circle_spectral_guards():
    with pytest.raises(ValueError, match="under-resolved"):
        circle_spectral_norm(np.random.default_rng(0).standard_normal(64), 1)
    with pytest.raises(ValueError):
        circle_spectral_norm(np.ones(100), 0)
    with pytest.raises(ValueError):
        circle_spectral_norm(np.ones(32), 0)


def test_circle_mass_matches_quadrature():
    sp = circle_space(12, offset=0.1)
    G = circle_sobolev_gram(sp, 0.0, 10).matrix
    rule = build_rule(Circle(), 10)
    V = sp.basis(rule.nodes)
    np.testing.assert_allclose(G, (V * rule.weights[:, None]).T @ V, rtol=1e-8, atol=1e-12)


def test_circle_gram_circulant():
    G = circle_sobolev_gram(circle_space(16), 1.0, 10).matrix
    for j in range(16):
        np.testing.assert_allclose(np.roll(G[j], -j), G[0], atol=1e-12)


def test_circle_single_node():
    sp = circle_space(1)
    th = 2 * math.pi * np.arange(1024) / 1024
    samples = sp.basis(Circle.embed(th))[:, 0]
    G = circle_sobolev_gram(sp, 1.5, 10).matrix
    assert G[0, 0] == pytest.approx(circle_spectral_norm(samples, 1.5) ** 2, rel=1e-13)


def test_circle_gram_errors():
    with pytest.raises(ValueError):
        circle_sobolev_gram(circle_space(4), 2.5, 10)
    with pytest.raises(ValueError):
        circle_sobolev_gram(interval_space([0.5]), 0.0, 10)
