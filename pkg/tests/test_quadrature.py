import math

import numpy as np
import pytest

from kerninv.geometry import Annulus, Box, Circle, Disk, Interval
from kerninv.quadrature import build_rule, build_rule_pair, dense_grid, discrete_norm, lq_norm

HOSTS = [Interval(), Interval(a=-2, b=3), Box(), Box(lower=(-1, 0), upper=(2, 0.5)), Disk(),
         Disk(center=(1, -1), radius=0.5), Annulus(delta=0.1), Annulus(delta=0.6), Circle()]


def test_interval_level1_constant():
    assert build_rule(Interval(), 1).weights.sum() == pytest.approx(1.0, rel=1e-15)


def test_annulus_area():
    r = build_rule(Annulus(delta=0.1), 1)
    assert r.weights.sum() == pytest.approx(4 * math.pi * 0.1, rel=1e-12)


def test_circle_cos_squared():
    r = build_rule(Circle(), 2)
    th = np.arctan2(r.nodes[:, 1], r.nodes[:, 0])
    assert r.integrate(np.cos(th) ** 2) == pytest.approx(math.pi, abs=1e-14)


@pytest.mark.parametrize("host", HOSTS, ids=lambda h: type(h).__name__)
def test_rules_integrate_constants_and_stay_inside(host):
    for level in (1, 2, 3):
        r = build_rule(host, level)
        assert np.all(r.weights > 0)
        assert r.weights.sum() == pytest.approx(host.volume, rel=1e-12)
        assert np.all(host.contains(r.nodes, tol=1e-12))


def test_gauss_exactness_per_panel():
    r = build_rule(Interval(), 1)
    x = r.nodes[:, 0]
    for j in range(16):
        assert r.integrate(x ** j) == pytest.approx(1 / (j + 1), rel=1e-14)


def test_annulus_radial_nodes_symmetric_about_one():
    r = build_rule(Annulus(delta=0.2), 2, n_theta=8)
    radii = np.unique(np.round(np.linalg.norm(r.nodes, axis=1), 14))
    np.testing.assert_allclose(np.sort(2 - radii), radii, atol=1e-13)


def test_node_budget():
    with pytest.raises(MemoryError):
        build_rule(Box(), 9)


def test_lq_norm_examples():
    r = build_rule(Interval(), 2)
    assert lq_norm(r, lambda x: np.ones(len(x)), 2) == pytest.approx(1.0, rel=1e-15)
    assert lq_norm(r, lambda x: x[:, 0], 2) == pytest.approx(1 / math.sqrt(3), rel=1e-14)
    c = build_rule(Circle(), 2)
    assert lq_norm(c, lambda x: x[:, 1], math.inf) == pytest.approx(1.0, abs=1e-6)


def test_lq_norm_bad_q():
    r = build_rule(Interval(), 1)
    with pytest.raises(ValueError):
        lq_norm(r, lambda x: x[:, 0], 3)
    with pytest.raises(ValueError):
        lq_norm(r, np.ones(len(r)), math.inf)


def test_l2_l1_consistency():
    r = build_rule(Disk(), 2)
    f = lambda x: np.exp(x[:, 0]) * (1 + x[:, 1] ** 2)
    assert lq_norm(r, f, 2) == pytest.approx(math.sqrt(lq_norm(r, lambda x: f(x) ** 2, 1)), rel=1e-14)


def test_sup_norm_monotone_in_refinement():
    f = lambda x: np.sin(7.3 * x[:, 0]) * np.cos(3.1 * x[:, 1])
    vals = [lq_norm(build_rule(Box(), k), f, math.inf) for k in range(1, 5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    for host in (Interval(), Box(), Circle(), Disk()):
        g0, g1 = dense_grid(host, 1), dense_grid(host, 2)
        assert len(g0) >= 4 * len(build_rule(host, 1))
        assert {tuple(p) for p in np.round(g0, 12)} <= {tuple(p) for p in np.round(g1, 12)}


def test_refinement_convergence_monotone():
    # a non-smooth integrand keeps the differences above rounding level
    f = lambda x: np.abs(x[:, 0] - 1 / 3) ** 0.5
    vals = [lq_norm(build_rule(Interval(), k), f, 2) for k in range(1, 9)]
    diffs = np.abs(np.diff(vals))
    assert np.all(np.diff(diffs) < 0)


def test_refinement_convergence_smooth_until_rounding():
    fs = [lambda x: np.exp(3 * x[:, 0]), lambda x: np.cos(20 * x[:, 0]), lambda x: 1 / (1 + 25 * x[:, 0] ** 2)]
    for f in fs:
        vals = [lq_norm(build_rule(Interval(), k), f, 2) for k in range(3, 9)]
        diffs = np.abs(np.diff(vals))
        # monotone until the differences reach the rounding floor
        live = diffs[diffs > 1e-13 * abs(vals[-1])]
        assert np.all(np.diff(live) < 0)


def test_discrete_norm_examples():
    assert discrete_norm([3, 4], 2) == 5.0
    assert discrete_norm([1, 1, 1, 1], 2) == 2.0
    assert discrete_norm([-2, 1], math.inf) == 2.0
    assert discrete_norm([-2, 1], 1) == 3.0
    with pytest.raises(ValueError):
        discrete_norm([], 2)


@pytest.mark.parametrize("host", [Interval(), Box(), Disk(), Annulus(delta=0.2)], ids=lambda h: type(h).__name__)
def test_rule_pair_offsets(host):
    pair = build_rule_pair(host, 2, n_theta=32) if isinstance(host, Disk) else build_rule_pair(host, 2)
    X, Y = pair.x_rule, pair.y_rule
    assert X.weights.sum() == pytest.approx(host.volume, rel=1e-12)
    assert Y.weights.sum() == pytest.approx(host.volume, rel=1e-12)
    d = np.sqrt(((X.nodes[:, None] - Y.nodes[None]) ** 2).sum(-1))
    assert d.min() > 0
    lo, hi, _ = pair.near_region()
    assert np.all(lo < 0) and np.all(hi > 0)
