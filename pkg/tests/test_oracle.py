import numpy as np
import pytest

from kerninv.estimators import nikolskii_constant
from kerninv.geometry import Interval
from kerninv.oracle import brute_sup_norm_ratio, dense_eig_reference, mc_rayleigh_bound, pairwise_scan
from kerninv.quadrature import build_rule

from conftest import interval_space


def spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


def test_mc_examples(pins):
    assert mc_rayleigh_bound([[3.0]], [[2.0]], 1000) == pytest.approx(1.5)
    v = mc_rayleigh_bound(np.diag([1.0, 4.0]), np.eye(2), 10_000)
    assert v <= 4.0 and v == pytest.approx(pins["mc_rayleigh_diag14"]["value"], rel=1e-12)
    with pytest.raises(ValueError):
        mc_rayleigh_bound(np.eye(2), np.eye(2), 10)


def test_mc_bound_property():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        A, B = spd(rng, n), spd(rng, n)
        assert mc_rayleigh_bound(A, B, 1000, seed=1) <= dense_eig_reference(A, B) * (1 + 1e-12)


def test_dense_reference_examples():
    assert dense_eig_reference(np.eye(4), np.eye(4)) == pytest.approx(1.0, rel=1e-14)
    assert dense_eig_reference(np.diag([1.0, 4.0]), np.eye(2)) == pytest.approx(4.0, rel=1e-14)
    rng = np.random.default_rng(3)
    A, B = spd(rng, 8), spd(rng, 8)
    from scipy.linalg import eigh
    assert dense_eig_reference(A, B) == pytest.approx(eigh(A, B, eigvals_only=True)[-1], rel=1e-12)
    with pytest.raises(ValueError):
        dense_eig_reference(np.eye(33), np.eye(33))
    with pytest.raises(ValueError):
        dense_eig_reference(np.eye(2), -np.eye(2))


def test_brute_sup_pin_and_lower_bound(pins):
    pin = pins["brute_sup_8node"]
    sp = interval_space(np.linspace(0, 1, 8))
    rule = build_rule(Interval(), pin["rule_level"])
    grid = np.linspace(0, 1, pin["grid"]).reshape(-1, 1)
    v = brute_sup_norm_ratio(sp, rule, pin["draws"], grid, pin["seed"], pin["refine_steps"])
    assert v == pytest.approx(pin["value"], rel=1e-10)
    assert v <= nikolskii_constant(sp, rule, grid).value * (1 + 1e-10)
    assert brute_sup_norm_ratio(sp, rule, 500, grid, seed=9) == brute_sup_norm_ratio(sp, rule, 500, grid, seed=9)


def test_pairwise_scan(pins):
    pts = np.linspace(0, 1, 33).reshape(-1, 1)
    h, q = pairwise_scan(pts, Interval(), np.linspace(0, 1, 1025).reshape(-1, 1))
    assert h == pytest.approx(pins["uniform33"]["h"]) and q == pytest.approx(pins["uniform33"]["q"])
