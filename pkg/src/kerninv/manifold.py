"""Restricted-kernel trial spaces on the unit circle and their band extensions.

Manifold norms are spectral (Fourier) norms on S^1; ambient norms live on
the annulus ``1 - delta < |x| < 1 + delta`` around it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .estimators import ConstantEstimate, _space_summary, pencil_max, sup_l2_dual
from .geometry import Annulus, Circle, closest_point, tubular_domain
from .kernels import TrialSpace
from .quadrature import build_rule, gauss_legendre_panels
from .sobolev import circle_sobolev_gram, h_norm_gram

logger = logging.getLogger(__name__)

DEFAULT_K = 10
DEFAULT_C_DELTA = 0.25
POINCARE_PANELS = 64


@dataclass(frozen=True, eq=False)
class BandExtension:
    """``u o R_cp``: a function on S^1 extended constantly along normals."""

    base: object
    delta: float
    host: Annulus

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.base(closest_point(x)), dtype=float)


def extend_constant_normal(u, delta: float) -> BandExtension:
    """Extension of ``u`` (callable on (n, 2) circle points) to the band of half-width delta."""
    return BandExtension(u, delta, tubular_domain(Circle(), delta))


def _band_rule(delta, n_theta, radial_panels=2, level=0):
    return build_rule(tubular_domain(Circle(), delta), level, n_theta=n_theta, radial_panels=radial_panels)


def equivalence_ratio_extension(u, delta: float, rule=None, n_theta: int = 1024) -> float:
    """``||u o R_cp||_{L_2(band)} / (sqrt(2 delta) ||u||_{L_2(S^1)})``.

    The band rule and the circle rule share their angles, so the ratio is 1
    up to rounding for any u they resolve.
    """
    ext = extend_constant_normal(u, delta)
    if rule is None:
        rule = _band_rule(delta, n_theta)
    nt = rule.options.get("n_theta") or n_theta
    theta = 2 * math.pi * np.arange(nt) / nt
    circ = np.sum(np.asarray(u(Circle.embed(theta)), dtype=float) ** 2) * 2 * math.pi / nt
    band = float(rule.integrate(ext(rule.nodes) ** 2))
    return math.sqrt(band) / math.sqrt(2 * delta * circ)


def coupled_delta(space: TrialSpace, c_delta: float = DEFAULT_C_DELTA) -> float:
    """Band half-width tied to the separation radius, ``delta = c_delta * q``."""
    return c_delta * space.nodes.q


def trial_equivalence_ratio(space: TrialSpace, coeffs, delta: float, beta: int, *,
                            n_theta: int | None = None, radial_panels: int = 2, K: int = DEFAULT_K) -> float:
    """``||u||_{H^beta(band)} / (delta^(1/2) ||u||_{H^beta(S^1)})`` for a trial function.

    The ambient norm uses kernel derivatives on the band; the manifold norm
    is spectral.  A zero function gives 1 by convention.
    """
    if not space.on_manifold:
        raise ValueError("trial_equivalence_ratio needs a space on the circle")
    tau = space.kernel.tau
    cap = math.floor(tau - 0.5 + 1e-12)
    if beta < 0 or beta > cap or not float(beta).is_integer():
        raise ValueError(f"beta={beta} outside the admissible integers 0 <= beta <= floor(tau - 1/2) = {cap}")
    if not 0 < delta < 1:
        raise ValueError("focal point inside band: need 0 < delta < 1")
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.any(coeffs):
        logger.info("zero trial function: equivalence ratio set to 1")
        return 1.0
    if n_theta is None:
        n_theta = max(1024, 64 * space.dim)
    rule = _band_rule(delta, n_theta, radial_panels)
    amb = h_norm_gram(space, beta, rule).quadratic_form(coeffs)
    man = circle_sobolev_gram(space, beta, K).quadratic_form(coeffs)
    return math.sqrt(amb) / (math.sqrt(delta) * math.sqrt(man))


def poincare_check(f, df, delta: float, p: float):
    """Both sides of ``|f(0)|^p <= 2^(p-1)/(2 delta) int|f|^p + 2^(p-1) delta^(p-1) int|f'|^p``.

    Integrals over ``[-delta, delta]`` use composite Gauss-Legendre.
    Returns ``(lhs, rhs, holds)`` with a relative slack of 1e-10.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    x, w, _ = gauss_legendre_panels(np.linspace(-delta, delta, POINCARE_PANELS + 1))
    lhs = abs(float(f(0.0))) ** p
    i_f = float(w @ np.abs(f(x)) ** p)
    i_df = float(w @ np.abs(df(x)) ** p)
    rhs = 2 ** (p - 1) / (2 * delta) * i_f + 2 ** (p - 1) * delta ** (p - 1) * i_df
    return lhs, rhs, lhs <= rhs * (1 + 1e-10)


def manifold_bernstein_admissible(beta: float, tau: float, d_m: int = 1) -> bool:
    return (d_m / 2 < beta <= tau + 1e-12) or (0 <= beta <= math.floor(tau - 0.5 + 1e-12) + 1e-12)


def manifold_bernstein_constant(space: TrialSpace, beta: float, K: int = DEFAULT_K) -> ConstantEstimate:
    """``sup ||u||_{H^beta(S^1)} / ||u||_{L_2(S^1)}`` (spectral-norm calibrated).

    ``constant`` is the value times ``h^beta``.
    """
    if not space.on_manifold:
        raise ValueError("needs a trial space on the circle")
    tau = space.kernel.tau
    if not manifold_bernstein_admissible(beta, tau):
        raise ValueError(
            f"beta={beta} is not admissible on the circle: need 1/2 < beta <= tau = {tau} "
            f"or 0 <= beta <= floor(tau - 1/2) = {math.floor(tau - 0.5)}"
        )
    info = _space_summary(space)
    if beta == 0:
        c = np.zeros(space.dim)
        c[0] = 1.0
        est = ConstantEstimate(1.0, 0.0, 0.0, diagnostics={"degenerate": True}, extremizer=c, **info)
    else:
        lam, vec, diag = pencil_max(circle_sobolev_gram(space, beta, K), circle_sobolev_gram(space, 0.0, K))
        est = ConstantEstimate(math.sqrt(lam), beta, 0.0, diagnostics=diag, extremizer=vec, **info)
    est.diagnostics.update({"calibration": "spectral", "tau": tau, "K": K})
    est.constant = est.value * info["h"] ** beta
    return est


def manifold_nikolskii_constant(space: TrialSpace, K: int = DEFAULT_K, eval_angles=None) -> ConstantEstimate:
    """``sup ||u||_inf / ||u||_{L_2(S^1)}`` by the dual closed form over ``eval_angles``.

    The default grid has ``2^(K+6)`` angles; the value is a lower bound.
    """
    if not space.on_manifold:
        raise ValueError("needs a trial space on the circle")
    if eval_angles is None:
        n = 2 ** (K + 6)
        eval_angles = 2 * math.pi * np.arange(n) / n
    grid = Circle.embed(np.asarray(eval_angles, dtype=float))
    value, arg, coeffs, diag = sup_l2_dual(space, circle_sobolev_gram(space, 0.0, K), grid)
    info = _space_summary(space)
    diag.update({"calibration": "spectral", "grid_points": len(grid), "tau": space.kernel.tau, "K": K})
    est = ConstantEstimate(value, math.inf, 0.0, diagnostics=diag, extremizer=coeffs, **info)
    est.constant = value * info["h"] ** 0.5
    return est
