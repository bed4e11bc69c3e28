"""Extremal constants of inverse inequalities over a trial space.

Every "for all trial functions" constant is the square root of the largest
eigenvalue of a pencil ``(G_num, G_den)`` of quadratic forms on coefficient
vectors.  The denominator is factored once (by QR of its square-root factor
when one exists), the numerator is transformed by congruence, and the top
eigenpair is found by power iteration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .kernels import TrialSpace, gram_matrix, multi_indices
from .linalg import jittered_cholesky, row_factor, top_eigenpair
from .quadrature import QuadratureRule, dense_grid, discrete_norm, lq_norm
from .sobolev import FactorPart, FractionalSplit, SobolevGram, h_norm_gram, integer_seminorm_gram, gagliardo_seminorm_gram

logger = logging.getLogger(__name__)

EIG_TOL = 1e-10
EIG_MAX_ITER = 10_000


@dataclass
class ConstantEstimate:
    value: float
    s_upper: float
    s_lower: float
    N: int
    h: float
    q: float
    rho: float
    m: float
    constant: float = float("nan")
    diagnostics: dict = field(default_factory=dict)
    extremizer: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {"N": self.N, "h": self.h, "q": self.q, "rho": self.rho,
                "constant": self.constant, "raw_value": self.value}


@dataclass
class FitResult:
    slope: float
    stderr: float
    intercept: float


@dataclass
class ScalingReport:
    kind: str
    scale_name: str
    levels: list
    estimates: list
    predicted_exponent: float
    tolerance: tuple
    fit: FitResult | None = None
    complete: bool = True
    error: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        if not self.complete or self.fit is None:
            return False
        lo, hi = self.tolerance
        return lo <= self.fit.slope <= hi


def _space_summary(space: TrialSpace) -> dict:
    X = space.nodes
    if len(X) >= 2:
        q, h = X.q, X.h
    else:
        q, h = float("nan"), X.h
    return {"N": space.dim, "h": h, "q": q, "rho": h / q if len(X) >= 2 else float("nan"),
            "m": float(space.kernel.m)}


def pencil_max(num: SobolevGram, den: SobolevGram | np.ndarray, tol=EIG_TOL, max_iter=EIG_MAX_ITER):
    """``(lambda_max, extremizer, diagnostics)`` of the pencil ``(num, den)``.

    ``den`` may be a Gram with square-root factor (QR path) or an explicit
    matrix (Cholesky path).  The extremizer is normalised to unit
    denominator norm.
    """
    if isinstance(den, SobolevGram) and den.factored:
        rf = row_factor(den.row_blocks())
        T = rf.transform()
        diag = {"jitter": rf.jitter, "rcond": rf.rcond, "reduction": "qr"}
    else:
        D = den.matrix if isinstance(den, SobolevGram) else np.asarray(den, dtype=float)
        L, lam = jittered_cholesky(D)
        T = sla.solve_triangular(L, np.eye(len(L)), lower=True).T
        diag = {"jitter": lam, "reduction": "cholesky"}
    C = num.congruence(T) if isinstance(num, SobolevGram) else T.T @ np.asarray(num) @ T
    C = 0.5 * (C + C.T)
    eig = top_eigenpair(C, tol=tol, max_iter=max_iter)
    diag.update({"iterations": eig.iterations, "eig_method": eig.method, "converged": eig.converged})
    return max(eig.value, 0.0), T @ eig.vector, diag


def ratio_constant(space: TrialSpace, s_upper: float, s_lower: float, rule: QuadratureRule,
                   pair=None) -> ConstantEstimate:
    """``sup_u ||u||_{H^s_upper} / ||u||_{H^s_lower}`` over the trial space."""
    if s_lower < 0 or s_upper < s_lower:
        raise ValueError("need 0 <= s_lower <= s_upper")
    if s_upper > space.kernel.m + 1e-12:
        raise ValueError(f"s_upper={s_upper} exceeds m={space.kernel.m}")
    info = _space_summary(space)
    if s_upper == s_lower:
        c = np.zeros(space.dim)
        c[0] = 1.0
        return ConstantEstimate(1.0, s_upper, s_lower, diagnostics={"degenerate": True}, extremizer=c, **info)
    num = h_norm_gram(space, s_upper, rule, pair)
    den = h_norm_gram(space, s_lower, rule, pair)
    lam, vec, diag = pencil_max(num, den)
    diag.update(num.metadata)
    return ConstantEstimate(math.sqrt(lam), s_upper, s_lower, diagnostics=diag, extremizer=vec, **info)


def bernstein_admissible(s: float, m: float, d: int) -> bool:
    return (d / 2 < s <= m + 1e-12) or (0 <= s <= math.floor(m + 1e-12) + 1e-12)


def bernstein_constant(space: TrialSpace, s: float, rule: QuadratureRule, pair=None) -> ConstantEstimate:
    """``sup ||u||_{H^s} / ||u||_{L_2}``; ``constant`` is the value times ``q^s``."""
    m, d = space.kernel.m, space.kernel.d
    if not bernstein_admissible(s, m, d):
        raise ValueError(
            f"s={s} is not admissible for the Bernstein inequality: need d/2 < s <= m "
            f"({d / 2} < s <= {m}) or 0 <= s <= floor(m) = {math.floor(m)}"
        )
    est = ratio_constant(space, s, 0.0, rule, pair)
    est.constant = est.value * est.q ** s if space.dim > 1 else est.value
    return est


def default_eval_grid(space: TrialSpace, factor: int = 8) -> np.ndarray:
    """Nested dense grid with at least ``factor`` points per node."""
    level = 0
    while True:
        g = dense_grid(space.geometry, level)
        if len(g) >= factor * space.dim:
            return g
        level += 1


def _mass_gram(space: TrialSpace, rule) -> SobolevGram:
    if space.on_manifold:
        from .sobolev import circle_sobolev_gram
        return circle_sobolev_gram(space, 0.0, rule if isinstance(rule, int) else 12)
    return integer_seminorm_gram(space, 0, rule)


def sup_l2_dual(space: TrialSpace, mass: SobolevGram, grid: np.ndarray):
    """``max_y sqrt(k_y^T M^{-1} k_y)`` over ``grid`` with its maximiser."""
    rf = row_factor(mass.row_blocks())
    best, arg, whitened = -1.0, 0, None
    step = max(1, (1 << 22) // max(space.dim, 1))
    for i0 in range(0, len(grid), step):
        W = rf.whiten(space.basis(grid[i0:i0 + step]))
        nrm = np.einsum("ij,ij->i", W, W)
        j = int(np.argmax(nrm))
        if nrm[j] > best:
            best, arg, whitened = float(nrm[j]), i0 + j, W[j]
    coeffs = sla.solve_triangular(rf.R, whitened / math.sqrt(best), lower=False)
    return math.sqrt(best), arg, coeffs, {"jitter": rf.jitter, "rcond": rf.rcond}


def nikolskii_constant(space: TrialSpace, rule: QuadratureRule, eval_grid=None) -> ConstantEstimate:
    """``sup_u ||u||_inf / ||u||_{L_2}`` via the dual closed form on ``eval_grid``.

    The sup norm is a grid maximum, so the value is a lower bound that is
    nondecreasing under grid refinement.
    """
    grid = default_eval_grid(space) if eval_grid is None else np.atleast_2d(np.asarray(eval_grid, dtype=float))
    if grid.shape[1] != space.kernel.d:
        grid = grid.reshape(-1, space.kernel.d)
    value, arg, coeffs, diag = sup_l2_dual(space, _mass_gram(space, rule), grid)
    diag.update({"grid_points": len(grid), "argmax": grid[arg].tolist()})
    info = _space_summary(space)
    d = space.kernel.d
    est = ConstantEstimate(value, math.inf, 0.0, diagnostics=diag, extremizer=coeffs, **info)
    est.constant = value * info["h"] ** (d / 2)
    return est


def _ell2_gram(space: TrialSpace) -> SobolevGram:
    """``c^T Phi^2 c = ||u||^2_{l_2(X)}``, kept as the factor ``Phi``."""
    Phi = gram_matrix(space)
    return SobolevGram(0.0, "full", space.dim, [FactorPart(space.dim, lambda: iter([Phi]), "l2", Phi.size)])


def _seminorm_gram(space, s, rule, pair=None) -> SobolevGram:
    split = FractionalSplit.of(s)
    if split.t == 0:
        return integer_seminorm_gram(space, split.k, rule)
    if pair is None:
        from .quadrature import build_rule_pair
        pair = build_rule_pair(rule.host, rule.level)
    return gagliardo_seminorm_gram(space, split.k, split.t, pair)


def stability_constant(space: TrialSpace, s: float, rule: QuadratureRule, pair=None) -> ConstantEstimate:
    """``sup |u|_{H^s} / ||u||_{l_2(X)}``.

    ``constant`` divides out ``(1 + rho^(m - d/2)) h^(d/2 - s)``.
    """
    m, d = space.kernel.m, space.kernel.d
    if s < 0 or s > math.floor(m + 1e-12):
        raise ValueError(f"stability needs 0 <= s <= floor(m) = {math.floor(m)}")
    num = _seminorm_gram(space, s, rule, pair)
    lam, vec, diag = pencil_max(num, _ell2_gram(space))
    info = _space_summary(space)
    est = ConstantEstimate(math.sqrt(lam), s, 0.0, diagnostics=diag, extremizer=vec, **info)
    if space.dim > 1:
        est.constant = est.value / ((1 + info["rho"] ** (m - d / 2)) * info["h"] ** (d / 2 - s))
    return est


def native_inverse_constant(space: TrialSpace, rule: QuadratureRule, pair=None) -> ConstantEstimate:
    """``sup ||u||_{H^m} / ||u||_{l_2(X)}``; ``constant`` is the value times ``q^(m - d/2)``."""
    m, d = space.kernel.m, space.kernel.d
    num = h_norm_gram(space, m, rule, pair)
    lam, vec, diag = pencil_max(num, _ell2_gram(space))
    info = _space_summary(space)
    est = ConstantEstimate(math.sqrt(lam), m, 0.0, diagnostics=diag, extremizer=vec, **info)
    if space.dim > 1:
        est.constant = est.value * info["q"] ** (m - d / 2)
    return est


# ----------------------------------------------------------- residual checks


def sampling_order(m: float, d: int, p: float, q: float) -> int:
    """Largest admissible derivative order ``l`` of the sampling inequality."""
    excess = max(1.0 / p - 1.0 / q, 0.0)
    l0 = m - d * excess
    m_nat = float(m).is_integer() and m >= 1
    l0_nat = abs(l0 - round(l0)) < 1e-12 and round(l0) >= 0
    if m_nat and ((p < q < math.inf and l0_nat) or (p == 1 and q == math.inf) or p == q):
        return int(round(l0))
    return math.ceil(l0 - 1e-12) - 1


def _as_q(q):
    return math.inf if q in ("inf", math.inf) else float(q)


def seminorm_wq(space: TrialSpace, coeffs, s: int, q, rule: QuadratureRule) -> float:
    """``|u|_{W_q^s}`` for integer s, from derivatives of u at the rule nodes (or a dense grid)."""
    q = _as_q(q)
    coeffs = np.asarray(coeffs, dtype=float)
    parts = []
    for a in multi_indices(space.kernel.d, s):
        if s == 0:
            f = lambda x: space.basis(x) @ coeffs
        else:
            f = lambda x, a=a: space.basis_derivative(a, x) @ coeffs
        parts.append(lq_norm(rule, f, q))
    if q == math.inf:
        return max(parts)
    return float(sum(v ** q for v in parts) ** (1.0 / q))


def _full_norm(space, coeffs, s, rule, pair=None):
    G = h_norm_gram(space, s, rule, pair)
    return math.sqrt(max(G.quadratic_form(coeffs), 0.0))


def sampling_residual(space: TrialSpace, coeffs, s: float, q_norm, rule: QuadratureRule,
                      p: float = 2, rho_norm: float = 2, *, grams=None) -> dict:
    """Empirical constant of the sampling inequality for one trial function.

    Returns ``residual = |u|_{W_q^s} / (h^(m-s-d(1/p-1/q)_+) ||u||_{W_p^m} + h^(d/gamma-s) ||u||_{l_rho})``
    together with the order ``l``, ``gamma``, and the two special forms (the
    L_2 form and, for ``q = inf`` with ``s = 0``, the sup-norm form).
    A zero function gives residual 0 by convention.
    """
    if p != 2:
        raise ValueError("only p = 2 source norms are supported")
    q = _as_q(q_norm)
    m, d = space.kernel.m, space.kernel.d
    l = sampling_order(m, d, p, q)
    if s < 0 or s > l + 1e-12:
        raise ValueError(f"s={s} exceeds the admissible sampling order l={l} (l0 = m - d(1/p-1/q)_+)")
    if not float(s).is_integer():
        raise ValueError("sampling residuals are evaluated for integer s")
    s = int(s)
    coeffs = np.asarray(coeffs, dtype=float)
    gamma = max(p, q, rho_norm)
    h = space.nodes.h
    nodal = gram_matrix(space) @ coeffs
    ell = discrete_norm(nodal, rho_norm)
    if grams is not None and q == 2:
        lhs = math.sqrt(max(grams[s].quadratic_form(coeffs), 0.0))
        hm = math.sqrt(max(grams["m"].quadratic_form(coeffs), 0.0))
    else:
        lhs = seminorm_wq(space, coeffs, s, q, rule)
        hm = _full_norm(space, coeffs, m, rule)
    excess = max(1.0 / p - 1.0 / q, 0.0)
    rhs = h ** (m - s - d * excess) * hm + h ** (d / gamma - s) * ell
    out = {"l": l, "gamma": gamma, "lhs": lhs, "rhs": rhs, "h": h}
    if rhs == 0.0:
        logger.info("zero trial function: residual set to 0")
        out["residual"] = 0.0
        return out
    out["residual"] = lhs / rhs
    if q == 2 and rho_norm == 2:
        out["l2_form"] = lhs / (h ** (m - s) * hm + h ** (d / 2 - s) * ell)
    if q == math.inf and s == 0:
        out["sup_form"] = lhs / (h ** (m - d / 2) * hm + ell)
    return out


def cross_term_residual(space: TrialSpace, coeffs, s: int, t: float, q_norm, rule: QuadratureRule) -> float:
    """``|u|_{W_q^s} / (q^(t-s-d(1/2-1/q)_+) ||u||_{H^t} + q^(-s-d(1/2-1/q)_+) ||u||_{L_2})``."""
    q = _as_q(q_norm)
    d = space.kernel.d
    sep = space.nodes.q
    excess = max(0.5 - 1.0 / q, 0.0)
    lhs = seminorm_wq(space, coeffs, int(s), q, rule)
    rhs = (sep ** (t - s - d * excess) * _full_norm(space, coeffs, t, rule)
           + sep ** (-s - d * excess) * _full_norm(space, coeffs, 0.0, rule))
    return 0.0 if rhs == 0 else lhs / rhs


def gn_interpolation_check(space: TrialSpace, coeffs, t: float, alpha: float, m_order: float,
                           rule: QuadratureRule, *, grams=None) -> float:
    """``||u||_{H^alpha} / (||u||_{H^t}^(1-theta) ||u||_{H^m_order}^theta)`` with
    ``theta = (alpha - t) / (m_order - t)``."""
    if not t < alpha < m_order:
        raise ValueError("need t < alpha < m_order so that theta lies in (0, 1)")
    if m_order > space.kernel.m + 1e-12:
        raise ValueError(f"m_order={m_order} exceeds m={space.kernel.m}")
    theta = (alpha - t) / (m_order - t)
    coeffs = np.asarray(coeffs, dtype=float)
    if grams is None:
        grams = {o: h_norm_gram(space, o, rule) for o in (t, alpha, m_order)}
    n = {o: math.sqrt(max(grams[o].quadratic_form(coeffs), 0.0)) for o in (t, alpha, m_order)}
    den = n[t] ** (1 - theta) * n[m_order] ** theta
    return 0.0 if den == 0 else n[alpha] / den


def fit_exponent(pairs) -> FitResult:
    """OLS slope of log(value) against log(scale) with its standard error."""
    pairs = list(pairs)
    if len(pairs) < 4:
        raise ValueError(f"need at least 4 (scale, value) pairs, got {len(pairs)}")
    x = np.log([float(a) for a, _ in pairs])
    y = np.array([float(b) for _, b in pairs])
    if np.any(y <= 0):
        raise ValueError("values must be positive")
    dx = np.diff(x)
    if not (np.all(dx > 0) or np.all(dx < 0)):
        raise ValueError("scales must be strictly monotone")
    y = np.log(y)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return FitResult(float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0))), float(coef[1]))
