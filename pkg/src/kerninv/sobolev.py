"""Sobolev Gram matrices of kernel translates.

Integer orders come from analytic kernel derivatives at quadrature nodes,
fractional orders from a Gagliardo double sum over two half-panel-offset
rules, and circle norms from sampled Fourier coefficients.

A Gram is kept as a sum of *parts* rather than a formed matrix.  Integer and
spectral parts are square-root factors ``G = F^T F`` given by row blocks, so a
denominator Gram can be factored by QR without squaring its condition number
and a numerator can be transformed by congruence before it is formed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Circle
from .kernels import TrialSpace, multi_indices
from .quadrature import QuadratureRule, RulePair, build_rule_pair

logger = logging.getLogger(__name__)

#: entries per evaluated block (rows x basis functions)
CHUNK_ELEMS = 1 << 22
#: blocks are kept in memory below this many entries in total
CACHE_ELEMS = 1 << 24
#: per-grid node cap for double sums in two dimensions
MAX_PAIR_NODES_2D = 4_000
ALIAS_TOL = 1e-8
ORDER_TOL = 1e-12


@dataclass(frozen=True)
class FractionalSplit:
    s: float
    k: int
    t: float

    @classmethod
    def of(cls, s):
        s = float(s)
        if s < 0:
            raise ValueError("Sobolev order must be non-negative")
        k = math.floor(s + ORDER_TOL)
        t = s - k
        if abs(t) <= ORDER_TOL:
            t = 0.0
        return cls(s, k, t)


class FactorPart:
    """``G = sum_b F_b^T F_b`` with the row blocks produced on demand."""

    def __init__(self, n, make_blocks, label="", size=None):
        self.n = n
        self.label = label
        self._make = make_blocks
        self._cache = None
        if size is not None and size <= CACHE_ELEMS:
            self._cache = [np.ascontiguousarray(b) for b in make_blocks()]

    def blocks(self):
        return iter(self._cache) if self._cache is not None else self._make()

    def congruence(self, T=None):
        out = np.zeros((self.n, self.n) if T is None else (T.shape[1], T.shape[1]))
        for B in self.blocks():
            BT = B if T is None else B @ T
            out += BT.T @ BT
        return out

    def matrix(self):
        return self.congruence(None)


class GagliardoPart:
    """Fractional seminorm of order ``t`` applied to derivatives of order ``k``.

    Far pairs of the offset rules are summed directly.  Near pairs are
    replaced by the first-order Taylor model of the integrand over the union
    of neighbouring panels, which is exact for affine integrands.
    """

    def __init__(self, n, t, pair: RulePair, values_x, values_y, grads_x, label=""):
        self.n = n
        self.t = t
        self.pair = pair
        self.label = label
        self.A = values_x  # list over alpha of (Qx, n)
        self.B = values_y
        self.G = grads_x  # list over alpha of list over axes, or None
        X, self.wx, cx = pair._tensor("x")
        Y, self.wy, cy = pair._tensor("y")
        self.X, self.Y, self.cx, self.cy = X, Y, cx, cy
        self.dim = X.shape[1]
        self.M = _near_moments(pair, t) if grads_x is not None else None
        self.near_measure = self._near_measure()

    def _row_chunks(self):
        step = max(1, CHUNK_ELEMS // max(len(self.Y), 1))
        for i0 in range(0, len(self.X), step):
            yield slice(i0, min(i0 + step, len(self.X)))

    def _far_kernel(self, sl):
        diff = self.X[sl, None, :] - self.Y[None, :, :]
        r = np.sqrt((diff ** 2).sum(axis=-1))
        K = self.wx[sl, None] * self.wy[None, :] / r ** (self.dim + 2 * self.t)
        K[self.pair.near_mask(self.cx[sl], self.cy)] = 0.0
        return K

    def _near_measure(self):
        total = 0.0
        for sl in self._row_chunks():
            mask = self.pair.near_mask(self.cx[sl], self.cy)
            total += float((self.wx[sl, None] * self.wy[None, :] * mask).sum())
        return total

    def congruence(self, T=None):
        size = self.n if T is None else T.shape[1]
        out = np.zeros((size, size))
        tr = (lambda a: a) if T is None else (lambda a: a @ T)
        AT = [tr(a) for a in self.A]
        BT = [tr(b) for b in self.B]
        colsum = np.zeros(len(self.Y))
        cross = [np.zeros((size, size)) for _ in AT]
        for sl in self._row_chunks():
            K = self._far_kernel(sl)
            rs = K.sum(axis=1)
            colsum += K.sum(axis=0)
            for i, (a, b) in enumerate(zip(AT, BT)):
                ac = a[sl]
                out += (ac * rs[:, None]).T @ ac
                cross[i] += ac.T @ (K @ b)
        for b, c in zip(BT, cross):
            out += (b * colsum[:, None]).T @ b - c - c.T
        if self.G is not None:
            for grads in self.G:
                gt = [tr(g) for g in grads]
                for p in range(self.dim):
                    for r in range(self.dim):
                        coef = self.wx * self.M[:, p, r]
                        out += (gt[p] * coef[:, None]).T @ gt[r]
        return 0.5 * (out + out.T)

    def matrix(self):
        return self.congruence(None)


@dataclass(eq=False)
class SobolevGram:
    """Quadratic form of an H^s norm (``kind='full'``) or seminorm on a trial space."""

    order: float
    kind: str
    n: int
    parts: list
    metadata: dict = field(default_factory=dict)
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            G = sum((p.matrix() for p in self.parts), np.zeros((self.n, self.n)))
            self._matrix = 0.5 * (G + G.T)
        return self._matrix

    def congruence(self, T) -> np.ndarray:
        """``T^T G T`` assembled part by part (never forms G when T is given)."""
        C = sum((p.congruence(T) for p in self.parts), np.zeros((T.shape[1], T.shape[1])))
        return 0.5 * (C + C.T)

    @property
    def factored(self) -> bool:
        return all(isinstance(p, FactorPart) for p in self.parts)

    def row_blocks(self):
        """Zero-argument callable yielding the square-root row blocks of G."""
        if not self.factored:
            raise ValueError("Gram has parts without a square-root factor")
        def gen():
            for p in self.parts:
                yield from p.blocks()
        return gen

    def quadratic_form(self, c) -> float:
        """``c^T G c``; a factored Gram sums ``|B c|^2`` over its row blocks."""
        c = np.asarray(c, dtype=float)
        if not self.factored:
            return float(c @ self.matrix @ c)
        return float(sum(np.dot(B @ c, B @ c) for B in self.row_blocks()()))

    def __add__(self, other):
        if self.n != other.n:
            raise ValueError("Grams of different spaces")
        meta = {**self.metadata, **other.metadata}
        return SobolevGram(max(self.order, other.order), "full", self.n, self.parts + other.parts, meta)


def _chunks(n_rows, n_cols):
    step = max(1, CHUNK_ELEMS // max(n_cols, 1))
    return [slice(i, min(i + step, n_rows)) for i in range(0, n_rows, step)]


def integer_seminorm_gram(space: TrialSpace, k: int, rule: QuadratureRule) -> SobolevGram:
    """``sum_{|alpha|=k} int D^alpha phi_j D^alpha phi_l`` over the rule."""
    k = int(k)
    if k < 0:
        raise ValueError("order must be non-negative")
    base = getattr(space.kernel, "base", space.kernel)
    if k > base.max_derivative_order:
        raise ValueError(f"derivative order {k} exceeds the kernel's budget {base.max_derivative_order}")
    if isinstance(rule.host, Circle):
        raise ValueError("use circle_sobolev_gram for norms on the circle")
    alphas = multi_indices(space.kernel.d, k)
    sw = np.sqrt(rule.weights)
    nodes = rule.nodes

    def make():
        for sl in _chunks(len(nodes), space.dim * len(alphas)):
            for a in alphas:
                if k == 0:
                    yield sw[sl, None] * space.basis(nodes[sl])
                else:
                    yield sw[sl, None] * space.basis_derivative(a, nodes[sl])

    part = FactorPart(space.dim, make, label=f"W{k}", size=len(nodes) * space.dim * len(alphas))
    meta = {"rule_level": rule.level, "rule_nodes": len(nodes)}
    return SobolevGram(float(k), "semi", space.dim, [part], meta)


def _near_moments(pair: RulePair, t: float) -> np.ndarray:
    """``int_rect h h^T / |h|^(d+2t) dh`` over each primary node's near rectangle."""
    lo, hi, frame = pair.near_region()
    e = 2.0 - 2.0 * t
    if lo.shape[1] == 1:
        m = ((-lo[:, 0]) ** e + hi[:, 0] ** e) / e
        return m[:, None, None]
    x, w = np.polynomial.legendre.leggauss(24)
    corners = [(hi[:, 0], lo[:, 1]), (hi[:, 0], hi[:, 1]), (lo[:, 0], hi[:, 1]), (lo[:, 0], lo[:, 1])]
    edges = [((1.0, 0.0), hi[:, 0]), ((0.0, 1.0), hi[:, 1]), ((-1.0, 0.0), -lo[:, 0]), ((0.0, -1.0), -lo[:, 1])]
    M = np.zeros((len(lo), 2, 2))
    for i, (normal, c) in enumerate(edges):
        p, q = corners[i], corners[(i + 1) % 4]
        a0 = np.arctan2(p[1], p[0])
        span = np.mod(np.arctan2(q[1], q[0]) - a0, 2 * math.pi)
        phi = a0[:, None] + 0.5 * span[:, None] * (x + 1)[None, :]
        cph, sph = np.cos(phi), np.sin(phi)
        R = c[:, None] / (normal[0] * cph + normal[1] * sph)
        f = R ** e / e * (0.5 * span[:, None] * w[None, :])
        M[:, 0, 0] += (f * cph * cph).sum(axis=1)
        M[:, 0, 1] += (f * cph * sph).sum(axis=1)
        M[:, 1, 1] += (f * sph * sph).sum(axis=1)
    M[:, 1, 0] = M[:, 0, 1]
    # local (normal/tangential) frame to Cartesian
    return np.einsum("qij,qjk,qlk->qil", frame, M, frame)


def _check_pair_size(pair: RulePair):
    nx = len(pair._tensor("x")[1])
    if pair.dim == 2 and nx > MAX_PAIR_NODES_2D:
        raise ValueError(
            f"fractional double sum with {nx} nodes per grid exceeds {MAX_PAIR_NODES_2D}; "
            "lower the rule level or the angular resolution"
        )


def gagliardo_seminorm_gram(space: TrialSpace, k: int, t: float, pair: RulePair) -> SobolevGram:
    """Gagliardo seminorm of order t on the order-k derivatives of the basis."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"fractional part t={t} must lie in (0, 1)")
    if k + t > space.kernel.m + ORDER_TOL:
        raise ValueError(f"order {k + t} exceeds the kernel smoothness m={space.kernel.m}")
    _check_pair_size(pair)
    d = space.kernel.d
    base = getattr(space.kernel, "base", space.kernel)
    X = pair._tensor("x")[0]
    Y = pair._tensor("y")[0]
    alphas = multi_indices(d, k)

    def ev(a, pts):
        return space.basis(pts) if sum(a) == 0 else space.basis_derivative(a, pts)

    A = [ev(a, X) for a in alphas]
    B = [ev(a, Y) for a in alphas]
    grads = None
    if k + 1 <= base.max_derivative_order:
        grads = [[ev(tuple(ai + (i == j) for i, ai in enumerate(a)), X) for j in range(d)] for a in alphas]
    else:
        logger.warning("order-%d gradients unavailable; near field of the double sum dropped", k + 1)
    part = GagliardoPart(space.dim, t, pair, A, B, grads, label=f"G{k}+{t:g}")
    meta = {
        "pair_level": pair.level,
        "pair_nodes": len(X),
        "near_measure": part.near_measure,
        "near_correction": grads is not None,
    }
    return SobolevGram(k + t, "semi", space.dim, [part], meta)


def gagliardo_seminorm(f, pair: RulePair, t: float, grad=None) -> float:
    """Gagliardo seminorm of an evaluable function ``f`` (values on an (n, d) array).

    ``grad`` (returning (n, d)) enables the near-field correction.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"fractional part t={t} must lie in (0, 1)")
    X = pair._tensor("x")[0]
    Y = pair._tensor("y")[0]
    A = [np.asarray(f(X), dtype=float).reshape(-1, 1)]
    B = [np.asarray(f(Y), dtype=float).reshape(-1, 1)]
    G = None
    if grad is not None:
        g = np.asarray(grad(X), dtype=float).reshape(len(X), -1)
        G = [[g[:, [j]] for j in range(g.shape[1])]]
    part = GagliardoPart(1, t, pair, A, B, G)
    return math.sqrt(max(part.matrix()[0, 0], 0.0))


def h_norm_gram(space: TrialSpace, s: float, rule: QuadratureRule, pair: RulePair | None = None) -> SobolevGram:
    """Full H^s norm: integer seminorms up to floor(s) plus the fractional term."""
    split = FractionalSplit.of(s)
    if split.s > space.kernel.m + ORDER_TOL:
        raise ValueError(f"order s={s} exceeds the kernel smoothness m={space.kernel.m}")
    parts, meta = [], {"rule_level": rule.level, "rule_nodes": len(rule)}
    for j in range(split.k + 1):
        parts += integer_seminorm_gram(space, j, rule).parts
    if split.t > 0:
        if pair is None:
            opts = {k: v for k, v in rule.options.items() if v is not None}
            pair = build_rule_pair(rule.host, rule.level, **opts)
        g = gagliardo_seminorm_gram(space, split.k, split.t, pair)
        parts += g.parts
        meta.update(g.metadata)
    return SobolevGram(split.s, "full", space.dim, parts, meta)


# ------------------------------------------------------------------ circle


def _spectral_weights(n, beta):
    k = np.fft.rfftfreq(n, d=1.0 / n)
    return (1.0 + k ** 2) ** beta


def _alias_check(coef_sq, n):
    """Energy fraction in the top quarter of the resolved band, per column."""
    k = np.arange(coef_sq.shape[0])
    mult = np.where((k == 0) | (k == n // 2), 1.0, 2.0)[:, None]
    energy = coef_sq * mult
    total = energy.sum(axis=0)
    top = energy[k >= 3 * n // 8].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, top / np.where(total > 0, total, 1.0), 0.0)
    if np.any(frac > ALIAS_TOL):
        raise ValueError(
            f"under-resolved: {frac.max():.2e} of the spectral energy sits in the top quarter "
            f"of {n} samples"
        )


def circle_spectral_norm(samples, beta: float) -> float:
    """``sqrt(2 pi sum_k (1+k^2)^beta |u_k|^2)`` from equispaced samples on [0, 2 pi)."""
    u = np.asarray(samples, dtype=float)
    n = len(u)
    if n < 64 or n & (n - 1):
        raise ValueError("sample count must be a power of two >= 64")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    c = np.fft.rfft(u) / n
    sq = np.abs(c[:, None]) ** 2
    _alias_check(sq, n)
    k = np.arange(len(c))
    mult = np.where((k == 0) | (k == n // 2), 1.0, 2.0)
    return float(math.sqrt(2 * math.pi * (mult * _spectral_weights(n, beta) * sq[:, 0]).sum()))


def circle_sobolev_gram(space: TrialSpace, beta: float, K: int = 12) -> SobolevGram:
    """Spectral H^beta Gram of restricted-kernel translates on the unit circle."""
    if not space.on_manifold:
        raise ValueError("circle_sobolev_gram needs a trial space on the circle")
    tau = getattr(space.kernel, "tau", None)
    if tau is not None and beta > tau + ORDER_TOL:
        raise ValueError(f"beta={beta} exceeds tau={tau}")
    n = 2 ** int(K)
    if n < 64:
        raise ValueError("K must be at least 6")
    theta = 2 * math.pi * np.arange(n) / n
    S = space.basis(Circle.embed(theta))
    C = np.fft.rfft(S, axis=0) / n
    _alias_check(np.abs(C) ** 2, n)
    k = np.arange(C.shape[0])
    mult = np.where((k == 0) | (k == n // 2), 1.0, 2.0)
    scale = np.sqrt(2 * math.pi * mult * _spectral_weights(n, beta))[:, None]
    F = np.vstack([scale * C.real, scale[1:-1] * C.imag[1:-1]])
    part = FactorPart(space.dim, lambda: iter([F]), label=f"S{beta:g}", size=F.size)
    return SobolevGram(float(beta), "full", space.dim, [part], {"samples": n})
