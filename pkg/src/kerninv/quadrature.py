"""Quadrature rules and L_q / l_rho norms on the shipped geometries.

interval, box
    composite Gauss-Legendre, ``2^k`` panels per axis, 8 points per panel.
disk, annulus
    radial Gauss-Legendre (weighted by r, radial nodes symmetric about the
    mid-radius) times equispaced angles.
circle
    ``2^(k+4)`` equispaced trapezoid points.

:func:`build_rule_pair` returns two rules on the same host whose panel
breakpoints are offset by half a panel, plus the panel topology needed to
split double integrals into a far field and a near field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Annulus, Box, Circle, Disk, Interval

POINTS_PER_PANEL = 8
MAX_RULE_NODES = 10_000_000


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    host: object
    level: int
    options: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """Weighted sum over the nodes (leading axis); pairwise summation order."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def gauss_legendre_panels(breaks, npts=POINTS_PER_PANEL):
    """Composite Gauss-Legendre nodes, weights and panel index over ``breaks``."""
    x, w = np.polynomial.legendre.leggauss(npts)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1)).ravel()
    weights = (half * w).ravel()
    panel = np.repeat(np.arange(len(breaks) - 1), npts)
    return nodes, weights, panel


def _polar_counts(host, level, n_theta, radial_panels):
    if radial_panels is None:
        radial_panels = 2 ** level
    if n_theta is None:
        n_theta = 2 ** (level + 4)
    return int(radial_panels), int(n_theta)


def build_rule(host, level: int, *, n_theta: int | None = None, radial_panels: int | None = None,
               npts: int = POINTS_PER_PANEL) -> QuadratureRule:
    """Quadrature rule of refinement ``level`` on ``host``.

    ``n_theta`` and ``radial_panels`` override the polar layout of disk and
    annulus rules.
    """
    if level < 0:
        raise ValueError("rule level must be non-negative")
    opts = {"n_theta": n_theta, "radial_panels": radial_panels, "npts": npts}
    if isinstance(host, Interval):
        count = 2 ** level * npts
    elif isinstance(host, Box):
        count = (2 ** level * npts) ** 2
    elif isinstance(host, Circle):
        count = 2 ** (level + 4)
    else:
        rp, nt = _polar_counts(host, level, n_theta, radial_panels)
        count = rp * npts * nt
    if count > MAX_RULE_NODES:
        raise MemoryError(f"rule with {count} nodes exceeds {MAX_RULE_NODES}")

    if isinstance(host, Interval):
        x, w, _ = gauss_legendre_panels(np.linspace(host.a, host.b, 2 ** level + 1), npts)
        return QuadratureRule(x[:, None], w, host, level, opts)
    if isinstance(host, Box):
        axes = [gauss_legendre_panels(np.linspace(lo, hi, 2 ** level + 1), npts)
                for lo, hi in zip(host.lower, host.upper)]
        X, Y = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
        W = np.outer(axes[0][1], axes[1][1])
        return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel(), host, level, opts)
    if isinstance(host, Circle):
        n = 2 ** (level + 4)
        th = 2 * math.pi * np.arange(n) / n
        return QuadratureRule(Circle.embed(th), np.full(n, 2 * math.pi / n), host, level, opts)
    if isinstance(host, Disk):
        rp, nt = _polar_counts(host, level, n_theta, radial_panels)
        r, wr, _ = gauss_legendre_panels(np.linspace(host.inner, host.outer, rp + 1), npts)
        th = 2 * math.pi * np.arange(nt) / nt
        R, T = np.meshgrid(r, th, indexing="ij")
        W = np.outer(wr * r, np.full(nt, 2 * math.pi / nt))
        pts = np.array(host.center) + np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
        return QuadratureRule(pts, W.ravel(), host, level, opts)
    raise TypeError(f"no quadrature rule for {type(host).__name__}")


def dense_grid(host, level: int, options: dict | None = None) -> np.ndarray:
    """Nested evaluation grid for sup norms (at least 4x the rule's nodes)."""
    options = options or {}
    if isinstance(host, Interval):
        return np.linspace(host.a, host.b, 2 ** (level + 5) + 1)[:, None]
    if isinstance(host, Box):
        g = [np.linspace(lo, hi, 2 ** (level + 5) + 1) for lo, hi in zip(host.lower, host.upper)]
        X, Y = np.meshgrid(*g, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])
    if isinstance(host, Circle):
        return Circle.embed(2 * math.pi * np.arange(2 ** (level + 6)) / 2 ** (level + 6))
    if isinstance(host, Disk):
        rp, nt = _polar_counts(host, level, options.get("n_theta"), options.get("radial_panels"))
        r = np.linspace(host.inner, host.outer, rp * 32 + 1)
        th = 2 * math.pi * np.arange(4 * nt) / (4 * nt)
        R, T = np.meshgrid(r, th, indexing="ij")
        return np.array(host.center) + np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    raise TypeError(f"no dense grid for {type(host).__name__}")


def lq_norm(rule: QuadratureRule, f, q) -> float:
    """L_q norm of ``f`` (callable on points, or values at the rule nodes).

    ``q = inf`` is a maximum over :func:`dense_grid` and is a lower bound.
    """
    if q in (1, 2):
        vals = f(rule.nodes) if callable(f) else np.asarray(f, dtype=float)
        return float(rule.integrate(np.abs(vals) ** q) ** (1.0 / q))
    if q == math.inf or q == "inf":
        if not callable(f):
            raise ValueError("the sup norm needs an evaluable function")
        grid = dense_grid(rule.host, rule.level, rule.options)
        return float(np.max(np.abs(f(grid))))
    raise ValueError(f"unsupported q={q!r}; use 1, 2 or inf")


def discrete_norm(values, rho) -> float:
    """Plain l_rho norm of nodal values, without any 1/N normalisation."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty value vector")
    if rho == math.inf or rho == "inf":
        return float(np.abs(v).max())
    if rho < 1:
        raise ValueError("rho must be >= 1")
    return float((np.abs(v) ** rho).sum() ** (1.0 / rho))


# ----------------------------------------------------------- offset rule pairs


@dataclass(frozen=True, eq=False)
class _Axis:
    """One axis of an offset pair: nodes, weights, cell ids and near-field extents."""

    x: np.ndarray
    wx: np.ndarray
    cx: np.ndarray
    y: np.ndarray
    wy: np.ndarray
    cy: np.ndarray
    ext_lo: np.ndarray  # per x cell
    ext_hi: np.ndarray
    periodic_cells: int = 0  # number of cells on a periodic axis

    def near(self, ci, cj):
        if self.periodic_cells:
            d = np.mod(cj[None, :] - ci[:, None], self.periodic_cells)
            return (d == 0) | (d == self.periodic_cells - 1)
        diff = cj[None, :] - ci[:, None]
        return (diff == 0) | (diff == 1)


def _segment_axis(lo, hi, panels, npts, radial=False):
    w = (hi - lo) / panels
    bx = lo + w * np.arange(panels + 1)
    by = np.concatenate([[lo], lo + w * (np.arange(panels) + 0.5), [hi]])
    x, wx, cx = gauss_legendre_panels(bx, npts)
    y, wy, cy = gauss_legendre_panels(by, npts)
    if radial:
        wx, wy = wx * x, wy * y
    ext_lo = np.maximum(lo, bx[:-1] - w / 2)
    ext_hi = np.minimum(hi, bx[1:] + w / 2)
    return _Axis(x, wx, cx, y, wy, cy, ext_lo, ext_hi)


def _angle_axis(n):
    step = 2 * math.pi / n
    x = step * np.arange(n)
    y = step * (np.arange(n) + 0.5)
    return _Axis(x, np.full(n, step), np.arange(n), y, np.full(n, step), np.arange(n),
                 x - step, x + step, periodic_cells=n)


@dataclass(frozen=True, eq=False)
class RulePair:
    """Primary and half-panel-offset rules with the near-field topology.

    A pair of nodes is *near* when their panels overlap; near pairs are
    excluded from the far-field double sum and handled by the caller.
    """

    host: object
    level: int
    axes: tuple
    polar: bool

    @property
    def dim(self):
        return 2 if (self.polar or len(self.axes) == 2) else 1

    def _tensor(self, which):
        ax = self.axes
        if len(ax) == 1:
            a = ax[0]
            pts = getattr(a, which)[:, None]
            return pts, getattr(a, "w" + which), getattr(a, "c" + which)[:, None]
        a, b = ax
        P, Q = np.meshgrid(getattr(a, which), getattr(b, which), indexing="ij")
        W = np.outer(getattr(a, "w" + which), getattr(b, "w" + which)).ravel()
        CA, CB = np.meshgrid(getattr(a, "c" + which), getattr(b, "c" + which), indexing="ij")
        cells = np.column_stack([CA.ravel(), CB.ravel()])
        if self.polar:
            r, th = P.ravel(), Q.ravel()
            pts = np.array(self.host.center) + np.column_stack([r * np.cos(th), r * np.sin(th)])
        else:
            pts = np.column_stack([P.ravel(), Q.ravel()])
        return pts, W, cells

    @property
    def x_rule(self):
        pts, w, _ = self._tensor("x")
        return QuadratureRule(pts, w, self.host, self.level)

    @property
    def y_rule(self):
        pts, w, _ = self._tensor("y")
        return QuadratureRule(pts, w, self.host, self.level)

    def cells(self, which):
        return self._tensor(which)[2]

    def near_mask(self, cx, cy):
        mask = None
        for i, a in enumerate(self.axes):
            m = a.near(cx[:, i], cy[:, i])
            mask = m if mask is None else (mask & m)
        return mask

    def near_region(self):
        """Per primary node: offsets of the near-field rectangle and its frame.

        Returns ``(lo, hi, frame)`` with ``lo <= 0 <= hi`` per local axis and
        ``frame`` mapping local to Cartesian coordinates (columns).
        """
        pts, _, cells = self._tensor("x")
        if len(self.axes) == 1:
            a = self.axes[0]
            lo = a.ext_lo[cells[:, 0]] - pts[:, 0]
            hi = a.ext_hi[cells[:, 0]] - pts[:, 0]
            return lo[:, None], hi[:, None], np.ones((len(pts), 1, 1))
        a, b = self.axes
        if not self.polar:
            lo = np.column_stack([a.ext_lo[cells[:, 0]], b.ext_lo[cells[:, 1]]]) - pts
            hi = np.column_stack([a.ext_hi[cells[:, 0]], b.ext_hi[cells[:, 1]]]) - pts
            frame = np.broadcast_to(np.eye(2), (len(pts), 2, 2)).copy()
            return lo, hi, frame
        rel = pts - np.array(self.host.center)
        r = np.linalg.norm(rel, axis=1)
        th = np.arctan2(rel[:, 1], rel[:, 0])
        th_cell = b.x[cells[:, 1]]
        lo = np.column_stack([a.ext_lo[cells[:, 0]] - r, r * (b.ext_lo[cells[:, 1]] - th_cell)])
        hi = np.column_stack([a.ext_hi[cells[:, 0]] - r, r * (b.ext_hi[cells[:, 1]] - th_cell)])
        er = np.column_stack([np.cos(th), np.sin(th)])
        et = np.column_stack([-np.sin(th), np.cos(th)])
        frame = np.stack([er, et], axis=2)
        return lo, hi, frame


def build_rule_pair(host, level: int, *, n_theta: int | None = None,
                    radial_panels: int | None = None, npts: int = POINTS_PER_PANEL) -> RulePair:
    if isinstance(host, Interval):
        return RulePair(host, level, (_segment_axis(host.a, host.b, 2 ** level, npts),), False)
    if isinstance(host, Box):
        axes = tuple(_segment_axis(lo, hi, 2 ** level, npts) for lo, hi in zip(host.lower, host.upper))
        return RulePair(host, level, axes, False)
    if isinstance(host, Disk):
        rp, nt = _polar_counts(host, level, n_theta, radial_panels)
        return RulePair(host, level, (_segment_axis(host.inner, host.outer, rp, npts, radial=True),
                                      _angle_axis(nt)), True)
    raise TypeError(f"no offset rule pair for {type(host).__name__}")
