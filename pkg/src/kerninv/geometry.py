"""Host geometries, node sets and scattered-data quantities.

Domains (interval, box, disk, annulus) use Euclidean distance; the unit
circle uses arc length.  Fill distances are measured on dense candidate sets
and are therefore lower bounds of the true value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gamma

MAX_NODES = 100_000
DEFAULT_RESOLUTION = 100_000


class EmptyNodeSetError(ValueError):
    pass


class FocalPointError(ValueError):
    pass


# ---------------------------------------------------------------- domains


@dataclass(frozen=True)
class Domain:
    """Bounded domain with an interior cone condition (angle, radius)."""

    cone_angle: float
    cone_radius: float

    kind = "domain"

    def __post_init__(self):
        if not 0 < self.cone_angle < math.pi / 2:
            raise ValueError("cone angle must lie in (0, pi/2)")
        if not self.cone_radius > 0:
            raise ValueError("cone radius must be positive")

    @property
    def geodesic(self) -> bool:
        return False

    def distance(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.sqrt(((x - y) ** 2).sum(axis=-1))


@dataclass(frozen=True)
class Interval(Domain):
    a: float = 0.0
    b: float = 1.0
    cone_angle: float = math.pi / 4
    cone_radius: float = 0.5

    kind = "interval"
    dim = 1

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("interval requires a < b")
        super().__post_init__()

    @property
    def volume(self):
        return self.b - self.a

    @property
    def bounds(self):
        return np.array([[self.a, self.b]])

    def contains(self, x, tol=0.0):
        x = np.atleast_2d(x)[:, 0]
        return (x >= self.a - tol) & (x <= self.b + tol)

    def candidates(self, resolution):
        return np.linspace(self.a, self.b, int(resolution))[:, None]

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, size=(n, 1))

    def to_config(self):
        return {"geometry": "interval", "lower": [self.a], "upper": [self.b]}


@dataclass(frozen=True)
class Box(Domain):
    lower: tuple = (0.0, 0.0)
    upper: tuple = (1.0, 1.0)
    cone_angle: float = math.pi / 4
    cone_radius: float = 0.5

    kind = "box"
    dim = 2

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != 2 or len(self.upper) != 2:
            raise ValueError("box needs two lower and two upper bounds")
        if not all(u > lo for lo, u in zip(self.lower, self.upper)):
            raise ValueError("box requires lower < upper on every axis")
        super().__post_init__()

    @property
    def volume(self):
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @property
    def bounds(self):
        return np.array([self.lower, self.upper]).T

    def contains(self, x, tol=0.0):
        x = np.atleast_2d(x)
        lo, hi = np.array(self.lower), np.array(self.upper)
        return np.all((x >= lo - tol) & (x <= hi + tol), axis=1)

    def candidates(self, resolution):
        side = np.subtract(self.upper, self.lower)
        aspect = side / np.sqrt(np.prod(side))
        counts = np.maximum(2, np.ceil(np.sqrt(resolution) * aspect)).astype(int)
        g = [np.linspace(lo, hi, c) for lo, hi, c in zip(self.lower, self.upper, counts)]
        X, Y = np.meshgrid(*g, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def sample(self, rng, n):
        return rng.uniform(self.lower, self.upper, size=(n, 2))

    def to_config(self):
        return {"geometry": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Disk(Domain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    cone_angle: float = math.pi / 3
    cone_radius: float = 0.5

    kind = "disk"
    dim = 2

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")
        super().__post_init__()

    @property
    def inner(self):
        return 0.0

    @property
    def outer(self):
        return self.radius

    @property
    def volume(self):
        return math.pi * self.radius ** 2

    @property
    def bounds(self):
        c = np.array(self.center)
        return np.array([c - self.outer, c + self.outer]).T

    def contains(self, x, tol=0.0):
        r = np.linalg.norm(np.atleast_2d(x) - np.array(self.center), axis=1)
        return (r >= self.inner - tol) & (r <= self.outer + tol)

    def candidates(self, resolution):
        frac = self.volume / (2 * self.outer) ** 2
        n = int(np.ceil(np.sqrt(resolution / frac)))
        b = self.bounds
        g = [np.linspace(lo, hi, n) for lo, hi in b]
        X, Y = np.meshgrid(*g, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        pts = pts[self.contains(pts)]
        rim = []
        for rad in {self.inner, self.outer} - {0.0}:
            k = max(64, int(2 * math.pi * rad * n / (2 * self.outer)) * 2)
            th = np.linspace(0, 2 * math.pi, k, endpoint=False)
            rim.append(np.array(self.center) + rad * np.column_stack([np.cos(th), np.sin(th)]))
        return np.vstack([pts, *rim])

    def sample(self, rng, n):
        # area-uniform radii on [inner, outer]
        u = rng.uniform(self.inner ** 2, self.outer ** 2, size=n)
        th = rng.uniform(0, 2 * math.pi, size=n)
        r = np.sqrt(u)
        return np.array(self.center) + np.column_stack([r * np.cos(th), r * np.sin(th)])

    def to_config(self):
        return {"geometry": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Annulus(Disk):
    """Band ``1 - delta < |x| < 1 + delta`` around the unit circle."""

    delta: float = 0.1
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    cone_angle: float = math.pi / 4
    cone_radius: float = 0.1

    kind = "annulus"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("annulus requires 0 < delta < 1")
        super().__post_init__()

    @property
    def inner(self):
        return self.radius * (1 - self.delta)

    @property
    def outer(self):
        return self.radius * (1 + self.delta)

    @property
    def volume(self):
        return math.pi * (self.outer ** 2 - self.inner ** 2)

    def to_config(self):
        return {"geometry": "annulus", "delta": self.delta}


# --------------------------------------------------------------- manifolds


@dataclass(frozen=True)
class Manifold:
    ambient_dim: int
    intrinsic_dim: int

    @property
    def codimension(self):
        return self.ambient_dim - self.intrinsic_dim


@dataclass(frozen=True)
class Circle(Manifold):
    """Unit circle embedded in the plane (codimension one, focal point at 0)."""

    ambient_dim: int = 2
    intrinsic_dim: int = 1

    kind = "circle"
    dim = 2
    radius = 1.0
    focal_distance = 1.0
    volume = 2 * math.pi

    @property
    def geodesic(self) -> bool:
        return True

    @staticmethod
    def embed(theta):
        theta = np.asarray(theta, dtype=float)
        return np.column_stack([np.cos(theta), np.sin(theta)])

    @staticmethod
    def angles(x):
        x = np.atleast_2d(x)
        return np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * math.pi)

    def distance(self, x, y):
        d = np.abs(self.angles(x) - self.angles(y))
        return np.minimum(d, 2 * math.pi - d)

    def contains(self, x, tol=1e-12):
        return np.abs(np.linalg.norm(np.atleast_2d(x), axis=1) - 1.0) <= tol

    def candidates(self, resolution):
        return self.embed(np.linspace(0, 2 * math.pi, int(resolution), endpoint=False))

    def sample(self, rng, n):
        return self.embed(rng.uniform(0, 2 * math.pi, size=n))

    def to_config(self):
        return {"geometry": "circle"}


# ---------------------------------------------------------------- point sets


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite node set on a host domain or manifold."""

    points: np.ndarray
    host: object

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            pts = pts.reshape(0, getattr(self.host, "dim", 1))
        if pts.shape[0] == 1 and pts.shape[1] != self.host.dim and self.host.dim == 1:
            pts = pts.T
        if pts.shape[1] != self.host.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, host needs {self.host.dim}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if isinstance(self.host, Circle) and len(pts):
            off = np.abs(np.linalg.norm(pts, axis=1) - 1.0).max()
            if off > 1e-12:
                raise ValueError(f"points leave the circle by {off:.1e}")

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @cached_property
    def min_pair_distance(self) -> float:
        return 2.0 * separation_radius(self)

    @cached_property
    def h(self) -> float:
        return fill_distance(self)

    @cached_property
    def q(self) -> float:
        return separation_radius(self)

    @property
    def rho(self) -> float:
        return self.h / self.q

    def angles(self):
        return Circle.angles(self.points)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.dim)])
            for p in self.points:
                w.writerow([repr(float(v)) for v in p])

    @classmethod
    def from_csv(cls, path, host):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header != [f"x{i}" for i in range(len(header))]:
            raise ValueError(f"unexpected CSV header {header}")
        return cls(np.array([[float(v) for v in r] for r in body]).reshape(-1, len(header)), host)


def _circle_gap_distance(node_angles, query_angles):
    """Geodesic distance from each query angle to the nearest node angle."""
    a = np.sort(np.mod(node_angles, 2 * math.pi))
    ext = np.concatenate([a[-1:] - 2 * math.pi, a, a[:1] + 2 * math.pi])
    idx = np.searchsorted(ext, query_angles)
    return np.minimum(np.abs(query_angles - ext[idx - 1]), np.abs(ext[idx] - query_angles))


def fill_distance(X: PointSet, resolution: int = DEFAULT_RESOLUTION) -> float:
    """Max over a dense candidate set of the distance to the nearest node."""
    if len(X) == 0:
        raise EmptyNodeSetError("empty node set")
    if resolution < 1000:
        raise ValueError("fill distance needs at least 1e3 candidate points")
    host = X.host
    cand = host.candidates(resolution)
    if isinstance(host, Circle):
        dist = _circle_gap_distance(X.angles(), Circle.angles(cand))
    else:
        dist, _ = cKDTree(X.points).query(cand)
    return float(dist.max())


def separation_radius(X: PointSet) -> float:
    """Half the minimal pairwise distance (arc length on the circle)."""
    if len(X) < 2:
        raise ValueError("separation radius needs at least two nodes")
    if isinstance(X.host, Circle):
        a = np.sort(X.angles())
        gaps = np.diff(np.concatenate([a, a[:1] + 2 * math.pi]))
        return float(gaps.min() / 2)
    d, _ = cKDTree(X.points).query(X.points, k=2)
    return float(d[:, 1].min() / 2)


def mesh_ratio(X: PointSet, resolution: int = DEFAULT_RESOLUTION) -> float:
    return fill_distance(X, resolution) / separation_radius(X)


def uniform_refinement(host, level: int) -> PointSet:
    """Structured node set of refinement ``level`` on ``host``.

    interval: 2^k + 1 equispaced nodes; box: tensor grid of those; circle: 2^k
    equispaced angles from 0; disk and annulus: concentric rings with counts
    proportional to circumference, each ring rotated by half its own spacing on
    odd rings.
    """
    if level < 0:
        raise ValueError("level must be non-negative")
    n1 = 2 ** level + 1
    if isinstance(host, Interval):
        count = n1
    elif isinstance(host, Box):
        count = n1 ** 2
    elif isinstance(host, Circle):
        count = 2 ** level
    else:
        spacing = (host.outer - host.inner) / 2 ** level
        count = int(host.volume / spacing ** 2) + 1
    if count > MAX_NODES:
        raise MemoryError(f"level {level} needs {count} nodes (> {MAX_NODES})")

    if isinstance(host, Interval):
        pts = np.linspace(host.a, host.b, n1)[:, None]
    elif isinstance(host, Box):
        g = [np.linspace(lo, hi, n1) for lo, hi in zip(host.lower, host.upper)]
        X, Y = np.meshgrid(*g, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
    elif isinstance(host, Circle):
        pts = Circle.embed(2 * math.pi * np.arange(2 ** level) / 2 ** level)
    else:
        pts = _ring_layout(host, level)
    return PointSet(pts, host)


def _ring_layout(host: Disk, level: int) -> np.ndarray:
    spacing = (host.outer - host.inner) / 2 ** level
    radii = host.inner + spacing * np.arange(2 ** level + 1)
    rings = []
    for i, rad in enumerate(radii):
        if rad == 0.0:
            rings.append(np.zeros((1, 2)))
            continue
        n = max(3, int(round(2 * math.pi * rad / spacing)))
        th = 2 * math.pi * (np.arange(n) + 0.5 * (i % 2)) / n
        rings.append(rad * np.column_stack([np.cos(th), np.sin(th)]))
    return np.array(host.center) + np.vstack(rings)


def farthest_point_sample(host, n: int, candidates: int, seed: int) -> PointSet:
    """Greedy max-min selection of ``n`` nodes from a seeded random pool.

    The first node is the candidate farthest from the pool centroid.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n > candidates:
        raise ValueError(f"cannot select {n} nodes from {candidates} candidates")
    if candidates < 10 * n:
        raise ValueError("candidate pool must hold at least 10 n points")
    rng = np.random.default_rng(seed)
    pool = host.sample(rng, candidates)

    def dist_to(i):
        if isinstance(host, Circle):
            return host.distance(pool, pool[i : i + 1])
        return np.sqrt(((pool - pool[i]) ** 2).sum(axis=1))

    centroid = pool.mean(axis=0)
    first = int(np.argmax(((pool - centroid) ** 2).sum(axis=1)))
    chosen = [first]
    mind = dist_to(first)
    for _ in range(n - 1):
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, dist_to(nxt))
    return PointSet(pool[chosen], host)


def closest_point(x, M: Manifold = None) -> np.ndarray:
    """Closest point on the unit circle: ``x / |x|``; the origin is the focal point."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(r == 0):
        raise FocalPointError("focal point: the origin has no unique closest point")
    return x / r


def tubular_domain(M: Manifold, delta: float) -> Annulus:
    """Band of half-width ``delta`` around the circle."""
    if not isinstance(M, Circle):
        raise NotImplementedError("only the unit circle is supported")
    if delta >= M.focal_distance:
        raise FocalPointError("focal point inside band: delta must be < 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return Annulus(delta=delta, cone_radius=delta)


@dataclass(frozen=True)
class DomainConstants:
    c: float
    C: float


def domain_constants(dom) -> DomainConstants:
    """``c = pi^-1/2 (vol * Gamma(d/2+1))^(1/d)`` and ``C = (2 pi / theta)^(1/d) c``."""
    d = dom.dim
    c = math.pi ** -0.5 * (dom.volume * gamma(d / 2 + 1)) ** (1 / d)
    C = (2 * math.pi / dom.cone_angle) ** (1 / d) * c
    return DomainConstants(c, C)


def host_from_config(cfg: dict):
    """Build a host from the flat config mapping (see docs/config.md)."""
    kind = cfg["geometry"]
    cone = {k: float(cfg[k]) for k in ("cone_angle", "cone_radius") if k in cfg}
    if kind == "interval":
        lo = cfg.get("lower", [0.0])
        hi = cfg.get("upper", [1.0])
        return Interval(a=float(lo[0]), b=float(hi[0]), **cone)
    if kind == "box":
        return Box(lower=tuple(cfg.get("lower", (0.0, 0.0))), upper=tuple(cfg.get("upper", (1.0, 1.0))), **cone)
    if kind == "disk":
        return Disk(center=tuple(cfg.get("center", (0.0, 0.0))), radius=float(cfg.get("radius", 1.0)), **cone)
    if kind == "annulus":
        return Annulus(delta=float(cfg.get("delta", 0.1)), **cone)
    if kind == "circle":
        return Circle()
    raise ValueError(f"unknown geometry {kind!r}")
