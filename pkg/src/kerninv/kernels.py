"""Matérn (Sobolev-reproducing) kernels, restricted kernels and trial spaces.

Only half-integer smoothness ``nu = m - d/2`` is supported, where the radial
profile is a polynomial times ``exp(-r)``:

====  ==========================================
nu    profile
====  ==========================================
1/2   ``exp(-r)``
3/2   ``(1 + r) exp(-r)``
5/2   ``(1 + r + r^2/3) exp(-r)``
7/2   ``(1 + r + 2 r^2/5 + r^3/15) exp(-r)``
====  ==========================================

The Fourier transform of the profile on R^d decays like ``(1 + |xi|^2)^(-m)``,
so the native space is H^m(R^d) with an equivalent norm.  The lengthscale is
fixed at one.

Cartesian derivatives are obtained by writing the kernel as ``g(|z|^2 / 2)``.
Then ``g^(n)(s) = f_n(r)`` with ``f_n = (r^-1 d/dr)^n phi``, which for these
profiles is a Laurent polynomial in ``r`` times ``exp(-r)``; the derivative of a
function of a quadratic form only involves pairings of the differentiation
directions (Hermite structure), so every ``D^alpha`` is an explicit finite sum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
from scipy import linalg as sla

from .geometry import Circle, Manifold, PointSet
from .linalg import GramConditioningError, jittered_cholesky

logger = logging.getLogger(__name__)

_PROFILES = {
    Fraction(1, 2): (Fraction(1),),
    Fraction(3, 2): (Fraction(1), Fraction(1)),
    Fraction(5, 2): (Fraction(1), Fraction(1), Fraction(1, 3)),
    Fraction(7, 2): (Fraction(1), Fraction(1), Fraction(2, 5), Fraction(1, 15)),
}

SUPPORTED_M = {1: (1.0, 2.0, 3.0, 4.0), 2: (1.5, 2.5, 3.5, 4.5)}

#: nodes closer than this (lengthscale units) are treated as coalescing
COALESCE_TOL = 1e-12


class CoalescingNodesError(ValueError):
    pass


@lru_cache(maxsize=None)
def _laurent_chain(nu: Fraction, depth: int) -> tuple[dict[int, Fraction], ...]:
    """Laurent coefficients of ``f_n = (r^-1 d/dr)^n phi`` for n = 0..depth.

    Each entry maps exponent e to the coefficient of ``r^e exp(-r)``.
    """
    f = {j: c for j, c in enumerate(_PROFILES[nu]) if c != 0}
    chain = [f]
    for _ in range(depth):
        g: dict[int, Fraction] = {}
        for e, c in f.items():
            # d/dr (c r^e e^-r) = c e r^(e-1) e^-r - c r^e e^-r, then divide by r
            if e != 0:
                g[e - 2] = g.get(e - 2, 0) + c * e
            g[e - 1] = g.get(e - 1, 0) - c
        f = {e: c for e, c in g.items() if c != 0}
        chain.append(f)
    return tuple(chain)


def _pairings(a: int, j: int) -> int:
    # ways to pick j disjoint pairs out of a labelled directions
    return math.factorial(a) // (2 ** j * math.factorial(j) * math.factorial(a - 2 * j))


def _double_factorial(n: int) -> int:
    return 1 if n <= 0 else n * _double_factorial(n - 2)


def _angular_mean(powers: tuple[int, ...]) -> float:
    """Mean of ``prod(u_i^p_i)`` over unit vectors u (symmetric limit at r=0)."""
    if any(p % 2 for p in powers):
        return 0.0
    if len(powers) == 1:
        return 1.0
    p1, p2 = powers
    return _double_factorial(p1 - 1) * _double_factorial(p2 - 1) / _double_factorial(p1 + p2)


@lru_cache(maxsize=None)
def _derivative_terms(nu: Fraction, alpha: tuple[int, ...]):
    """Terms ``(powers, exponent, coefficient)`` of D^alpha phi(|z|).

    Each term reads ``coef * prod(z_i^powers_i) * r^exponent * exp(-r)``.
    """
    order = sum(alpha)
    chain = _laurent_chain(nu, order)
    terms: dict[tuple[tuple[int, ...], int], Fraction] = {}
    ranges = [range(a // 2 + 1) for a in alpha]
    for js in product(*ranges):
        weight = 1
        for a, j in zip(alpha, js):
            weight *= _pairings(a, j)
        powers = tuple(a - 2 * j for a, j in zip(alpha, js))
        n = sum(a - j for a, j in zip(alpha, js))
        for e, c in chain[n].items():
            key = (powers, e)
            terms[key] = terms.get(key, 0) + weight * c
    return tuple((p, e, float(c)) for (p, e), c in terms.items() if c != 0)


@dataclass(frozen=True)
class MaternKernel:
    """Half-integer Matérn kernel with smoothness ``m`` on R^d.

    ``amplitude`` scales the kernel; every extremal ratio is invariant under it.
    """

    m: float
    d: int
    amplitude: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"ambient dimension d={self.d} not supported (1 or 2)")
        nu = Fraction(self.m).limit_denominator(8) - Fraction(self.d, 2)
        if nu not in _PROFILES:
            raise ValueError(
                f"m={self.m} with d={self.d} gives nu={float(nu)}; supported m for "
                f"d={self.d}: {SUPPORTED_M[self.d]}"
            )
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @property
    def nu(self) -> Fraction:
        return Fraction(self.m).limit_denominator(8) - Fraction(self.d, 2)

    @property
    def max_derivative_order(self) -> int:
        """Highest total derivative order with bounded classical derivatives."""
        return int(self.nu + Fraction(1, 2))

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        poly = np.polynomial.polynomial.polyval(r, [float(c) for c in _PROFILES[self.nu]])
        return self.amplitude * poly * np.exp(-r)

    def __call__(self, x, y):
        """Pairwise kernel matrix between point arrays ``x`` (n, d) and ``y`` (k, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        r = np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=-1))
        return self.profile(r)

    def derivative(self, alpha, x, y):
        """Pairwise ``D^alpha_x phi(|x - y|)`` for evaluation points x and centres y."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.d or min(alpha) < 0:
            raise ValueError(f"multi-index {alpha} does not match d={self.d}")
        if sum(alpha) > self.max_derivative_order:
            raise ValueError(
                f"derivative order {sum(alpha)} exceeds the supported order "
                f"{self.max_derivative_order} for nu={float(self.nu)}"
            )
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        z = x[:, None, :] - y[None, :, :]
        return self._derivative_offsets(alpha, z)

    def _derivative_offsets(self, alpha, z):
        r = np.sqrt((z ** 2).sum(axis=-1))
        at_zero = r == 0.0
        rs = np.where(at_zero, 1.0, r)
        decay = np.exp(-r)
        out = np.zeros_like(r)
        for powers, e, c in _derivative_terms(self.nu, alpha):
            term = np.full_like(r, c)
            for i, p in enumerate(powers):
                if p:
                    term = term * z[..., i] ** p
            if e:
                term = term * rs ** e
            degree = sum(powers) + e
            if at_zero.any():
                if degree > 0:
                    term[at_zero] = 0.0
                elif degree == 0:
                    term[at_zero] = c * _angular_mean(powers)
                else:
                    raise ValueError(f"D^{alpha} is singular at the kernel centre")
            out += term
        return self.amplitude * out * decay

    def multi_indices(self, order: int) -> list[tuple[int, ...]]:
        return multi_indices(self.d, order)


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of total ``order`` in d variables, lexicographically descending."""
    if d == 1:
        return [(order,)]
    return [(order - j, j) for j in range(order + 1)]


@dataclass(frozen=True)
class RestrictedKernel:
    """An ambient Matérn kernel evaluated only on points of a manifold.

    Its native space on the circle is H^tau with ``tau = m - 1/2``.
    """

    base: MaternKernel
    manifold: Manifold

    @property
    def tau(self) -> float:
        return self.base.m - (self.manifold.ambient_dim - self.manifold.intrinsic_dim) / 2

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def m(self) -> float:
        return self.base.m

    @property
    def amplitude(self) -> float:
        return self.base.amplitude

    def __call__(self, x, y):
        return self.base(x, y)

    def derivative(self, alpha, x, y):
        return self.base.derivative(alpha, x, y)

    def on_angles(self, theta, theta_nodes):
        """Kernel matrix between circle angles (chordal distance through the base kernel)."""
        return self.base(self.manifold.embed(theta), self.manifold.embed(theta_nodes))


def restrict(kernel: MaternKernel, manifold: Manifold) -> RestrictedKernel:
    if kernel.d != manifold.ambient_dim:
        raise ValueError("kernel dimension must equal the manifold's ambient dimension")
    rk = RestrictedKernel(kernel, manifold)
    if rk.tau <= manifold.intrinsic_dim / 2:
        raise ValueError(f"tau={rk.tau} must exceed d_M/2={manifold.intrinsic_dim / 2}")
    return rk


@dataclass(frozen=True, eq=False)
class TrialSpace:
    """Span of kernel translates centred at the nodes."""

    kernel: MaternKernel | RestrictedKernel
    nodes: PointSet
    geometry: object = None
    _chol: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.geometry is None:
            object.__setattr__(self, "geometry", self.nodes.host)
        if self.nodes.dim != self.kernel.d:
            raise ValueError("node dimension does not match the kernel dimension")

    @property
    def dim(self) -> int:
        return len(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return self.nodes.points

    @property
    def on_manifold(self) -> bool:
        return isinstance(self.geometry, Circle)

    def basis(self, x):
        """Values of every basis function at points x, shape (len(x), N)."""
        return self.kernel(np.atleast_2d(x), self.centers)

    def basis_derivative(self, alpha, x):
        return self.kernel.derivative(alpha, np.atleast_2d(x), self.centers)

    def factor(self):
        """Cholesky factor of the (jittered) kernel Gram, computed once."""
        if "L" not in self._chol:
            L, jitter = jittered_cholesky(gram_matrix(self))
            self._chol["L"] = L
            self._chol["jitter"] = jitter
        return self._chol["L"], self._chol["jitter"]


def kernel_eval(k: MaternKernel, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(k(x[None, :], y[None, :])[0, 0])


def kernel_derivative(k: MaternKernel, alpha, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(k.derivative(alpha, x[None, :], y[None, :])[0, 0])


def gram_matrix(space: TrialSpace) -> np.ndarray:
    """Symmetric kernel matrix ``Phi_ij = phi(x_i, x_j)``."""
    X = space.centers
    if len(X) > 1:
        q2 = space.nodes.min_pair_distance
        if q2 < COALESCE_TOL:
            raise CoalescingNodesError(
                f"coalescing nodes: minimal node distance {q2:.3e} < {COALESCE_TOL:g}"
            )
    G = space.kernel(X, X)
    return 0.5 * (G + G.T)


def interpolate(space: TrialSpace, values) -> np.ndarray:
    """Coefficients c with ``Phi c = values``."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != space.dim:
        raise ValueError(f"expected {space.dim} values, got {values.shape[0]}")
    L, _ = space.factor()
    return sla.cho_solve((L, True), values)


def evaluate_trial(space: TrialSpace, coeffs, points) -> np.ndarray:
    """``u(p) = sum_j c_j phi(p, x_j)``; ``coeffs`` may hold several columns."""
    return space.basis(points) @ np.asarray(coeffs, dtype=float)


__all__ = [
    "MaternKernel",
    "RestrictedKernel",
    "TrialSpace",
    "CoalescingNodesError",
    "GramConditioningError",
    "SUPPORTED_M",
    "kernel_eval",
    "kernel_derivative",
    "gram_matrix",
    "interpolate",
    "evaluate_trial",
    "restrict",
    "multi_indices",
]
