"""Brute-force reference computations for tests.

Nothing here calls the package's factorizations, Gram assembly or
eigen-solvers; only kernel and point evaluation are shared.  Everything is
deliberately slow and capped at test scale.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Circle

MAX_REFERENCE_N = 32


def mc_rayleigh_bound(G_num, G_den, trials: int = 10_000, seed: int = 0) -> float:
    """Largest Rayleigh quotient over seeded standard-normal draws; never exceeds lambda_max."""
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    A = np.asarray(G_num, dtype=float)
    B = np.asarray(G_den, dtype=float)
    C = np.random.default_rng(seed).standard_normal((trials, A.shape[0]))
    num = np.einsum("ij,jk,ik->i", C, A, C)
    den = np.einsum("ij,jk,ik->i", C, B, C)
    return float(np.max(num / den))


def _cholesky(A):
    n = len(A)
    L = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            s = A[i][j] - sum(L[i][k] * L[j][k] for k in range(j))
            if i == j:
                if s <= 0:
                    raise ValueError("denominator is not positive definite")
                L[i][i] = math.sqrt(s)
            else:
                L[i][j] = s / L[j][j]
    return L


def _forward(L, b):
    x = []
    for i in range(len(L)):
        x.append((b[i] - sum(L[i][k] * x[k] for k in range(i))) / L[i][i])
    return x


def _jacobi_eigenvalues(S, sweeps=100, tol=1e-15):
    """Cyclic Jacobi rotations on a symmetric list-of-lists matrix."""
    a = [row[:] for row in S]
    n = len(a)
    for _ in range(sweeps):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j))
        scale = math.sqrt(sum(a[i][i] ** 2 for i in range(n))) or 1.0
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p][q] == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    return [a[i][i] for i in range(n)]


def dense_eig_reference(G_num, G_den) -> float:
    """lambda_max of the pencil by Cholesky reduction and a full Jacobi eigensolve."""
    A = np.asarray(G_num, dtype=float).tolist()
    B = np.asarray(G_den, dtype=float).tolist()
    n = len(A)
    if n > MAX_REFERENCE_N:
        raise ValueError(f"reference eigensolver limited to n <= {MAX_REFERENCE_N}")
    L = _cholesky(B)
    # Y = L^{-1} A, then S = L^{-1} Y^T = L^{-1} A L^{-T}
    cols = [_forward(L, [A[i][j] for i in range(n)]) for j in range(n)]
    Y = [[cols[j][i] for j in range(n)] for i in range(n)]
    cols = [_forward(L, Y[i]) for i in range(n)]
    S = [[0.5 * (cols[j][i] + cols[i][j]) for j in range(n)] for i in range(n)]
    return max(_jacobi_eigenvalues(S))


def brute_sup_norm_ratio(space, rule, draws: int = 10_000, grid=None, seed: int = 0,
                         refine_steps: int = 0) -> float:
    """Max of ``|u(y)| / ||u||_{L_2}`` over random trial functions and grid points.

    Draws are standard normal in coordinates that are orthonormal for the
    quadrature L_2 product (a plain QR of the weighted sample matrix), since
    raw coefficient draws almost never reach the strongly cancelling
    extremizers.  ``refine_steps`` hill-climbs from the best draw with
    shrinking perturbations; the result stays a lower bound of the supremum.
    """
    rng = np.random.default_rng(seed)
    V = space.kernel(rule.nodes, space.centers)
    E = space.kernel(np.atleast_2d(grid), space.centers)
    w = rule.weights
    _, R = np.linalg.qr(np.sqrt(w)[:, None] * V)
    Rinv = np.linalg.inv(R)

    def ratio(Z):
        C = Rinv @ Z
        l2 = np.sqrt(((V @ C) ** 2 * w[:, None]).sum(axis=0))
        return np.abs(E @ C).max(axis=0) / l2

    Z = rng.standard_normal((space.dim, draws))
    vals = ratio(Z)
    best_i = int(np.argmax(vals))
    best, z = float(vals[best_i]), Z[:, best_i]
    step = 0.5 * np.linalg.norm(z)
    for _ in range(refine_steps):
        trial = z[:, None] + step * rng.standard_normal((space.dim, 16)) / math.sqrt(space.dim)
        tv = ratio(trial)
        j = int(np.argmax(tv))
        if tv[j] > best:
            best, z = float(tv[j]), trial[:, j]
        else:
            step *= 0.8
    return best


def pairwise_scan(points, host, grid=None):
    """``(h, q)`` straight from the definitions: O(N * grid) and O(N^2) loops."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    circle = isinstance(host, Circle)

    def dist(a, b):
        if circle:
            d = abs(math.atan2(a[1], a[0]) - math.atan2(b[1], b[0])) % (2 * math.pi)
            return min(d, 2 * math.pi - d)
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    q = math.inf
    for i in range(len(P)):
        for j in range(i + 1, len(P)):
            q = min(q, 0.5 * dist(P[i], P[j]))
    h = None
    if grid is not None:
        h = 0.0
        for y in np.atleast_2d(grid):
            h = max(h, min(dist(y, x) for x in P))
    return h, q
