"""Factorizations with a logged jitter ladder, and the top generalized eigenpair.

Kernel Gram matrices lose definiteness numerically as the separation radius
shrinks.  Two entry points share one jitter ladder:

* :func:`jittered_cholesky` factors an explicitly formed symmetric matrix.
* :func:`row_factor` factors a Gram given through a square-root factor
  ``G = F^T F`` by QR of ``F``.  This never squares the condition number, which
  is what keeps mass matrices of fine node sets usable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

logger = logging.getLogger(__name__)

JITTER_LADDER = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
#: a triangular factor counts as singular below this reciprocal condition number
RCOND_MIN = 1e-14


class GramConditioningError(np.linalg.LinAlgError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


def jittered_cholesky(A, ladder=JITTER_LADDER):
    """Lower Cholesky factor of ``A + lam * trace(A)/n * I`` and the ``lam`` used.

    An unjittered attempt comes first; each escalation is logged.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    scale = np.trace(A) / n
    for lam in (0.0, *ladder):
        try:
            L = np.linalg.cholesky(A + lam * scale * np.eye(n)) if lam else np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            logger.info("cholesky failed at jitter %g; escalating", lam)
            continue
        d = np.abs(np.diag(L))
        if d.min() > np.sqrt(RCOND_MIN) * d.max():
            if lam:
                logger.warning("gram factorized with jitter %g * trace/n", lam)
            return L, lam
        logger.info("cholesky factor near-singular at jitter %g; escalating", lam)
    cond = _condition_estimate(A)
    raise GramConditioningError(
        f"Gram not positive definite after jitter {ladder[-1]:g}; condition ~ {cond:.2e}",
        condition=cond,
    )


def _condition_estimate(A):
    try:
        w = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError:
        return np.inf
    return np.inf if w[0] <= 0 else w[-1] / w[0]


@dataclass
class RowFactor:
    """Upper-triangular ``R`` with ``R^T R = F^T F + lam * trace/n * I``."""

    R: np.ndarray
    jitter: float
    rcond: float

    def whiten(self, Y):
        """``Y R^{-1}``: maps coefficient-space rows into orthonormal coordinates."""
        return sla.solve_triangular(self.R, np.asarray(Y).T, trans="T", lower=False).T

    def transform(self):
        """``R^{-1}``; coefficient vectors are ``R^{-1} y`` for whitened ``y``."""
        return sla.solve_triangular(self.R, np.eye(self.R.shape[0]), lower=False)

    def solve_t(self, K):
        """``R^{-T} K`` (columns of K)."""
        return sla.solve_triangular(self.R, K, trans="T", lower=False)


def stacked_r(blocks):
    """R factor of the row-stack of ``blocks`` by incremental QR (bounded memory)."""
    R = None
    for B in blocks:
        B = np.asarray(B, dtype=float)
        if B.size == 0:
            continue
        stack = B if R is None else np.vstack([R, B])
        R = np.linalg.qr(stack, mode="r")
        if R.shape[0] < R.shape[1]:
            R = np.vstack([R, np.zeros((R.shape[1] - R.shape[0], R.shape[1]))])
    return R


def row_factor(blocks, ladder=JITTER_LADDER, trace=None):
    """Factor ``G = sum_i F_i^T F_i`` from its row blocks ``F_i``.

    ``blocks`` is a sequence (or zero-argument callable returning an iterable) of
    arrays with a common column count.  Jitter escalates only when the
    unjittered factor is numerically singular.
    """
    make = blocks if callable(blocks) else (lambda: iter(blocks))
    R0 = stacked_r(make())
    n = R0.shape[1]
    if trace is None:
        trace = float((R0 ** 2).sum())
    for lam in (0.0, *ladder):
        R = R0 if lam == 0.0 else stacked_r([R0, np.sqrt(lam * trace / n) * np.eye(n)])
        s = np.linalg.svd(R, compute_uv=False)
        rcond = s[-1] / s[0] if s[0] > 0 else 0.0
        if rcond > RCOND_MIN:
            if lam:
                logger.warning("denominator Gram factorized with jitter %g * trace/n", lam)
            sign = np.sign(np.diag(R))
            sign[sign == 0] = 1.0
            return RowFactor(R * sign[:, None], lam, rcond)
        logger.info("denominator factor singular (rcond %.1e) at jitter %g", rcond, lam)
    raise GramConditioningError(
        f"denominator Gram singular after jitter {ladder[-1]:g} (rcond {rcond:.1e})",
        condition=1.0 / max(rcond, 1e-300) ** 2,
    )


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool
    method: str


def top_eigenpair(C, tol=1e-10, max_iter=10_000, shift=0.0, seed=0):
    """Largest eigenpair of the symmetric PSD matrix ``C`` by shifted power iteration.

    Iterates on ``C - shift*I`` and stops once the residual satisfies
    ``|Cv - lam v| <= 100 * tol * lam``; the Rayleigh quotient error is then
    of order ``(100 * tol)^2 * lam / gap``.  A dense symmetric solve takes
    over if the iteration stalls; the result records which path produced it.
    """
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if n == 1:
        return EigenResult(float(C[0, 0]), np.ones(1), 0, True, "scalar")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    res_tol = 100.0 * tol
    for it in range(1, max_iter + 1):
        w = C @ v
        lam = float(v @ w)
        r = np.linalg.norm(w - lam * v)
        if lam > 0 and r <= res_tol * lam:
            return EigenResult(lam, v, it, True, "power")
        w = w - shift * v
        nw = np.linalg.norm(w)
        if nw == 0:
            return EigenResult(lam, v, it, True, "power")
        v = w / nw
    logger.info("power iteration stalled after %d steps; dense fallback", max_iter)
    vals, vecs = np.linalg.eigh(C)
    return EigenResult(float(vals[-1]), vecs[:, -1], max_iter, False, "eigh")
