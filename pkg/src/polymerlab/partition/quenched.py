"""Quenched partition functions by excursion dynamic programming.

Both engines run the O(N^2) renewal recursion in a scaled linear domain:
per-replica running scales keep every stored entry inside double range, the
inner sums are BLAS dot products, and any step whose scaled sums underflow
entirely is recomputed with an exact log-sum-exp before the scales are
rebased.  The reported log Z is finite for arbitrarily violent inputs.

Copolymer recursion (constrained endpoint):

    Z(n) = sum_{m<n} Z(m) K(n-m) * (1 + exp(-2 lam (P_n - P_m))) / 2,

with P the prefix sums of (omega + h); the sign average splits into the
two streams Z(m) and Z(m) exp(2 lam P_m), each a plain convolution
against K.  Pinning uses the single stream with site weight
exp(beta omega_n + h) at each contact.  Free boundaries replace the last
kernel factor by the survival function and keep the sign average.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..renewal import RenewalLaw

_LOG_HALF = float(np.log(0.5))
_RESCALE = 600.0


def _as_batch(omega) -> tuple[np.ndarray, bool]:
    om = np.asarray(omega, dtype=np.float64)
    if om.ndim == 1:
        return om[None, :], True
    if om.ndim == 2:
        return om, False
    raise DomainError("omega must be a 1-d path or a (replicas, N) batch")


def _log_survival(law: RenewalLaw, gap: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(law.survival_geq[np.minimum(gap + 1, law.support + 1)])


def copolymer_logZ(omega, law: RenewalLaw, lam: float, h: float,
                   boundary: str = "constrained", cuts=None):
    """log Z of the quenched copolymer for one path or a batch of paths.

    With `cuts` (constrained only) returns the (len(cuts), replicas) array
    of constrained log Z at those intermediate sizes from a single sweep.
    """
    om, single = _as_batch(omega)
    R, N = om.shape
    if N < 1:
        raise DomainError("N must be >= 1")
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    _check_boundary(boundary)
    G = law.support
    mrev = law.masses_rev
    logK = law.log_masses
    tl = 2.0 * lam

    P = np.empty((R, N + 1))
    P[:, 0] = 0.0
    np.cumsum(om + h, axis=1, out=P[:, 1:])

    logZ = np.empty((N + 1, R))
    A = np.zeros((N + 1, R))
    B = np.zeros((N + 1, R))
    logZ[0] = 0.0
    A[0] = 1.0
    B[0] = 1.0
    sA = np.zeros(R)
    sB = np.zeros(R)

    def exact_step(n, cols):
        lo = max(0, n - G)
        m = np.arange(lo, n)
        lk = logK[n - m - 1]
        for r in cols:
            terms = (logZ[lo:n, r] + lk + _LOG_HALF
                     + np.logaddexp(0.0, -tl * (P[r, n] - P[r, lo:n])))
            mx = terms.max()
            logZ[n, r] = mx + np.log(np.exp(terms - mx).sum())

    def rebase(n, cols):
        sA[cols] = logZ[n, cols]
        sB[cols] = logZ[n, cols] + tl * P[cols, n]
        with np.errstate(under="ignore"):
            A[: n + 1, cols] = np.exp(logZ[: n + 1, cols] - sA[cols][None, :])
            B[: n + 1, cols] = np.exp(
                logZ[: n + 1, cols] + tl * P[cols, : n + 1].T - sB[cols][None, :])

    for n in range(1, N + 1):
        lo = max(0, n - G)
        ks = mrev[G - (n - lo): G]
        w1 = ks @ A[lo:n]
        w2 = ks @ B[lo:n]
        with np.errstate(divide="ignore"):
            t1 = np.log(w1) + sA + _LOG_HALF
            t2 = np.log(w2) + sB - tl * P[:, n] + _LOG_HALF
        lz = np.logaddexp(t1, t2)
        logZ[n] = lz
        bad = ~np.isfinite(lz)
        if bad.any():
            cols = np.nonzero(bad)[0]
            exact_step(n, cols)
            rebase(n, cols)
            lz = logZ[n]
        eA = lz - sA
        eB = lz + tl * P[:, n] - sB
        hot = (eA > _RESCALE) | (eB > _RESCALE)
        if hot.any():
            rebase(n, np.nonzero(hot)[0])
            cold = np.nonzero(~hot)[0]
            with np.errstate(under="ignore"):
                A[n, cold] = np.exp(eA[cold])
                B[n, cold] = np.exp(eB[cold])
        else:
            with np.errstate(under="ignore"):
                A[n] = np.exp(eA)
                B[n] = np.exp(eB)

    if cuts is not None:
        if boundary != "constrained":
            raise DomainError("cuts are only defined for the constrained endpoint")
        return logZ[np.asarray(cuts, dtype=np.int64)].copy()
    if boundary == "constrained":
        out = logZ[N].copy()
    else:
        gap = N - np.arange(0, N)
        lsv = _log_survival(law, gap)
        sv = np.exp(lsv)
        w1 = sv @ A[:N]
        w2 = sv @ B[:N]
        with np.errstate(divide="ignore"):
            t1 = np.log(w1) + sA + _LOG_HALF
            t2 = np.log(w2) + sB - tl * P[:, N] + _LOG_HALF
        out = np.logaddexp(np.logaddexp(t1, t2), logZ[N])
        bad = ~np.isfinite(out)
        if bad.any():
            for r in np.nonzero(bad)[0]:
                terms = (logZ[:N, r] + lsv + _LOG_HALF
                         + np.logaddexp(0.0, -tl * (P[r, N] - P[r, :N])))
                terms = np.append(terms, logZ[N, r])
                mx = terms.max()
                out[r] = mx + np.log(np.exp(terms - mx).sum())
    return float(out[0]) if single else out


def pinning_logZ(omega, law: RenewalLaw, beta: float, h: float,
                 boundary: str = "constrained", cuts=None):
    """log Z of the quenched pinning model for one path or a batch."""
    om, single = _as_batch(omega)
    R, N = om.shape
    if N < 1:
        raise DomainError("N must be >= 1")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    _check_boundary(boundary)
    G = law.support
    mrev = law.masses_rev
    logK = law.log_masses
    site = beta * om + h  # weight collected at a contact

    logZ = np.empty((N + 1, R))
    A = np.zeros((N + 1, R))
    logZ[0] = 0.0
    A[0] = 1.0
    sA = np.zeros(R)

    def exact_step(n, cols):
        lo = max(0, n - G)
        m = np.arange(lo, n)
        lk = logK[n - m - 1]
        for r in cols:
            terms = logZ[lo:n, r] + lk
            mx = terms.max()
            logZ[n, r] = mx + np.log(np.exp(terms - mx).sum()) + site[r, n - 1]

    def rebase(n, cols):
        sA[cols] = logZ[n, cols]
        with np.errstate(under="ignore"):
            A[: n + 1, cols] = np.exp(logZ[: n + 1, cols] - sA[cols][None, :])

    for n in range(1, N + 1):
        lo = max(0, n - G)
        ks = mrev[G - (n - lo): G]
        w = ks @ A[lo:n]
        with np.errstate(divide="ignore"):
            lz = np.log(w) + sA + site[:, n - 1]
        logZ[n] = lz
        bad = ~np.isfinite(lz)
        if bad.any():
            cols = np.nonzero(bad)[0]
            exact_step(n, cols)
            rebase(n, cols)
            lz = logZ[n]
        eA = lz - sA
        hot = eA > _RESCALE
        if hot.any():
            rebase(n, np.nonzero(hot)[0])
            cold = np.nonzero(~hot)[0]
            with np.errstate(under="ignore"):
                A[n, cold] = np.exp(eA[cold])
        else:
            with np.errstate(under="ignore"):
                A[n] = np.exp(eA)

    if cuts is not None:
        if boundary != "constrained":
            raise DomainError("cuts are only defined for the constrained endpoint")
        return logZ[np.asarray(cuts, dtype=np.int64)].copy()
    if boundary == "constrained":
        out = logZ[N].copy()
    else:
        gap = N - np.arange(0, N)
        lsv = _log_survival(law, gap)
        w = np.exp(lsv) @ A[:N]
        with np.errstate(divide="ignore"):
            out = np.logaddexp(np.log(w) + sA, logZ[N])
        bad = ~np.isfinite(out)
        if bad.any():
            for r in np.nonzero(bad)[0]:
                terms = np.append(logZ[:N, r] + lsv, logZ[N, r])
                mx = terms.max()
                out[r] = mx + np.log(np.exp(terms - mx).sum())
    return float(out[0]) if single else out


def _check_boundary(boundary: str) -> None:
    if boundary not in ("constrained", "free"):
        raise DomainError(f"boundary must be 'constrained' or 'free', got {boundary!r}")
