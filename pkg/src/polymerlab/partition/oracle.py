"""Brute-force reference evaluators for small systems.

Every partition function here is a literal sum over renewal subsets of
{1..N} (times sign vectors where excursions carry signs), with fsum
accumulation and no recursion shared with the production engines.  These
are the ground truth the dynamic programs and transfer chains are tested
against; keep them slow and obvious.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ..correlation import CorrelationModel, rho_array
from ..errors import CapabilityError, DomainError
from ..renewal import RenewalLaw

ENUM_BUDGET = 20


def _check_budget(N: int, limit: int = ENUM_BUDGET) -> None:
    if N > limit:
        raise CapabilityError(f"enumeration budget exceeded: N={N} > {limit}")
    if N < 1:
        raise DomainError("N must be >= 1")


def _patterns(N: int, boundary: str):
    """Yield (renewal_points_including_0, last_point) for every configuration."""
    if boundary == "constrained":
        for mask in range(1 << (N - 1)):
            pts = [0] + [s for s in range(1, N) if mask >> (s - 1) & 1] + [N]
            yield pts, N
    elif boundary == "free":
        for mask in range(1 << N):
            pts = [0] + [s for s in range(1, N + 1) if mask >> (s - 1) & 1]
            yield pts, pts[-1]
    else:
        raise DomainError(f"unknown boundary {boundary!r}")


def _log_gap_weight(law: RenewalLaw, pts, last: int, N: int, boundary: str):
    lw = 0.0
    for a, b in zip(pts, pts[1:]):
        k = law.K(b - a)
        if k == 0.0:
            return None
        lw += math.log(k)
    if boundary == "free" and last < N:
        sv = law.survival_gt(N - last)
        if sv == 0.0:
            return None
        lw += math.log(sv)
    return lw


def _logsumexp_fsum(terms) -> float:
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    mx = max(terms)
    return mx + math.log(math.fsum(math.exp(t - mx) for t in terms))


def enumerate_quenched_copolymer_logZ(omega, law: RenewalLaw, lam: float, h: float,
                                      boundary: str = "constrained") -> float:
    om = np.asarray(omega, dtype=np.float64)
    N = len(om)
    _check_budget(N)
    P = np.concatenate([[0.0], np.cumsum(om + h)])
    terms = []
    for pts, last in _patterns(N, boundary):
        lw = _log_gap_weight(law, pts, last, N, boundary)
        if lw is None:
            continue
        segs = list(zip(pts, pts[1:]))
        if boundary == "free" and last < N:
            segs.append((last, N))
        for a, b in segs:
            lw += math.log(0.5) + np.logaddexp(0.0, -2.0 * lam * (P[b] - P[a]))
        terms.append(lw)
    return _logsumexp_fsum(terms)


def enumerate_quenched_pinning_logZ(omega, law: RenewalLaw, beta: float, h: float,
                                    boundary: str = "constrained") -> float:
    om = np.asarray(omega, dtype=np.float64)
    N = len(om)
    _check_budget(N)
    terms = []
    for pts, last in _patterns(N, boundary):
        lw = _log_gap_weight(law, pts, last, N, boundary)
        if lw is None:
            continue
        lw += math.fsum(beta * om[p - 1] + h for p in pts[1:])
        terms.append(lw)
    return _logsumexp_fsum(terms)


_SIGN_MATRICES: dict = {}


def _sign_matrix(k: int) -> np.ndarray:
    if k not in _SIGN_MATRICES:
        rows = np.arange(1 << k, dtype=np.uint32)
        _SIGN_MATRICES[k] = ((rows[:, None] >> np.arange(k)[None, :]) & 1).astype(np.float64)
    return _SIGN_MATRICES[k]


def _rho_block_prefix(model: CorrelationModel, N: int) -> np.ndarray:
    idx = np.abs(np.subtract.outer(np.arange(1, N + 1), np.arange(1, N + 1)))
    R = rho_array(model, N)[idx]
    S = np.zeros((N + 1, N + 1))
    S[1:, 1:] = R.cumsum(axis=0).cumsum(axis=1)
    return S


def _block_sum(S: np.ndarray, a1: int, b1: int, a2: int, b2: int) -> float:
    # sum of rho_{nm} over n in (a1, b1], m in (a2, b2]
    return S[b1, b2] - S[a1, b2] - S[b1, a2] + S[a1, a2]


def enumerate_annealed_copolymer_logZ(model: CorrelationModel, law: RenewalLaw,
                                      lam: float, h: float, N: int,
                                      boundary: str = "constrained") -> float:
    _check_budget(N, 16)
    S = _rho_block_prefix(model, N)
    terms = []
    for pts, last in _patterns(N, boundary):
        lw = _log_gap_weight(law, pts, last, N, boundary)
        if lw is None:
            continue
        segs = list(zip(pts, pts[1:]))
        if boundary == "free" and last < N:
            segs.append((last, N))
        k = len(segs)
        lin = np.array([
            -2.0 * lam * h * (b - a) + 2.0 * lam ** 2 * _block_sum(S, a, b, a, b)
            for a, b in segs])
        cross = np.zeros((k, k))
        for i, j in combinations(range(k), 2):
            a1, b1 = segs[i]
            a2, b2 = segs[j]
            cross[i, j] = cross[j, i] = 2.0 * lam ** 2 * _block_sum(S, a1, b1, a2, b2)
        X = _sign_matrix(k)
        expo = X @ lin + np.einsum("si,ij,sj->s", X, cross, X)
        mx = expo.max()
        terms.append(lw - k * math.log(2.0) + mx
                     + math.log(math.fsum(math.exp(float(e - mx)) for e in expo)))
    return _logsumexp_fsum(terms)


def enumerate_annealed_pinning_logZ(model: CorrelationModel, law: RenewalLaw,
                                    beta: float, h: float, N: int,
                                    boundary: str = "constrained") -> float:
    _check_budget(N)
    rhos = rho_array(model, N)
    terms = []
    for pts, last in _patterns(N, boundary):
        lw = _log_gap_weight(law, pts, last, N, boundary)
        if lw is None:
            continue
        contacts = np.asarray(pts[1:], dtype=np.int64)
        k = len(contacts)
        quad = float(rhos[np.abs(contacts[:, None] - contacts[None, :])].sum())
        terms.append(lw + h * k + 0.5 * beta ** 2 * quad)
    return _logsumexp_fsum(terms)


def enumerate_logZ(kind: str, *, model=None, law=None, omega=None,
                   lam=None, beta=None, h=0.0, N=None,
                   boundary="constrained") -> float:
    """Dispatcher over the four engine kinds."""
    if kind == "quenched-copolymer":
        return enumerate_quenched_copolymer_logZ(omega, law, lam, h, boundary)
    if kind == "quenched-pinning":
        return enumerate_quenched_pinning_logZ(omega, law, beta, h, boundary)
    if kind == "annealed-copolymer":
        return enumerate_annealed_copolymer_logZ(model, law, lam, h, N, boundary)
    if kind == "annealed-pinning":
        return enumerate_annealed_pinning_logZ(model, law, beta, h, N, boundary)
    raise DomainError(f"unknown enumeration kind {kind!r}")


# ---------------------------------------------------------------------------
# two-replica quantities (interpolation inequality ingredients)


def _free_pattern_vectors(law: RenewalLaw, N: int):
    """All free-boundary contact patterns with their probability weights."""
    pats = np.zeros((1 << N, N))
    logw = np.full(1 << N, -np.inf)
    for i, (pts, last) in enumerate(_patterns(N, "free")):
        lw = _log_gap_weight(law, pts, last, N, "free")
        if lw is None:
            continue
        logw[i] = lw
        pats[i, np.asarray(pts[1:], dtype=np.int64) - 1] = 1.0
    return pats, logw


def enumerate_two_replica_AB(model: CorrelationModel, law: RenewalLaw,
                             beta: float, h: float, N: int, M: float):
    """Exact (log A_N, log B_N) of the two-replica interpolation bound.

    A_N couples the replicas through (M+1) beta^2 sum rho_{nm} d_n d'_m with
    free endpoints; B_N is the constrained, uncoupled square.
    """
    _check_budget(N, 14)
    idx = np.abs(np.subtract.outer(np.arange(1, N + 1), np.arange(1, N + 1)))
    Rho = rho_array(model, N)[idx]
    pats, logw = _free_pattern_vectors(law, N)
    keep = np.isfinite(logw)
    pats, logw = pats[keep], logw[keep]
    own = 0.5 * beta ** 2 * np.einsum("pi,ij,pj->p", pats, Rho, pats)
    single = logw + h * pats.sum(axis=1) + own
    wvec = np.exp(single - single.max())
    coupling = (M + 1.0) * beta ** 2 * Rho
    total = 0.0
    chunk = max(1, (1 << 22) // max(len(wvec), 1))
    for start in range(0, len(wvec), chunk):
        blk = pats[start:start + chunk]
        cross = blk @ coupling @ pats.T
        total += float(wvec[start:start + chunk] @ (np.exp(cross) @ wvec))
    logA = math.log(total) + 2.0 * single.max()
    logB = 2.0 * enumerate_annealed_pinning_logZ(model, law, beta, h, N, "constrained")
    return logA, logB
