"""Exact annealed partition functions for finite-range correlations.

Averaging the Gaussian field out of the quenched weights leaves renewal
functionals with a quadratic interaction of range R, evaluated exactly by
transfer chains:

* copolymer: age x sign-window chain.  State after site n is (age since
  the last renewal, signs of the last R sites); a renewal at n+1 closes the
  current gap with kernel weight K(age+1); leaving a renewal starts a fresh
  excursion whose fair sign applies from the next site on.  Per-site weight
  exp(-2 lam h D + 2 lam^2 (rho_0 D + 2 sum_j rho_j D D_{-j})).

* pinning: contact-window channel convolution.  States live on contact
  times only; gaps longer than R contribute through a single running
  convolution against K, gaps g <= R carry the residual correlation weight
  exp(beta^2 (rho_g + sum_{j>g} rho_j d_{n-j})) explicitly.

Both run in a scaled linear domain with periodic renormalization.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..correlation import CorrelationModel, rho_array
from ..errors import CapabilityError, DomainError, NumericalError
from ..renewal import RenewalLaw

MAX_WINDOW_RADIUS = 12
MEMORY_GUARD_BYTES = 512 * 2 ** 20


def _require_finite_range(model: CorrelationModel) -> int:
    if not model.is_finite_range:
        raise CapabilityError(
            "exact annealed transfer needs a finite-range correlation model; "
            "use the disorder-average Monte Carlo estimator instead")
    R = model.range_radius
    if R > MAX_WINDOW_RADIUS:
        raise CapabilityError(f"window radius {R} exceeds the supported maximum "
                              f"{MAX_WINDOW_RADIUS}")
    return R


def _check_inputs(law: RenewalLaw, N: int, boundary: str) -> None:
    if N < 1:
        raise DomainError("N must be >= 1")
    if boundary not in ("constrained", "free"):
        raise DomainError(f"boundary must be 'constrained' or 'free', got {boundary!r}")


@njit(cache=True)
def _copolymer_age_chain(Kpad, SW, WNEXT, N, amax):  # pragma: no cover (numba)
    W = SW.shape[0]
    V = np.zeros((amax + 2, W))
    U = np.zeros((amax + 2, W))
    V[0, 0] = 1.0
    logscale = 0.0
    for n in range(1, N + 1):
        top = min(n, amax + 1)
        for a in range(0, top + 1):
            for w in range(W):
                U[a, w] = 0.0
        # sources at age 0: the excursion covering site n starts fresh
        for w in range(W):
            v0 = V[0, w]
            if v0 > 0.0:
                for d in range(2):
                    wt = 0.5 * SW[w, d] * v0
                    t = WNEXT[w, d]
                    U[1, t] += wt
                    U[0, t] += wt * Kpad[1]
        # sources at age >= 1: sign continues
        for w in range(W):
            d = w & 1
            sw = SW[w, d]
            t = WNEXT[w, d]
            acc = 0.0
            for a in range(1, min(n, amax + 1)):
                v = V[a, w]
                if v > 0.0:
                    if a + 1 <= amax:
                        U[a + 1, t] += v * sw
                    acc += v * Kpad[a + 1]
            U[0, t] += acc * sw
        m = 0.0
        for a in range(0, top + 1):
            for w in range(W):
                if U[a, w] > m:
                    m = U[a, w]
        if m > 1e250:
            logscale += np.log(m)
            for a in range(0, top + 1):
                for w in range(W):
                    U[a, w] /= m
        tmp = V
        V = U
        U = tmp
    return V, logscale


def _copolymer_tables(model: CorrelationModel, lam: float, h: float):
    # the window keeps at least one bit: bit 0 is the sign of the current
    # site, which a continuing excursion must inherit even at range 0
    R = model.range_radius
    W = 1 << max(R, 1)
    rhos = rho_array(model, max(R, 1))
    SW = np.empty((W, 2))
    WNEXT = np.empty((W, 2), dtype=np.int64)
    mask = W - 1
    for w in range(W):
        coup = 0.0
        for j in range(1, R + 1):
            if (w >> (j - 1)) & 1:
                coup += rhos[j]
        for d in range(2):
            SW[w, d] = math.exp(d * (-2.0 * lam * h + 2.0 * lam ** 2 * rhos[0]
                                     + 4.0 * lam ** 2 * coup))
            WNEXT[w, d] = ((w << 1) | d) & mask
    return SW, WNEXT


def copolymer_annealed_logZ(model: CorrelationModel, law: RenewalLaw,
                            lam: float, h: float, N: int,
                            boundary: str = "constrained") -> float:
    """log E[Z] for the copolymer with a finite-range model, exactly."""
    R = _require_finite_range(model)
    N = int(N)
    _check_inputs(law, N, boundary)
    amax = min(N, law.support)
    if (amax + 2) * (1 << max(R, 1)) * 16 * 2 > MEMORY_GUARD_BYTES:
        raise CapabilityError("transfer state space exceeds the memory guard; "
                              "reduce N or the window radius")
    Kpad = np.zeros(amax + 2)
    upto = min(law.support, amax + 1)
    Kpad[1: upto + 1] = law.masses[:upto]
    SW, WNEXT = _copolymer_tables(model, lam, h)
    V, logscale = _copolymer_age_chain(Kpad, SW, WNEXT, N, amax)
    if boundary == "constrained":
        total = float(V[0].sum())
    else:
        sv = law.survival_geq
        total = float(V[0].sum())
        for a in range(1, min(N, amax) + 1):
            p = sv[a + 1] if a + 1 <= law.support + 1 else 0.0
            total += float(V[a].sum()) * p
    if total <= 0.0 or not math.isfinite(total):
        raise NumericalError("annealed copolymer transfer under/overflowed; "
                             "parameters outside the supported range")
    return math.log(total) + logscale


def copolymer_annealed_iid_logZ(law: RenewalLaw, lam: float, h: float, N: int,
                                boundary: str = "constrained") -> float:
    """Independent 1-d excursion recursion for the iid case (test oracle).

    Per-excursion annealed weight (1 + exp((2 lam^2 - 2 lam h) len)) / 2.
    """
    N = int(N)
    _check_inputs(law, N, boundary)
    c = 2.0 * lam ** 2 - 2.0 * lam * h
    L = min(N, law.support)
    ell = np.arange(1, L + 1, dtype=np.float64)
    logW = law.log_masses[:L] + np.log(0.5) + np.logaddexp(0.0, c * ell)
    logZ = np.empty(N + 1)
    logZ[0] = 0.0
    for n in range(1, N + 1):
        lo = max(0, n - L)
        terms = logZ[lo:n] + logW[: n - lo][::-1]
        mx = terms.max()
        logZ[n] = mx + math.log(np.exp(terms - mx).sum())
    if boundary == "constrained":
        return float(logZ[N])
    gaps = N - np.arange(0, N)
    with np.errstate(divide="ignore"):
        lsv = np.log(law.survival_geq[np.minimum(gaps + 1, law.support + 1)])
    terms = np.append(logZ[:N] + lsv + np.log(0.5)
                      + np.logaddexp(0.0, c * gaps), logZ[N])
    mx = terms.max()
    return float(mx + math.log(np.exp(terms - mx).sum()))


def pinning_annealed_logZ(model: CorrelationModel, law: RenewalLaw,
                          beta: float, h: float, N: int,
                          boundary: str = "constrained") -> float:
    """log E[Z] for the pinning model with a finite-range model, exactly."""
    R = _require_finite_range(model)
    N = int(N)
    _check_inputs(law, N, boundary)
    if beta < 0:
        raise DomainError("beta must be >= 0")
    W = 1 << R
    if (N + 1) * W * 8 * 2 > MEMORY_GUARD_BYTES:
        raise CapabilityError("transfer state space exceeds the memory guard")
    rhos = rho_array(model, max(R, 1))
    G = law.support
    mrev = law.masses_rev
    base = h + 0.5 * beta ** 2  # every contact carries this
    winf = math.exp(base)
    mask = W - 1
    # short-gap tables: weight and target window for gaps 1..R.
    # Window bit b flags a weight-eligible contact at distance b from the
    # previous contact (site 0 carries no weight, so the initial window is 0).
    swg = np.empty((R + 1, W))
    wg = np.empty((R + 1, W), dtype=np.int64)
    for g in range(1, R + 1):
        for w in range(W):
            coup = 0.0
            for j in range(g, R + 1):
                if (w >> (j - g)) & 1:
                    coup += rhos[j]
            swg[g, w] = math.exp(base + beta ** 2 * coup)
            wg[g, w] = ((w << g) | 1) & mask
    Z = np.zeros((N + 1, W))
    Ztot = np.zeros(N + 1)
    Z[0, 0] = 1.0
    Ztot[0] = 1.0
    logscale = 0.0
    for n in range(1, N + 1):
        new = np.zeros(W)
        lo = max(0, n - G)
        hi = n - R - 1  # inclusive source index for long gaps
        if hi >= lo:
            dot = float(mrev[G - (n - lo): G - R] @ Ztot[lo: hi + 1])
            new[1 if R >= 1 else 0] += winf * dot
        for g in range(1, min(R, n) + 1):
            kg = law.K(g)
            if kg > 0.0:
                np.add.at(new, wg[g], Z[n - g] * (kg * swg[g]))
        Z[n] = new
        t = float(new.sum())
        Ztot[n] = t
        if t > 1e250:
            logscale += math.log(t)
            Z[: n + 1] /= t
            Ztot[: n + 1] /= t
    if boundary == "constrained":
        total = Ztot[N]
    else:
        gaps = N - np.arange(0, N + 1)
        sv = law.survival_geq[np.minimum(gaps + 1, law.support + 1)]
        total = float(sv @ Ztot)
    if total <= 0.0 or not math.isfinite(total):
        raise NumericalError("annealed pinning transfer under/overflowed; "
                             "parameters outside the supported range")
    return math.log(total) + logscale
