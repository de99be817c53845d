"""Exact two-replica renewal functionals for the interpolation inequality.

A_N couples two independent renewal copies through

    exp( (M+1) beta^2 sum rho_{nm} d_n d'_m
         + h sum (d_n + d'_n) + beta^2/2 sum rho_{nm} (d d + d' d') )

with free endpoints; B_N is the same without the coupling, endpoint
constrained, hence the square of the single-replica annealed value.  The
coupled expectation is evaluated exactly by a pair transfer chain over
(age, contact-window) states of both replicas; the per-site weight
factorizes over the replicas once the new contact indicators are fixed,
so one step costs four pairs of independent one-replica operations.
"""

from __future__ import annotations

import math

import numpy as np

from ..correlation import CorrelationModel, rho_array
from ..errors import CapabilityError, DomainError
from ..renewal import RenewalLaw
from .annealed import MAX_WINDOW_RADIUS, pinning_annealed_logZ


def _replica_tables(model: CorrelationModel, law: RenewalLaw, beta: float,
                    h: float, coupling: float, R: int, W: int):
    """Per-window factors g[(delta, delta'), w] of the factorized site weight."""
    rhos = rho_array(model, max(R, 1))
    coup = np.zeros(W)
    for w in range(W):
        for j in range(1, R + 1):
            if (w >> (j - 1)) & 1:
                coup[w] += rhos[j]
    base = h + 0.5 * beta ** 2
    g = np.empty((2, 2, W))
    for d in (0, 1):
        for dp in (0, 1):
            g[d, dp] = np.exp(d * (base + beta ** 2 * coup)
                              + coupling * dp * coup
                              + 0.5 * coupling * rhos[0] * d * dp)
    return g


def _apply_replica_op(V: np.ndarray, axis0: int, delta: int, g: np.ndarray,
                      Kvec: np.ndarray, W: int, mask: int) -> np.ndarray:
    """One-replica transition on axes (axis0, axis0+1) of the 4-d pair state."""
    if axis0 == 2:
        V = np.moveaxis(V, [2, 3], [0, 1])
    A = V.shape[0] - 1
    out = np.zeros_like(V)
    if delta == 1:
        kd = np.tensordot(Kvec[1: A + 2], V, axes=([0], [0]))  # (W, ...) over ages
        for w in range(W):
            out[0, ((w << 1) | 1) & mask] += g[w] * kd[w]
    else:
        for w in range(W):
            out[1: A + 1, (w << 1) & mask] += g[w] * V[0: A, w]
    if axis0 == 2:
        out = np.moveaxis(out, [0, 1], [2, 3])
    return out


def two_replica_logAB(model: CorrelationModel, law: RenewalLaw, beta: float,
                      h: float, N: int, M: float) -> tuple[float, float]:
    """Exact (log A_N, log B_N) via the pair transfer (finite range only)."""
    if not model.is_finite_range:
        raise CapabilityError("pair transfer needs a finite-range model; "
                              "use the Monte Carlo estimator for general correlations")
    R = model.range_radius
    if R > MAX_WINDOW_RADIUS:
        raise CapabilityError(f"window radius {R} too large")
    N = int(N)
    if N < 1:
        raise DomainError("N must be >= 1")
    W = 1 << R
    A = min(N, law.support)
    if ((A + 1) * W) ** 2 * 8 * 3 > 2 ** 31:
        raise CapabilityError("pair state space too large; reduce N")
    mask = W - 1
    Kvec = np.zeros(A + 2)
    upto = min(law.support, A + 1)
    Kvec[1: upto + 1] = law.masses[:upto]
    coupling = (M + 1.0) * beta ** 2
    g = _replica_tables(model, law, beta, h, coupling, R, W)

    # window bits flag contacts at sites >= 1; site 0 carries no weight
    V = np.zeros((A + 1, W, A + 1, W))
    V[0, 0, 0, 0] = 1.0
    logscale = 0.0
    for _ in range(N):
        new = np.zeros_like(V)
        for d in (0, 1):
            for dp in (0, 1):
                t = _apply_replica_op(V, 0, d, g[d, dp], Kvec, W, mask)
                new += _apply_replica_op(t, 2, dp, g[dp, d], Kvec, W, mask)
        V = new
        m = V.max()
        if m > 1e200:
            logscale += math.log(m)
            V /= m
    sv = law.survival_geq[np.minimum(np.arange(A + 1) + 1, law.support + 1)]
    total = float(np.einsum("awbv,a,b->", V, sv, sv))
    if total <= 0.0 or not math.isfinite(total):
        raise DomainError("pair transfer under/overflowed at these parameters")
    logA = math.log(total) + logscale
    logB = 2.0 * pinning_annealed_logZ(model, law, beta, h, N, "constrained")
    return logA, logB
