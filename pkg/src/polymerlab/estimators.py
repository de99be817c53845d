"""Free-energy estimation, critical-point bisection, and inequality probes.

Replica batches are deterministic in (seed, replica index) and are pooled
order-independently, so results do not depend on the worker count.  Free
energies are per-site log partition functions; standard errors are across
replicas.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .correlation import CorrelationModel, rho_array, toeplitz_solve_ones, upsilon_infinity
from .disorder import sample_paths
from .errors import CapabilityError, DomainError
from .partition.annealed import copolymer_annealed_logZ, pinning_annealed_logZ
from .partition.quenched import copolymer_logZ, pinning_logZ
from .partition.tworeplica import two_replica_logAB
from .renewal import RenewalLaw, sample_signed_trajectory

KINDS = ("copolymer", "pinning")
_CHUNK = 512


def _subseed(seed: int, *tags) -> int:
    """Derived seed, stable across processes (no builtin hash)."""
    blob = repr((seed,) + tags).encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")


def _quenched_logZ_batch(model, law, kind, coupling, h, N, replicas, seed,
                         boundary, workers=1) -> np.ndarray:
    """(replicas,) of quenched log Z, deterministic in the replica index."""
    engine = copolymer_logZ if kind == "copolymer" else pinning_logZ
    chunks = [(s, min(_CHUNK, replicas - s)) for s in range(0, replicas, _CHUNK)]

    def run(chunk):
        start, count = chunk
        om = sample_paths(model, N, seed, count, replica_start=start)
        return engine(om, law, coupling, h, boundary)

    if workers <= 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, chunks))
    return np.concatenate(parts)


@dataclass
class FreeEnergyEstimate:
    value: float
    stderr: float
    N: int
    replicas: int
    kind: str
    method: str
    boundary: str
    coupling: float
    h: float
    model_label: str
    law_label: str
    ess: float = float("nan")
    high_variance: bool = False


def free_energy(model: CorrelationModel, law: RenewalLaw, kind: str,
                coupling: float, h: float, N: int, replicas: int = 8,
                seed: int = 0, boundary: str = "constrained",
                method: str = "quenched-mc", workers: int = 1) -> FreeEnergyEstimate:
    """Per-site free energy at size N by the requested engine."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}")
    N = int(N)
    if method == "quenched-mc":
        if replicas < 1:
            raise DomainError("need at least one replica")
        vals = _quenched_logZ_batch(model, law, kind, coupling, h, N, replicas,
                                    seed, boundary, workers) / N
        se = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else math.inf
        return FreeEnergyEstimate(float(vals.mean()), se, N, replicas, kind,
                                  method, boundary, coupling, h,
                                  model.label(), law.label())
    if method == "annealed-exact":
        if kind == "copolymer":
            lz = copolymer_annealed_logZ(model, law, coupling, h, N, boundary)
        else:
            lz = pinning_annealed_logZ(model, law, coupling, h, N, boundary)
        return FreeEnergyEstimate(lz / N, 0.0, N, 1, kind, method, boundary,
                                  coupling, h, model.label(), law.label())
    if method == "annealed-mc":
        vals = _quenched_logZ_batch(model, law, kind, coupling, h, N, replicas,
                                    seed, boundary, workers)
        mx = float(vals.max())
        w = np.exp(vals - mx)
        mean = float(w.mean())
        ess = float(w.sum() ** 2 / (w ** 2).sum())
        se_lin = float(w.std(ddof=1) / math.sqrt(replicas))
        value = (mx + math.log(mean)) / N
        se = se_lin / mean / N
        return FreeEnergyEstimate(value, se, N, replicas, kind, method, boundary,
                                  coupling, h, model.label(), law.label(),
                                  ess=ess, high_variance=ess < 100)
    raise DomainError(f"unknown method {method!r}")


def free_energy_diff(model: CorrelationModel, law: RenewalLaw, kind: str,
                     coupling: float, h: float, N: int, replicas: int = 32,
                     seed: int = 0, workers: int = 1) -> FreeEnergyEstimate:
    """Telescoping free-energy estimate (log Z_N - log Z_{N/2}) / (N - N/2).

    Same limit as the plain estimator, but the polynomial endpoint
    prefactor cancels, removing the -alpha log N / N bias that matters
    near the critical point.
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}")
    N = int(N)
    half = N // 2
    engine = copolymer_logZ if kind == "copolymer" else pinning_logZ
    chunks = [(s, min(_CHUNK, replicas - s)) for s in range(0, replicas, _CHUNK)]

    def run(chunk):
        start, count = chunk
        om = sample_paths(model, N, seed, count, replica_start=start)
        return engine(om, law, coupling, h, "constrained", cuts=(half, N))

    if workers <= 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, chunks))
    lz = np.concatenate(parts, axis=1)
    d = (lz[1] - lz[0]) / (N - half)
    se = float(d.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else math.inf
    return FreeEnergyEstimate(float(d.mean()), se, N, replicas, kind,
                              "quenched-diff", "constrained", coupling, h,
                              model.label(), law.label())


@dataclass
class CriticalPointEstimate:
    coupling: float
    h_lo: float
    h_hi: float
    extrapolated: float
    N_sequence: tuple
    eps_F: float
    brackets: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def width(self) -> float:
        return self.h_hi - self.h_lo


def _localized(model, law, kind, method, coupling, h, N, replicas, seed, workers):
    """(is_localized, F_hat, eps) decision at one (N, h).

    Both probes use the two-size telescoping estimator
    (log Z_N - log Z_{N/2}) / (N - N/2): it converges to the free energy
    like the plain estimator but cancels the polynomial endpoint prefactor
    whose -alpha log N / N bias would otherwise drown the threshold.
    """
    half = N // 2
    if method == "annealed-exact":
        f_big = free_energy(model, law, kind, coupling, h, N, method=method).value
        f_half = free_energy(model, law, kind, coupling, h, half, method=method).value
        d = (f_big * N - f_half * half) / (N - half)
        eps = 8.0 / N  # crossover resolution of the finite transfer
        return d > eps, d, eps
    est = free_energy_diff(model, law, kind, coupling, h, N, replicas=replicas,
                           seed=_subseed(seed, N, round(h, 12)), workers=workers)
    eps = 3.0 * est.stderr + 0.5 / N
    return est.value > eps, est.value, eps


def critical_point(model: CorrelationModel, law: RenewalLaw, kind: str,
                   coupling: float, method: str = "quenched-mc",
                   N_sequence=(1024, 2048, 4096, 8192), replicas: int = 32,
                   seed: int = 0, h_bracket=None, target_width: float | None = None,
                   workers: int = 1) -> CriticalPointEstimate:
    """Bisection for the zero of the free energy in h, refined over sizes.

    The copolymer localizes for small h, the pinning model for large h;
    the bracket is kept as (localized side, delocalized side) internally
    and reported in increasing h order.
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}")
    ups = upsilon_infinity(model)
    if h_bracket is None:
        if kind == "copolymer":
            h_bracket = (0.0, 1.10 * coupling * ups)
        else:
            from .constants import c_rho_pin
            span = 0.5 * c_rho_pin(model, law, 1e-8) * coupling ** 2
            h_bracket = (-3.0 * span - 1e-3, max(0.1 * span, 1e-3))
    lo, hi = float(h_bracket[0]), float(h_bracket[1])
    sign = 1.0 if kind == "copolymer" else -1.0  # h moves toward delocalization
    if target_width is None:
        target_width = 0.02 * max(abs(lo), abs(hi), 1e-6)

    def probe(h, N):
        return _localized(model, law, kind, method, coupling, h, N, replicas,
                          seed, workers)

    N_sequence = tuple(int(n) for n in N_sequence)
    # localized endpoint first: small h for the copolymer, large h for pinning
    full_loc, full_del = (lo, hi) if kind == "copolymer" else (hi, lo)
    n0 = N_sequence[0]
    ok_loc, f_loc, _ = probe(full_loc, n0)
    ok_del, f_del, eps = probe(full_del, n0)
    if not ok_loc or ok_del:
        raise DomainError(
            f"initial interval does not bracket the transition: "
            f"F({full_loc})={f_loc:.4g} (expected localized), "
            f"F({full_del})={f_del:.4g} (expected delocalized), eps={eps:.4g}")

    brackets = {}
    loc, dels = full_loc, full_del
    for i, N in enumerate(N_sequence):
        if i > 0:
            # widen by one width each side (clamped) and re-validate at this N
            pad = abs(dels - loc)
            loc_c = _clamp_between(loc - sign * pad, full_loc, full_del)
            del_c = _clamp_between(dels + sign * pad, full_loc, full_del)
            ok, _, _ = probe(loc_c, N)
            loc = loc_c if ok else full_loc
            ok, _, _ = probe(del_c, N)
            dels = del_c if not ok else full_del
        while abs(dels - loc) > target_width:
            mid = 0.5 * (loc + dels)
            ok, _, eps = probe(mid, N)
            if ok:
                loc = mid
            else:
                dels = mid
        brackets[N] = (min(loc, dels), max(loc, dels), eps)
    h_lo, h_hi, eps = brackets[N_sequence[-1]]
    mid = 0.5 * (h_lo + h_hi)
    return CriticalPointEstimate(coupling, h_lo, h_hi, mid, N_sequence, eps,
                                 brackets)


def _clamp_between(x: float, a: float, b: float) -> float:
    lo, hi = min(a, b), max(a, b)
    return min(max(x, lo), hi)


# ---------------------------------------------------------------------------
# fractional moments and change-of-measure Monte Carlo


def fractional_moment(model: CorrelationModel, law: RenewalLaw, kind: str,
                      coupling: float, h: float, zeta: float, k: int,
                      replicas: int = 10000, seed: int = 0,
                      boundary: str = "constrained", workers: int = 1):
    """(estimate, stderr) of E[Z^zeta] at size k, pooled stably."""
    if not 0.0 < zeta <= 1.0:
        raise DomainError("zeta must lie in (0, 1]")
    lz = _quenched_logZ_batch(model, law, kind, coupling, h, int(k), replicas,
                              seed, boundary, workers)
    e = zeta * lz
    mx = float(e.max())
    w = np.exp(e - mx)
    scale = math.exp(mx)
    return float(w.mean()) * scale, float(w.std(ddof=1) / math.sqrt(replicas)) * scale


def rn_cost_mc(model: CorrelationModel, delta: float, zeta: float, k: int,
               replicas: int = 100000, seed: int = 0):
    """Monte Carlo of the tilt moment cost, to cross-check the closed form.

    Samples the constant-shift tilted field (mean +delta at each of the k
    sites), evaluates (dP/dP~)^{1/(1-zeta)} with the exact density ratio,
    and returns (mean^{1-zeta}, delta-method stderr).
    """
    if not 0.0 < zeta < 1.0:
        raise DomainError("zeta must lie in (0, 1)")
    k = int(k)
    x = toeplitz_solve_ones(model, k).solution  # Ups_k^{-1} 1_k
    qf = float(x.sum())
    vals = np.empty(replicas)
    done = 0
    while done < replicas:
        count = min(50000, replicas - done)
        om = sample_paths(model, k, seed, count, replica_start=done) + delta
        expo = (-delta * (om @ x) + 0.5 * delta ** 2 * qf) / (1.0 - zeta)
        vals[done:done + count] = np.exp(expo)
        done += count
    mean = float(vals.mean())
    se_mean = float(vals.std(ddof=1) / math.sqrt(replicas))
    est = mean ** (1.0 - zeta)
    return est, (1.0 - zeta) * mean ** (-zeta) * se_mean


# ---------------------------------------------------------------------------
# two-replica interpolation margin


@dataclass
class InterpolationReport:
    log_A: float
    log_B: float
    log_A_se: float
    log_B_se: float
    quenched_F_N: float
    quenched_se: float
    annealed_F_N: float
    M: float
    N: int
    margin: float
    margin_se: float
    method: str


def _mc_two_replica_logAB(model, law, beta, h, N, M, replicas, seed):
    """Monte Carlo log A_N, log B_N over pairs of independent trajectories."""
    radius = min(model.truncation_radius, N - 1) if model.kind != "iid" else 0
    rhos = rho_array(model, max(radius, 1))
    cpl = (M + 1.0) * beta ** 2
    la, lb = np.full(replicas, -np.inf), np.full(replicas, -np.inf)
    got_b = 0
    for r in range(replicas):
        t1 = sample_signed_trajectory(law, N, _subseed(seed, "A1"), replica=r)
        t2 = sample_signed_trajectory(law, N, _subseed(seed, "A2"), replica=r)
        d1 = t1.contacts.astype(np.float64)
        d2 = t2.contacts.astype(np.float64)

        def own(d):
            q = rhos[0] * d.sum()
            for j in range(1, radius + 1):
                q += 2.0 * rhos[j] * float(np.dot(d[j:], d[:-j]))
            return 0.5 * beta ** 2 * q + h * d.sum()

        cross = rhos[0] * float(np.dot(d1, d2))
        for j in range(1, radius + 1):
            cross += rhos[j] * (float(np.dot(d1[j:], d2[:-j]))
                                + float(np.dot(d2[j:], d1[:-j])))
        la[r] = cpl * cross + own(d1) + own(d2)
        if d1[-1] == 1.0 and d2[-1] == 1.0:
            lb[r] = own(d1) + own(d2)
            got_b += 1
    if got_b < 2:
        raise CapabilityError("too few endpoint-constrained pairs for log B")

    def logmeanexp_se(vals):
        mx = float(vals.max())
        w = np.exp(vals - mx)  # exact zeros where vals = -inf
        mean = float(w.mean())
        se = float(w.std(ddof=1) / math.sqrt(len(w)))
        return mx + math.log(mean), se / mean

    logA, seA = logmeanexp_se(la)
    logB, seB = logmeanexp_se(lb)
    return logA, seA, logB, seB


def two_replica_quantities(model: CorrelationModel, law: RenewalLaw, beta: float,
                           h: float, N: int, M: float, replicas: int = 2000,
                           seed: int = 0, method: str = "auto",
                           workers: int = 1) -> InterpolationReport:
    """Evaluate the finite-size interpolation inequality

        F_N >= F_{a,N} - e^{1/M}/M * (log A_N - log B_N) / (2N)

    and report the signed margin (>= 0 up to Monte Carlo error).
    """
    N = int(N)
    if N > 512:
        raise DomainError("two-replica budget is N <= 512")
    if method == "auto":
        method = "pair-transfer" if model.is_finite_range else "mc"
    if method == "pair-transfer":
        logA, logB = two_replica_logAB(model, law, beta, h, N, M)
        seA = seB = 0.0
    elif method == "mc":
        logA, seA, logB, seB = _mc_two_replica_logAB(model, law, beta, h, N, M,
                                                     replicas, seed)
    else:
        raise DomainError(f"unknown method {method!r}")
    fq = free_energy(model, law, "pinning", beta, h, N, replicas=replicas,
                     seed=_subseed(seed, "FQ"), method="quenched-mc",
                     workers=workers)
    fa = free_energy(model, law, "pinning", beta, h, N, method="annealed-exact")
    fac = math.exp(1.0 / M) / M / (2.0 * N)
    rhs = fa.value - fac * (logA - logB)
    margin = fq.value - rhs
    margin_se = math.sqrt(fq.stderr ** 2 + (fac * seA) ** 2 + (fac * seB) ** 2)
    return InterpolationReport(logA, logB, seA, seB, fq.value, fq.stderr,
                               fa.value, M, N, margin, margin_se, method)


# ---------------------------------------------------------------------------
# Gaussian decoupling probe


@dataclass
class DecouplingReport:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    C_blocks: float
    margin: float
    margin_se: float


def block_correlation(model: CorrelationModel, block_i, block_j) -> float:
    """C(I, J) = sum_{i in I, j in J} |rho_{ij}|, exactly."""
    bi = np.asarray(sorted(block_i), dtype=np.int64)
    bj = np.asarray(sorted(block_j), dtype=np.int64)
    if np.intersect1d(bi, bj).size:
        raise DomainError("blocks must be disjoint")
    lags = np.abs(bi[:, None] - bj[None, :])
    return float(np.abs(rho_array(model, int(lags.max()))[lags]).sum())


def decoupling_check(model: CorrelationModel, law: RenewalLaw, lam: float,
                     block_i, block_j, replicas: int = 4000, seed: int = 0,
                     h: float = 0.0) -> DecouplingReport:
    """Monte Carlo test of E[f g] <= e^{(2 lam)^2 C(I,J)} E[f] E[g]
    with f, g the copolymer partition functions of the two blocks."""
    bi = np.asarray(sorted(block_i), dtype=np.int64)
    bj = np.asarray(sorted(block_j), dtype=np.int64)
    C = block_correlation(model, bi, bj)
    span = int(max(bi.max(), bj.max()))
    lo = int(min(bi.min(), bj.min()))
    om = sample_paths(model, span - lo + 1, _subseed(seed, "dec"), replicas)

    def block_Z(block):
        sl = om[:, block - lo]
        return np.exp(copolymer_logZ(sl, law, lam, h, "constrained"))

    f = block_Z(bi)
    g = block_Z(bj)
    lhs = float((f * g).mean())
    lhs_se = float((f * g).std(ddof=1) / math.sqrt(replicas))
    half = replicas // 2
    ef, ef_se = float(f[:half].mean()), float(f[:half].std(ddof=1) / math.sqrt(half))
    eg, eg_se = float(g[half:].mean()), float(g[half:].std(ddof=1) / math.sqrt(half))
    fac = math.exp(4.0 * lam ** 2 * C)
    rhs = fac * ef * eg
    rhs_se = fac * math.sqrt((ef_se * eg) ** 2 + (eg_se * ef) ** 2)
    margin = rhs - lhs
    return DecouplingReport(lhs, rhs, lhs_se, rhs_se, C, margin,
                            math.sqrt(lhs_se ** 2 + rhs_se ** 2))


# ---------------------------------------------------------------------------
# ergodic pair-correlation averages


def pair_correlation_sum(model: CorrelationModel, x, y=None,
                         radius_cap: int = 4096) -> float:
    """(1/N) sum_{n,m<=N} rho_{nm} x_n y_m, lags capped at radius_cap."""
    x = np.asarray(x, dtype=np.float64)
    y = x if y is None else np.asarray(y, dtype=np.float64)
    N = len(x)
    radius = min(model.range_radius, N - 1, radius_cap)
    rhos = rho_array(model, radius)
    tot = rhos[0] * float(np.dot(x, y))
    for j in range(1, radius + 1):
        if rhos[j] == 0.0:
            continue
        tot += rhos[j] * (float(np.dot(x[j:], y[:-j])) + float(np.dot(y[j:], x[:-j])))
    return tot / N


def batch_mean_se(values: np.ndarray, blocks: int = 100):
    """(mean, stderr) of a long stationary stream by block means."""
    values = np.asarray(values, dtype=np.float64)
    n = (len(values) // blocks) * blocks
    bm = values[:n].reshape(blocks, -1).mean(axis=1)
    return float(bm.mean()), float(bm.std(ddof=1) / math.sqrt(blocks))


@dataclass
class ErgodicLimitResult:
    name: str
    measured: float
    stderr: float
    reference: float

    @property
    def deviation_se(self) -> float:
        return abs(self.measured - self.reference) / self.stderr


def ergodic_limits_check(model: CorrelationModel, law: RenewalLaw, N: int,
                         seed: int = 0, blocks: int = 100):
    """The three stationary pair-correlation limits, measured vs predicted.

    sign-sign      -> ups/4 + ccop/4
    contact-contact -> cpin/mu
    two replicas    -> ups/mu^2
    """
    from .constants import c_rho_cop, c_rho_pin
    ups = upsilon_infinity(model)
    ccop = c_rho_cop(model, law)
    cpin = c_rho_pin(model, law)
    mu = law.mu
    t1 = sample_signed_trajectory(law, N, _subseed(seed, "erg1"))
    t2 = sample_signed_trajectory(law, N, _subseed(seed, "erg2"))
    radius = min(model.range_radius, 4096)  # tail bias << the Monte Carlo error
    rhos = rho_array(model, radius)

    def windowed(x, y):
        """Per-site stream s_n = sum_j rho_j x_n y_{n+j} (both directions)."""
        x = x.astype(np.float64)
        y = y.astype(np.float64)
        s = rhos[0] * x * y
        for j in range(1, min(radius, N - 1) + 1):
            if rhos[j] == 0.0:
                continue
            s[:-j] += rhos[j] * x[:-j] * y[j:]
            s[j:] += rhos[j] * x[j:] * y[:-j]
        return s

    out = []
    for name, x, y, ref in [
        ("sign-sign", t1.delta, t1.delta, 0.25 * ups + 0.25 * ccop),
        ("contact-contact", t1.contacts, t1.contacts, cpin / mu),
        ("two-replica-contact", t1.contacts, t2.contacts, ups / mu ** 2),
    ]:
        mean, se = batch_mean_se(windowed(np.asarray(x), np.asarray(y)), blocks)
        out.append(ErgodicLimitResult(name, mean, se, ref))
    return out
