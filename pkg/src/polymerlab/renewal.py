"""Heavy-tailed renewal laws, signed trajectories, and the age chain.

Inter-arrival masses live on a finite support 1..G (exact recursions need
finite support), normalized to sum to one exactly.  The built-in family has
K(n) proportional to n^{-(1+alpha)}.

Age-chain normalization: the stationary weight of age a (both signs
together) is P(tau_1 >= a+1) / mu, which sums to one over a >= 0 because
sum_{a>=0} P(tau_1 >= a+1) = mu.  The variant with P(tau_1 >= a) in place
of P(tau_1 >= a+1) does not normalize and is deliberately not used; see
kappa() whose value at 0 must be exactly 1 under the convention here.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as riemann_zeta

from .errors import DomainError

DEFAULT_SUPPORT = 100_000

VARIANTS = ("zeta", "zeta-truncated", "custom")


@dataclass(frozen=True, eq=False)
class RenewalLaw:
    """Finite-support inter-arrival law with cached derived arrays.

    masses[i] = K(i+1); survival_geq[n] = P(tau_1 >= n) for n = 0..G+1.
    """

    alpha: float
    variant: str
    masses: np.ndarray
    mu: float
    mu_truncation_error: float
    mu_unreliable: bool
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def support(self) -> int:
        return len(self.masses)

    def K(self, n: int) -> float:
        return float(self.masses[n - 1]) if 1 <= n <= self.support else 0.0

    @property
    def survival_geq(self) -> np.ndarray:
        """P(tau_1 >= n) indexed by n, length G+2 (entry G+1 is 0)."""
        s = self._cache.get("survival")
        if s is None:
            rev = np.cumsum(self.masses[::-1])[::-1]
            s = np.zeros(self.support + 2)
            s[1:self.support + 1] = rev
            s[0] = 1.0
            s[1] = 1.0  # recurrent: exact, guards rounding in the cumsum
            self._cache["survival"] = s
        return s

    def survival_gt(self, gap: int) -> float:
        """P(tau_1 > gap)."""
        if gap <= 0:
            return 1.0
        if gap >= self.support:
            return 0.0
        return float(self.survival_geq[gap + 1])

    @property
    def log_masses(self) -> np.ndarray:
        lm = self._cache.get("log_masses")
        if lm is None:
            with np.errstate(divide="ignore"):
                lm = np.log(self.masses)
            self._cache["log_masses"] = lm
        return lm

    @property
    def masses_rev(self) -> np.ndarray:
        mr = self._cache.get("masses_rev")
        if mr is None:
            mr = self.masses[::-1].copy()
            self._cache["masses_rev"] = mr
        return mr

    @property
    def cdf(self) -> np.ndarray:
        c = self._cache.get("cdf")
        if c is None:
            c = np.cumsum(self.masses)
            c[-1] = 1.0
            self._cache["cdf"] = c
        return c

    def label(self) -> str:
        return f"{self.variant}:{self.alpha:g}:G={self.support}"


def build_renewal_law(alpha: float, variant: str = "zeta",
                      G: int = DEFAULT_SUPPORT) -> RenewalLaw:
    """Build the polynomial-tail law K(n) ~ n^{-(1+alpha)} on support 1..G.

    'zeta' renormalizes the truncated masses to total mass one;
    'zeta-truncated' keeps the untruncated masses below G and lumps the
    remaining tail mass onto K(G).
    """
    alpha = float(alpha)
    G = int(G)
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    if G < 2:
        raise DomainError("support cutoff G must be >= 2")
    if variant not in ("zeta", "zeta-truncated"):
        raise DomainError(f"unknown variant {variant!r}; use custom_law for explicit masses")
    n = np.arange(1, G + 1, dtype=np.float64)
    w = n ** (-(1.0 + alpha))
    if variant == "zeta":
        masses = w / w.sum()
    else:
        z = float(riemann_zeta(1.0 + alpha)) if alpha > 0 else None
        if z is None:
            raise DomainError("zeta-truncated needs alpha > 0")
        masses = w / z
        masses[-1] += 1.0 - masses.sum()
    mu = float(np.dot(n, masses))
    if alpha > 1:
        mu_inf = float(riemann_zeta(alpha) / riemann_zeta(1.0 + alpha))
        mu_err = abs(mu - mu_inf)
        unreliable = False
    else:
        mu_err = np.inf
        unreliable = True
    return RenewalLaw(alpha, variant, masses, mu, mu_err, unreliable)


def custom_law(masses, alpha: float) -> RenewalLaw:
    """Law with explicit masses K(1)..K(G); alpha records the tail exponent."""
    masses = np.asarray(masses, dtype=np.float64)
    if masses.ndim != 1 or len(masses) < 1:
        raise DomainError("masses must be a 1-d sequence")
    if np.any(masses < 0):
        raise DomainError("masses must be non-negative")
    tot = masses.sum()
    if abs(tot - 1.0) > 1e-9:
        raise DomainError(f"masses must sum to 1 (got {tot!r})")
    masses = masses / tot
    n = np.arange(1, len(masses) + 1, dtype=np.float64)
    mu = float(np.dot(n, masses))
    return RenewalLaw(float(alpha), "custom", masses, mu, 0.0, False)


def k1_heavy_zeta_law(k1: float, alpha: float, G: int = DEFAULT_SUPPORT) -> RenewalLaw:
    """Mass k1 on gap 1, the rest shaped like the zeta tail on 2..G."""
    if not 0.0 < k1 < 1.0:
        raise DomainError("k1 must be in (0, 1)")
    n = np.arange(1, G + 1, dtype=np.float64)
    w = n ** (-(1.0 + float(alpha)))
    w[0] = 0.0
    masses = w * ((1.0 - k1) / w.sum())
    masses[0] = k1
    masses /= masses.sum()
    return custom_law(masses, alpha)


def law_to_config(law: RenewalLaw) -> dict:
    cfg = {"alpha": repr(law.alpha), "variant": law.variant, "G": str(law.support)}
    if law.variant == "custom":
        cfg["masses"] = ",".join(repr(float(m)) for m in law.masses)
    return cfg


def law_from_config(cfg: dict) -> RenewalLaw:
    if cfg.get("variant") == "custom":
        masses = [float(x) for x in cfg["masses"].split(",")]
        return custom_law(masses, float(cfg["alpha"]))
    return build_renewal_law(float(cfg["alpha"]), cfg.get("variant", "zeta"),
                             int(cfg.get("G", DEFAULT_SUPPORT)))


def parse_law(spec: str) -> RenewalLaw:
    """Parse the compact spelling: zeta:1.5 | zeta:1.5:200000 | zeta-trunc:1.5[:G]."""
    parts = spec.strip().split(":")
    tag = parts[0]
    if tag in ("zeta", "zeta-truncated", "zeta-trunc"):
        variant = "zeta" if tag == "zeta" else "zeta-truncated"
        alpha = float(parts[1])
        G = int(parts[2]) if len(parts) > 2 else DEFAULT_SUPPORT
        return build_renewal_law(alpha, variant, G)
    if tag == "k1zeta":
        k1, alpha = float(parts[1]), float(parts[2])
        G = int(parts[3]) if len(parts) > 3 else DEFAULT_SUPPORT
        return k1_heavy_zeta_law(k1, alpha, G)
    raise DomainError(f"cannot parse renewal law {spec!r}")


# ---------------------------------------------------------------------------
# renewal mass function and age-chain quantities


def renewal_mass(law: RenewalLaw, n: int) -> float:
    """u(n) = P(n is a renewal point); memoized prefix recursion."""
    n = int(n)
    if n < 0:
        raise DomainError("n must be >= 0")
    u = law._cache.get("u")
    if u is None or len(u) <= n:
        with law._lock:
            u = law._cache.get("u")
            have = len(u) if u is not None else 0
            if have <= n:
                new = np.empty(max(n + 1, 2 * have, 256))
                if have:
                    new[:have] = u
                else:
                    new[0] = 1.0
                    have = 1
                K = law.masses
                G = law.support
                for m in range(have, len(new)):
                    lo = max(0, m - G)
                    # sum_{g} K(g) u(m-g) as a reversed-slice dot
                    new[m] = np.dot(K[:m - lo][::-1], new[lo:m])
                law._cache["u"] = new
                u = new
    return float(u[n])


def renewal_mass_prefix(law: RenewalLaw, n: int) -> np.ndarray:
    """u(0..n) as an array (computes and caches the prefix)."""
    renewal_mass(law, n)
    return law._cache["u"][: n + 1]


def _kappa_suffix(law: RenewalLaw) -> np.ndarray:
    t = law._cache.get("kappa_suffix")
    if t is None:
        s = law.survival_geq
        # T[k] = sum_{j >= k} P(tau_1 >= j+1), for k = 0..G (beyond: 0)
        tail = s[1:law.support + 1]
        t = np.concatenate([np.cumsum(tail[::-1])[::-1], [0.0]])
        law._cache["kappa_suffix"] = t
    return t


def kappa(law: RenewalLaw, n: int) -> float:
    """kappa_n = (1/mu) sum_{k >= |n|} P(tau_1 >= k+1) in [0, 1].

    Equals P(U >= |n|) where P(U = k) = P(tau_1 >= k+1)/mu is the age-chain
    stationary marginal; kappa_0 = 1 exactly.
    """
    if law.mu_unreliable:
        raise DomainError("kappa needs a reliable finite mean (alpha > 1 or custom law)")
    k = abs(int(n))
    if k == 0:
        return 1.0
    t = _kappa_suffix(law)
    if k >= len(t):
        return 0.0
    return float(t[k] / law.mu)


def kappa_array(law: RenewalLaw, nmax: int) -> np.ndarray:
    if law.mu_unreliable:
        raise DomainError("kappa needs a reliable finite mean (alpha > 1 or custom law)")
    t = _kappa_suffix(law)
    out = np.zeros(nmax + 1)
    m = min(nmax + 1, len(t))
    out[:m] = t[:m] / law.mu
    out[0] = 1.0
    return out


def age_distribution(law: RenewalLaw, n: int) -> float:
    """P(U = n) = P(tau_1 >= n+1)/mu, the stationary age marginal."""
    if law.mu_unreliable:
        raise DomainError("stationary age law needs a reliable finite mean")
    n = int(n)
    if n < 0 or n >= law.support:
        return 0.0
    return float(law.survival_geq[n + 1] / law.mu)


def backward_chain_stationary(law: RenewalLaw, a: int, sign: int | None = None) -> float:
    """Stationary weight of age a in the signed age chain.

    Summed over the two signs this is P(tau_1 >= a+1)/mu; with a specific
    sign it is half that (signs are symmetric fair coins).
    """
    w = age_distribution(law, a)
    return w if sign is None else 0.5 * w


# ---------------------------------------------------------------------------
# trajectory sampling


@dataclass
class SignedTrajectory:
    """Renewal points with excursion signs on sites 1..N.

    delta[i] and contacts[i] refer to site i+1; the final (possibly
    incomplete) excursion keeps its sign.
    """

    renewal_points: np.ndarray
    signs: np.ndarray
    delta: np.ndarray
    contacts: np.ndarray
    length: int


def _rng(seed: int, replica: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(replica & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_gaps(law: RenewalLaw, total: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. gaps from K until the partial sums exceed `total`."""
    cdf = law.cdf
    out = []
    reached = 0
    est = max(int(total / law.mu * 1.25) + 16, 16)
    while reached < total:
        u = rng.random(est)
        g = np.searchsorted(cdf, u, side="right") + 1
        out.append(g)
        reached += int(g.sum())
        est = max(int((total - reached) / law.mu * 1.25) + 16, 16)
    gaps = np.concatenate(out)
    cut = np.searchsorted(np.cumsum(gaps), total, side="left") + 1
    return gaps[:cut]


def sample_signed_trajectory(law: RenewalLaw, N: int, seed: int,
                             replica: int = 0) -> SignedTrajectory:
    """Renewal points in [0, N] plus fair-coin excursion signs."""
    N = int(N)
    if N < 1:
        raise DomainError("N must be >= 1")
    rng = _rng(seed, replica)
    gaps = sample_gaps(law, N, rng)
    pts = np.concatenate([[0], np.cumsum(gaps)])
    signs = rng.integers(0, 2, size=len(gaps))
    delta = np.repeat(signs, gaps)[:N].astype(np.int8)
    contacts = np.zeros(N, dtype=np.int8)
    inside = pts[(pts >= 1) & (pts <= N)]
    contacts[inside.astype(np.int64) - 1] = 1
    return SignedTrajectory(pts[pts <= N], signs, delta, contacts, N)
