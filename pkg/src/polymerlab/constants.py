"""Closed-form constants and weak-coupling slopes of the two models.

Everything here is a deterministic function of (CorrelationModel,
RenewalLaw) with a certified truncation error, evaluated from the series

    ccop = sum_{n in Z} rho_n kappa_n          (excursion-sign coupling)
    cpin = sum_{n in Z} rho_n P(|n| in tau)    (contact coupling)

and assembled into the predicted critical-curve slopes.  No simulation
lives here; the estimators module measures, this module predicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlation import CorrelationModel, abs_tail_bound, rho, rho_array, upsilon_infinity
from .errors import CapabilityError, DomainError
from .renewal import RenewalLaw, kappa_array, renewal_mass_prefix

SERIES_RADIUS_CAP = 2_000_000


def _series_radius(model: CorrelationModel, tol: float) -> int:
    """Smallest radius whose absolute correlation tail is below tol."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    if model.is_finite_range:
        return model.range_radius
    lo, hi = 0, 1
    while abs_tail_bound(model, hi) > tol:
        hi *= 2
        if hi > SERIES_RADIUS_CAP:
            raise CapabilityError(
                f"correlation tail decays too slowly to certify tol={tol:g} "
                f"within radius {SERIES_RADIUS_CAP}; increase tol")
    while lo < hi:
        mid = (lo + hi) // 2
        if abs_tail_bound(model, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def c_rho_cop(model: CorrelationModel, law: RenewalLaw, tol: float = 1e-10) -> float:
    """sum_n rho_n kappa_n with truncation error <= tol (kappa <= 1)."""
    if law.mu_unreliable:
        raise DomainError("copolymer coupling constant needs a reliable finite mean")
    radius = min(_series_radius(model, tol), law.support)
    kap = kappa_array(law, radius)
    rhos = rho_array(model, radius)
    return float(kap[0] + 2.0 * np.dot(rhos[1:], kap[1:]))


def c_rho_pin(model: CorrelationModel, law: RenewalLaw, tol: float = 1e-10) -> float:
    """sum_n rho_n P(|n| in tau) with truncation error <= tol (u <= 1)."""
    radius = _series_radius(model, tol)
    if radius > 500_000:
        raise CapabilityError(
            f"contact coupling constant needs the renewal mass function up to "
            f"{radius}; increase tol")
    u = renewal_mass_prefix(law, radius)
    rhos = rho_array(model, radius)
    return float(u[0] + 2.0 * np.dot(rhos[1:], u[1:]))


@dataclass
class SlopeReport:
    """Predicted weak-coupling behaviour of both critical curves."""

    upsilon_inf: float
    c_rho_cop: float
    c_rho_pin: float
    monthus: float            # lower bound on h_c^cop(lam)/lam
    cop_slope: float          # lim h_c^cop(lam)/lam
    pin_gap_slope: float      # lim (h_c^pin - h_a^pin)/beta^2
    pin_ann_slope: float      # lim h_a^pin(beta)/beta^2
    ann_cop_lb: float         # lower bound on h_a^cop(lam)/lam
    monthus_criterion_holds: bool
    alpha: float
    mu: float
    error_bounds: dict = field(default_factory=dict)

    def as_flat_dict(self) -> dict:
        out = {
            "upsilon_inf": self.upsilon_inf,
            "c_rho_cop": self.c_rho_cop,
            "c_rho_pin": self.c_rho_pin,
            "monthus": self.monthus,
            "cop_slope": self.cop_slope,
            "pin_gap_slope": self.pin_gap_slope,
            "pin_ann_slope": self.pin_ann_slope,
            "ann_cop_lb": self.ann_cop_lb,
            "monthus_criterion_holds": self.monthus_criterion_holds,
            "alpha": self.alpha,
            "mu": self.mu,
        }
        for k, v in self.error_bounds.items():
            out[k + "_err"] = v
        return out


def slope_report(model: CorrelationModel, law: RenewalLaw,
                 tol: float = 1e-10) -> SlopeReport:
    ups = upsilon_infinity(model)
    ccop = c_rho_cop(model, law, tol)
    cpin = c_rho_pin(model, law, tol)
    alpha = law.alpha
    monthus = ups / (1.0 + alpha)
    second = 0.5 * ups / (1.0 + alpha) + 0.5 * ccop
    cop = max(monthus, second)
    pin_gap = (ups / (2.0 * law.mu)) * alpha / (1.0 + alpha)
    pin_ann = -0.5 * cpin
    ann_lb = ups + 0.5 * max(ccop - ups, 0.0)
    # error intervals: series tails plus the 1e-10 budget on ups
    e_ups = 1e-10 if not model.is_finite_range else 0.0
    errs = {
        "upsilon_inf": e_ups,
        "c_rho_cop": tol,
        "c_rho_pin": tol,
        "monthus": e_ups / (1.0 + alpha),
        "cop_slope": max(e_ups / (1.0 + alpha), 0.5 * e_ups / (1.0 + alpha) + 0.5 * tol),
        "pin_gap_slope": e_ups / (2.0 * law.mu),
        "pin_ann_slope": 0.5 * tol,
        "ann_cop_lb": e_ups + 0.5 * (tol + e_ups),
    }
    holds = monthus > second + errs["cop_slope"]
    return SlopeReport(ups, ccop, cpin, monthus, cop, pin_gap, pin_ann, ann_lb,
                       holds, alpha, law.mu, errs)


def monthus_criterion(model: CorrelationModel, law: RenewalLaw,
                      tol: float = 1e-10, probabilistic: bool = True):
    """(lhs, threshold, holds) for the Monthus-branch dominance test.

    lhs = ccop / ups compared against 1/(1+alpha).  For non-negative
    correlations the lhs equals P(U >= |V|) for the independent pair with
    P(U = n) = P(tau_1 >= n+1)/mu and P(V = n) = rho_n / ups; that identity
    is evaluated explicitly and asserted as a cross-check.
    """
    ups = upsilon_infinity(model)
    lhs = c_rho_cop(model, law, tol) / ups
    threshold = 1.0 / (1.0 + law.alpha)
    if probabilistic:
        radius = _series_radius(model, min(tol, 1e-8))
        rhos = rho_array(model, radius)
        if np.any(rhos < 0.0):
            raise DomainError("probabilistic form needs non-negative correlations")
        # independent route: P(U >= |V|) = sum_u P(U=u) P(|V| <= u)
        G = law.support
        age = law.survival_geq[1: G + 1] / law.mu          # P(U = u), u = 0..G-1
        cdf_v = np.ones(G)
        m = min(radius + 1, G)
        cdf_v[:m] = (1.0 + 2.0 * np.cumsum(np.concatenate([[0.0], rhos[1:m]]))) / ups
        p_u_geq_v = float(np.dot(age, cdf_v))
        if abs(p_u_geq_v - lhs) > (10 * tol + 1e-11) / min(ups, 1.0):
            raise AssertionError(
                f"probability identity violated: {p_u_geq_v!r} vs {lhs!r}")
    return lhs, threshold, lhs < threshold
