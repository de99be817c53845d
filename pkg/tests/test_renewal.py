import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta as riemann_zeta

from polymerlab.errors import DomainError
from polymerlab.renewal import (age_distribution, backward_chain_stationary,
                                build_renewal_law, custom_law,
                                k1_heavy_zeta_law, kappa, kappa_array,
                                law_from_config, law_to_config, parse_law,
                                renewal_mass, renewal_mass_prefix,
                                sample_signed_trajectory)


def test_build_zeta_law(law15):
    assert law15.masses.sum() == pytest.approx(1.0, abs=1e-14)
    n = np.arange(1, law15.support + 1, dtype=float)
    z = (n ** -2.5).sum()
    assert law15.K(1) == pytest.approx(1.0 / z, rel=1e-12)
    assert law15.K(law15.support + 5) == 0.0


def test_mu_against_zeta_ratio_oracle():
    """Untruncated mean is zeta(alpha)/zeta(1+alpha); the truncated mean must
    approach it from below within the integral tail brackets."""
    ref = riemann_zeta(1.5) / riemann_zeta(2.5)
    for G in (10_000, 100_000, 1_000_000):
        law = build_renewal_law(1.5, "zeta", G)
        # truncation moves both numerator and denominator; crude bracket
        num_tail = G ** -0.5 / 0.5
        assert abs(law.mu - ref) <= 3.0 * num_tail
        assert law.mu_truncation_error <= 3.0 * num_tail
    assert abs(build_renewal_law(1.5).mu - ref) < 5e-3


def test_zeta_truncated_variant():
    law = build_renewal_law(1.5, "zeta-truncated", 1000)
    assert law.masses.sum() == pytest.approx(1.0, abs=1e-14)
    # below the cutoff the masses are the untruncated ones
    assert law.K(3) == pytest.approx(3.0 ** -2.5 / riemann_zeta(2.5), rel=1e-12)
    assert law.K(1000) > 1000.0 ** -2.5 / riemann_zeta(2.5)  # lumped tail


def test_mu_unreliable_flag():
    assert build_renewal_law(0.5, "zeta", 5000).mu_unreliable
    assert not build_renewal_law(1.5).mu_unreliable
    with pytest.raises(DomainError):
        kappa(build_renewal_law(0.5, "zeta", 5000), 1)


def test_custom_law_validation():
    with pytest.raises(DomainError):
        custom_law([0.5, 0.4], alpha=1.5)  # does not sum to 1
    law = custom_law([0.25, 0.75], alpha=1.5)
    assert law.mu == pytest.approx(1.75)


def test_renewal_mass_basics(law15):
    assert renewal_mass(law15, 0) == 1.0
    assert renewal_mass(law15, 1) == pytest.approx(law15.K(1), abs=0.0)
    u2 = law15.K(1) ** 2 + law15.K(2)
    assert renewal_mass(law15, 2) == pytest.approx(u2, rel=1e-14)


def test_renewal_mass_converges_to_1_over_mu(law15):
    assert renewal_mass(law15, 10_000) == pytest.approx(1.0 / law15.mu, rel=0.01)


def test_renewal_mass_prefix_is_consistent(law15):
    pre = renewal_mass_prefix(law15, 50)
    assert pre[37] == renewal_mass(law15, 37)


def test_kappa_values(law15):
    assert kappa(law15, 0) == 1.0
    assert kappa(law15, 1) == pytest.approx(1.0 - 1.0 / law15.mu, rel=1e-12)
    assert kappa(law15, -1) == kappa(law15, 1)


@given(st.integers(min_value=0, max_value=300))
@settings(max_examples=50)
def test_kappa_monotone_in_unit_interval(law15, n):
    k1, k2 = kappa(law15, n), kappa(law15, n + 1)
    assert 0.0 <= k2 <= k1 <= 1.0


def test_kappa_array_matches_scalar(law15):
    arr = kappa_array(law15, 20)
    for n in range(21):
        assert arr[n] == pytest.approx(kappa(law15, n), abs=0.0)


def test_stationary_age_chain(law15):
    # total mass one, both signs
    ages = np.arange(0, law15.support)
    tot = law15.survival_geq[1:law15.support + 1].sum() / law15.mu
    assert tot == pytest.approx(1.0, abs=1e-10)
    assert backward_chain_stationary(law15, 0, sign=0) == pytest.approx(
        1.0 / (2.0 * law15.mu), rel=1e-14)
    assert backward_chain_stationary(law15, 0) == pytest.approx(
        1.0 / law15.mu, rel=1e-14)
    # stationarity equations of the age kernel: pi P = pi
    s = law15.survival_geq
    pi = s[1:200] / law15.mu
    to_zero = sum(pi[a] * law15.K(a + 1) / s[a + 1] for a in range(150))
    assert to_zero == pytest.approx(
        sum(law15.K(a + 1) / law15.mu for a in range(150)), rel=1e-12)
    for a in range(0, 30):
        flow = pi[a] * s[a + 2] / s[a + 1]
        assert flow == pytest.approx(pi[a + 1], rel=1e-12)


def test_age_occupation_matches_stationary_law(law15):
    traj = sample_signed_trajectory(law15, 1_000_000, seed=11)
    pts = traj.renewal_points
    ages = np.zeros(traj.length + 1, dtype=np.int64)
    last = 0
    contacts = np.zeros(traj.length + 1, dtype=bool)
    contacts[pts] = True
    for n in range(1, traj.length + 1):
        last = n if contacts[n] else last
        ages[n] = n - last
    for a in range(6):
        emp = (ages[1:] == a).mean()
        ref = age_distribution(law15, a)
        se = math.sqrt(ref * (1 - ref) / traj.length) * 3.0  # generous: ignores mixing
        assert abs(emp - ref) <= 5 * se + 5e-4


def test_trajectory_statistics(law15):
    traj = sample_signed_trajectory(law15, 1_000_000, seed=3)
    frac = traj.contacts.mean()
    se = math.sqrt(frac * (1 - frac) / traj.length)
    # contact fraction -> 1/mu; blocks are correlated, allow a mixing factor
    assert abs(frac - 1.0 / law15.mu) <= 3 * se * 5
    mean_delta = traj.delta.mean()
    assert abs(mean_delta - 0.5) <= 3 * 2.0 / math.sqrt(traj.length / law15.mu)


def test_delta_constant_on_excursions(law15):
    traj = sample_signed_trajectory(law15, 5000, seed=9)
    pts = traj.renewal_points
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        seg = traj.delta[a:b]  # sites a+1 .. b
        assert len(set(seg.tolist())) == 1


def test_trajectory_deterministic(law15):
    t1 = sample_signed_trajectory(law15, 2000, seed=5, replica=3)
    t2 = sample_signed_trajectory(law15, 2000, seed=5, replica=3)
    assert np.array_equal(t1.delta, t2.delta)
    assert np.array_equal(t1.renewal_points, t2.renewal_points)


def test_k1_heavy_law():
    law = k1_heavy_zeta_law(0.95, 1.5, 10_000)
    assert law.K(1) == pytest.approx(0.95, rel=1e-12)
    assert law.masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert law.mu < 1.3


def test_law_config_roundtrip(law15):
    assert law_from_config(law_to_config(law15)).mu == law15.mu
    custom = k1_heavy_zeta_law(0.9, 1.5, 50)
    again = law_from_config(law_to_config(custom))
    assert np.allclose(again.masses, custom.masses)
    assert parse_law("zeta:1.5:1000").support == 1000
    assert parse_law("k1zeta:0.9:1.5:50").K(1) == pytest.approx(0.9)
