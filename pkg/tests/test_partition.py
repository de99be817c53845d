import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymerlab.correlation import finite_range_model, iid_model, polynomial_model
from polymerlab.disorder import sample_paths
from polymerlab.errors import CapabilityError, DomainError
from polymerlab.partition import (copolymer_annealed_iid_logZ,
                                  copolymer_annealed_logZ, copolymer_logZ,
                                  enumerate_annealed_copolymer_logZ,
                                  enumerate_annealed_pinning_logZ,
                                  enumerate_quenched_copolymer_logZ,
                                  enumerate_quenched_pinning_logZ,
                                  enumerate_two_replica_AB, pinning_annealed_logZ,
                                  pinning_logZ, tilted_copolymer_expectation,
                                  two_replica_logAB)
from polymerlab.renewal import age_distribution, build_renewal_law, renewal_mass

BOUNDARIES = ("constrained", "free")


# ---------------------------------------------------------------------------
# closed forms at N = 1 and lambda = 0


def test_copolymer_single_site(law15_small):
    om = np.array([0.7])
    lam, h = 0.5, 0.2
    ref = math.log(law15_small.K(1) * 0.5 * (1 + math.exp(-2 * lam * (0.7 + h))))
    assert copolymer_logZ(om, law15_small, lam, h) == pytest.approx(ref, abs=1e-13)


def test_pinning_single_site(law15_small):
    om = np.array([-0.4])
    beta, h = 0.3, 0.1
    ref = beta * -0.4 + h + math.log(law15_small.K(1))
    assert pinning_logZ(om, law15_small, beta, h) == pytest.approx(ref, abs=1e-13)


def test_zero_coupling_reduces_to_renewal_mass(law15_small):
    rng = np.random.default_rng(0)
    om = rng.standard_normal(40)
    ref = math.log(renewal_mass(law15_small, 40))
    assert copolymer_logZ(om, law15_small, 0.0, 0.7) == pytest.approx(ref, abs=1e-11)
    assert pinning_logZ(om, law15_small, 0.0, 0.0) == pytest.approx(ref, abs=1e-11)


# ---------------------------------------------------------------------------
# oracle equivalence (the acceptance suite runs 100 per engine; these are
# the per-feature spot checks with both boundaries)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_quenched_engines_match_enumeration(law15_small, boundary):
    rng = np.random.default_rng(42)
    for _ in range(8):
        N = int(rng.integers(1, 15))
        om = rng.standard_normal(N)
        lam, h = rng.uniform(0, 1.0), rng.uniform(-0.6, 0.6)
        dp = copolymer_logZ(om, law15_small, lam, h, boundary)
        ref = enumerate_quenched_copolymer_logZ(om, law15_small, lam, h, boundary)
        assert abs(dp - ref) <= 1e-12 * max(1, abs(ref))
        beta = rng.uniform(0, 1.0)
        dp = pinning_logZ(om, law15_small, beta, h, boundary)
        ref = enumerate_quenched_pinning_logZ(om, law15_small, beta, h, boundary)
        assert abs(dp - ref) <= 1e-12 * max(1, abs(ref))


@pytest.mark.parametrize("boundary", BOUNDARIES)
@pytest.mark.parametrize("rhos", [(1.0,), (1.0, 0.2), (1.0, 0.25, -0.1)])
def test_annealed_engines_match_enumeration(law15_small, boundary, rhos):
    model = finite_range_model(rhos) if len(rhos) > 1 else iid_model()
    rng = np.random.default_rng(7)
    for _ in range(5):
        N = int(rng.integers(1, 11))
        lam, h = rng.uniform(0, 0.8), rng.uniform(-0.5, 0.5)
        tv = copolymer_annealed_logZ(model, law15_small, lam, h, N, boundary)
        ref = enumerate_annealed_copolymer_logZ(model, law15_small, lam, h, N,
                                                boundary)
        assert abs(tv - ref) <= 1e-12 * max(1, abs(ref)) + 1e-13
        beta = rng.uniform(0, 0.8)
        tv = pinning_annealed_logZ(model, law15_small, beta, h, N, boundary)
        ref = enumerate_annealed_pinning_logZ(model, law15_small, beta, h, N,
                                              boundary)
        assert abs(tv - ref) <= 1e-12 * max(1, abs(ref)) + 1e-13


def test_annealed_copolymer_enumeration_at_16(law15_small):
    # one full-size enumeration: 3^15 sign-resolved configurations
    model = finite_range_model([1.0, 0.2])
    lam, h, N = 0.5, 0.1, 16
    tv = copolymer_annealed_logZ(model, law15_small, lam, h, N)
    ref = enumerate_annealed_copolymer_logZ(model, law15_small, lam, h, N)
    assert abs(tv - ref) <= 1e-12 * max(1, abs(ref))


def test_enumeration_budget_guard(law15_small):
    with pytest.raises(CapabilityError):
        enumerate_quenched_pinning_logZ(np.zeros(21), law15_small, 0.1, 0.0)


# ---------------------------------------------------------------------------
# cross-implementation reductions


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_iid_copolymer_reduction(law15, boundary):
    lam, h = 0.45, 0.12
    for N in (3, 37, 300):
        a = copolymer_annealed_logZ(iid_model(), law15, lam, h, N, boundary)
        b = copolymer_annealed_iid_logZ(law15, lam, h, N, boundary)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_iid_pinning_reduction(law15, boundary):
    beta, h = 0.4, -0.1
    for N in (3, 37, 300):
        a = pinning_annealed_logZ(iid_model(), law15, beta, h, N, boundary)
        b = pinning_logZ(np.zeros(N), law15, 0.0, h + beta ** 2 / 2, boundary)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


def test_free_annealed_total_mass_is_one(law15, model_fr):
    for N in (5, 64, 512):
        assert abs(copolymer_annealed_logZ(model_fr, law15, 0.0, 0.0, N,
                                           "free")) < 1e-11
        assert abs(pinning_annealed_logZ(model_fr, law15, 0.0, 0.0, N,
                                         "free")) < 1e-11


def test_transfer_matches_backward_chain_marginal(law15, model_fr):
    """At zero coupling the transfer is the renewal chain: the constrained
    value is the renewal mass function and the age occupation of the
    stationary chain matches the closed-form marginal."""
    for N in (17, 200):
        lz = pinning_annealed_logZ(model_fr, law15, 0.0, 0.0, N, "constrained")
        assert lz == pytest.approx(math.log(renewal_mass(law15, N)), abs=1e-10)
    # stationary age marginal: renewal mass converges to sum-rule weights
    u = renewal_mass(law15, 20_000)
    assert u * law15.mu == pytest.approx(1.0, rel=0.01)
    assert age_distribution(law15, 0) == pytest.approx(1.0 / law15.mu, rel=1e-12)


def test_finite_range_requirement():
    law = build_renewal_law(1.5, G=100)
    with pytest.raises(CapabilityError):
        copolymer_annealed_logZ(polynomial_model(2.0), law, 0.3, 0.0, 10)


# ---------------------------------------------------------------------------
# structural properties of the quenched engines


@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.floats(min_value=0.05, max_value=1.0),
       st.floats(min_value=-0.5, max_value=0.5),
       st.floats(min_value=0.01, max_value=0.4))
@settings(max_examples=25, deadline=None)
def test_copolymer_monotone_nonincreasing_in_h(law15_small, seed, lam, h, dh):
    rng = np.random.default_rng(seed)
    om = rng.standard_normal(24)
    lo = copolymer_logZ(om, law15_small, lam, h)
    hi = copolymer_logZ(om, law15_small, lam, h + dh)
    assert hi <= lo + 1e-11


@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=-0.5, max_value=0.5),
       st.floats(min_value=0.01, max_value=0.4))
@settings(max_examples=25, deadline=None)
def test_pinning_monotone_nondecreasing_in_h(law15_small, seed, beta, h, dh):
    rng = np.random.default_rng(seed)
    om = rng.standard_normal(24)
    lo = pinning_logZ(om, law15_small, beta, h)
    hi = pinning_logZ(om, law15_small, beta, h + dh)
    assert hi >= lo - 1e-11


def test_log_domain_stability(law15):
    """Scaling the disorder by 1e3 at coupling 1 keeps every output finite."""
    rng = np.random.default_rng(3)
    om = 1e3 * rng.standard_normal(256)
    for boundary in BOUNDARIES:
        assert math.isfinite(copolymer_logZ(om, law15, 1.0, 0.0, boundary))
        assert math.isfinite(pinning_logZ(om, law15, 1.0, 0.0, boundary))
    assert math.isfinite(copolymer_logZ(-np.abs(om), law15, 1.0, 0.0))
    assert math.isfinite(pinning_logZ(-np.abs(om), law15, 1.0, 0.0))


def test_batch_matches_single(law15_small, model_fr):
    om = sample_paths(model_fr, 30, seed=1, replicas=6)
    batch = copolymer_logZ(om, law15_small, 0.4, 0.1)
    singles = [copolymer_logZ(om[i], law15_small, 0.4, 0.1) for i in range(6)]
    assert np.allclose(batch, singles, atol=1e-12)
    batch = pinning_logZ(om, law15_small, 0.4, 0.1, "free")
    singles = [pinning_logZ(om[i], law15_small, 0.4, 0.1, "free") for i in range(6)]
    assert np.allclose(batch, singles, atol=1e-12)


def test_cuts_return_prefix_values(law15_small, model_fr):
    om = sample_paths(model_fr, 32, seed=2, replicas=3)
    cuts = copolymer_logZ(om, law15_small, 0.4, 0.1, cuts=(16, 32))
    assert np.allclose(cuts[1], copolymer_logZ(om, law15_small, 0.4, 0.1))
    assert np.allclose(cuts[0], copolymer_logZ(om[:, :16], law15_small, 0.4, 0.1))
    with pytest.raises(DomainError):
        pinning_logZ(om, law15_small, 0.4, 0.1, "free", cuts=(16,))


# ---------------------------------------------------------------------------
# Jensen ordering: disorder average of Z against the exact annealed value


def test_jensen_ordering(law15, model_fr):
    """Disorder average of Z cannot exceed the exact annealed value; the
    average of log Z sits strictly below the annealed log."""
    rng = np.random.default_rng(10)
    for trial in range(6):
        N = int(rng.integers(4, 17))
        lam = float(rng.uniform(0.1, 0.6))
        h = float(rng.uniform(-0.2, 0.3))
        R = 200
        om = sample_paths(model_fr, N, seed=100 + trial, replicas=R)
        lz = copolymer_logZ(om, law15, lam, h)
        za = math.exp(copolymer_annealed_logZ(model_fr, law15, lam, h, N))
        zs = np.exp(lz)
        se = zs.std(ddof=1) / math.sqrt(R)
        assert zs.mean() <= za * 1.0 + 5 * se
    # strict Jensen gap for the log at a fixed moderate instance
    lam, h, N, R = 0.5, 0.1, 256, 64
    om = sample_paths(model_fr, N, seed=5, replicas=R)
    lz = copolymer_logZ(om, law15, lam, h)
    la = copolymer_annealed_logZ(model_fr, law15, lam, h, N)
    assert lz.mean() < la - 3 * lz.std(ddof=1) / math.sqrt(R)


# ---------------------------------------------------------------------------
# tilted expectations


def test_tilted_expectation_small_lambda_limit(law15):
    model = iid_model()
    te = tilted_copolymer_expectation(model, law15, lam=0.05, u=0.0, a=0.0, t=2.0)
    ref = math.exp(2.0) / law15.mu
    assert te.small_lambda_limit == pytest.approx(ref, rel=1e-12)
    assert te.value == pytest.approx(ref, rel=0.03)
    assert te.k == int(2.0 / 0.05 ** 2)


def test_tilted_expectation_u_equals_a(law15, model_fr):
    from polymerlab.constants import c_rho_cop
    from polymerlab.correlation import upsilon_infinity
    te = tilted_copolymer_expectation(model_fr, law15, lam=0.1, u=0.7, a=0.7, t=1.5)
    ccop = c_rho_cop(model_fr, law15)
    ups = upsilon_infinity(model_fr)
    ref = math.exp(1.5 * (0.5 * ccop + 0.5 * ups)) / law15.mu
    assert te.small_lambda_limit == pytest.approx(ref, rel=1e-12)


def test_holder_assembly_bounds_fractional_moment(law15, model_fr):
    """[E~ Z]^zeta * tilt cost dominates the Monte Carlo fractional moment."""
    from polymerlab.correlation import upsilon_infinity
    from polymerlab.disorder import rn_cost
    from polymerlab.estimators import fractional_moment
    ups = upsilon_infinity(model_fr)
    zeta, t, u = 0.5, 2.0, 1.2
    for lam in (0.2, 0.1):
        k = int(t / lam ** 2)
        a = ups * (zeta - 1.0)
        te = tilted_copolymer_expectation(model_fr, law15, lam, u, a, t)
        bound = te.value ** zeta * rn_cost(model_fr, a * lam, zeta, k)
        mc, se = fractional_moment(model_fr, law15, "copolymer", lam, u * lam,
                                   zeta, k, replicas=4000, seed=8)
        assert mc <= bound + 3 * se


def test_tilted_expectation_mc_fallback(law15):
    model = polynomial_model(2.0)
    te = tilted_copolymer_expectation(model, law15, lam=0.25, u=0.5, a=0.0,
                                      t=1.0, mc_replicas=4000, seed=3)
    assert te.method == "mc"
    assert te.value > 0
    assert te.stderr > 0


# ---------------------------------------------------------------------------
# two-replica quantities


def test_two_replica_transfer_vs_enumeration(law15_small, model_fr):
    for N in (4, 8, 11):
        for M in (1.0, 5.0):
            la, lb = two_replica_logAB(model_fr, law15_small, 0.3, -0.05, N, M)
            ea, eb = enumerate_two_replica_AB(model_fr, law15_small, 0.3,
                                              -0.05, N, M)
            assert la == pytest.approx(ea, abs=1e-10)
            assert lb == pytest.approx(eb, abs=1e-10)


def test_two_replica_B_is_square_of_annealed(law15, model_fr):
    _, lb = two_replica_logAB(model_fr, law15, 0.25, -0.03, 60, 5.0)
    single = pinning_annealed_logZ(model_fr, law15, 0.25, -0.03, 60)
    assert lb == pytest.approx(2.0 * single, abs=1e-10)


def test_two_replica_zero_coupling_factorizes(law15, model_fr):
    """With beta = 0 the coupled average is a plain product of free renewal
    masses, so log A = 2 log(free total) = 0."""
    la, lb = two_replica_logAB(model_fr, law15, 0.0, 0.0, 40, 3.0)
    assert la == pytest.approx(0.0, abs=1e-10)
    assert lb == pytest.approx(2.0 * math.log(renewal_mass(law15, 40)), abs=1e-9)
