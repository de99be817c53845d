import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymerlab.correlation import (CorrelationModel, abs_tail_bound,
                                    exponential_model, finite_range_model,
                                    iid_model, model_from_config,
                                    model_to_config, parse_model,
                                    polynomial_model, quad_form, rho,
                                    rho_array, szego_symbol_min,
                                    toeplitz_solve_ones, upsilon_infinity)
from polymerlab.errors import DomainError

MODELS = st.sampled_from([
    iid_model(),
    finite_range_model([1.0, 0.2]),
    finite_range_model([1.0, -0.3]),
    finite_range_model([1.0, 0.25, -0.1]),
    polynomial_model(2.0),
    polynomial_model(1.5),
    exponential_model(0.5),
])


def test_rho_examples():
    assert rho(iid_model(), 0) == 1.0
    assert rho(polynomial_model(2.0), 1) == 0.25
    assert rho(finite_range_model([1.0, 0.2]), -1) == 0.2


@given(MODELS, st.integers(min_value=-50, max_value=50))
def test_rho_symmetric(model, n):
    assert rho(model, n) == rho(model, -n)


@given(MODELS, st.integers(min_value=0, max_value=40))
def test_rho_array_matches_pointwise(model, nmax):
    arr = rho_array(model, nmax)
    for n in range(nmax + 1):
        assert arr[n] == pytest.approx(rho(model, n), abs=0.0)


@given(MODELS, st.integers(min_value=0, max_value=12))
@settings(max_examples=40)
def test_tail_bound_consistency(model, radius):
    """Partial sum to R plus the tail bound dominates any longer partial sum."""
    big = min(radius + 200, 4000)
    arr = np.abs(rho_array(model, big))
    partial_r = arr[0] + 2.0 * arr[1:radius + 1].sum()
    partial_big = arr[0] + 2.0 * arr[1:].sum()
    assert partial_r + abs_tail_bound(model, radius) >= partial_big - 1e-12


def test_upsilon_values(model_fr):
    assert upsilon_infinity(iid_model()) == 1.0
    assert upsilon_infinity(model_fr) == pytest.approx(1.4, abs=1e-15)
    # polynomial a=2: 1 + 2 sum (1+k)^-2 = pi^2/3 - 1
    assert upsilon_infinity(polynomial_model(2.0)) == pytest.approx(
        math.pi ** 2 / 3.0 - 1.0, abs=1e-10)


def test_upsilon_partial_sum_oracle():
    # oracle: explicit partial sums with integral tail bracket
    a = 2.0
    for R in (1000, 10000):
        k = np.arange(1, R + 1, dtype=float)
        partial = 1.0 + 2.0 * ((1.0 + k) ** -a).sum()
        lo = partial + 2.0 * (R + 2.0) ** (1 - a) / (a - 1)  # integral below tail
        hi = partial + 2.0 * (R + 1.0) ** (1 - a) / (a - 1)  # integral above tail
        val = upsilon_infinity(polynomial_model(a))
        assert lo - 1e-12 <= val <= hi + 1e-12


def test_szego_examples(model_fr):
    assert szego_symbol_min(iid_model()) == pytest.approx(1.0, abs=1e-12)
    # 1 + 0.4 cos(x) has minimum 0.6 at x = pi
    assert szego_symbol_min(model_fr) == pytest.approx(0.6, abs=1e-6)
    # rejected family: 1 + cos(x) touches zero
    bad = CorrelationModel("finite-range", (1.0, 0.5), 1)
    assert szego_symbol_min(bad) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(DomainError):
        finite_range_model([1.0, 0.5])


def test_szego_grid_precondition(model_fr):
    with pytest.raises(DomainError):
        szego_symbol_min(model_fr, grid_points=512)


@given(MODELS)
@settings(max_examples=25)
def test_szego_diagonal_dominance_bound(model):
    """Symbol minimum is at least 1 - 2 sum |rho_k|."""
    arr = np.abs(rho_array(model, model.range_radius))
    lower = 1.0 - 2.0 * arr[1:].sum()
    assert szego_symbol_min(model) >= lower - 1e-9


def test_toeplitz_examples():
    assert toeplitz_solve_ones(iid_model(), 5).quad_form == pytest.approx(5.0, abs=1e-12)
    res = toeplitz_solve_ones(finite_range_model([1.0, 0.25]), 2)
    # 2x2 inverse by hand: rows sum to 1/(1+rho) = 0.8
    assert np.allclose(res.solution, [0.8, 0.8], atol=1e-12)
    assert res.quad_form == pytest.approx(1.6, abs=1e-12)
    assert res.residual_inf <= 1e-9 * 2


@pytest.mark.parametrize("model", [finite_range_model([1.0, 0.2]),
                                   finite_range_model([1.0, -0.3]),
                                   polynomial_model(2.0),
                                   exponential_model(0.5)])
def test_quad_form_growth_and_limit(model):
    ks = [256, 512, 1024, 2048, 4096]
    qf = [quad_form(model, k) for k in ks]
    assert all(b > a for a, b in zip(qf, qf[1:]))  # strictly increasing in k
    dens = [q / k for q, k in zip(qf, ks)]
    diffs = np.diff(dens)
    assert np.all(diffs >= -1e-9) or np.all(diffs <= 1e-9)  # monotone density
    assert dens[-1] == pytest.approx(1.0 / upsilon_infinity(model), rel=0.02)


def test_polynomial_needs_summability():
    with pytest.raises(DomainError):
        polynomial_model(1.0)
    with pytest.raises(DomainError):
        exponential_model(0.0)


def test_finite_range_needs_unit_rho0():
    with pytest.raises(DomainError):
        finite_range_model([0.9, 0.1])


@given(MODELS)
@settings(max_examples=20)
def test_config_roundtrip(model):
    again = model_from_config(model_to_config(model))
    assert again == model


def test_parse_model_spellings(model_fr):
    assert parse_model("iid") == iid_model()
    assert parse_model("fr:1,0.2") == model_fr
    assert parse_model("poly:2.0").kind == "polynomial"
    assert parse_model("exp:0.5").kind == "exponential"
    with pytest.raises(DomainError):
        parse_model("what:1")
