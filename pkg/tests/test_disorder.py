import io
import math

import numpy as np
import pytest
from scipy.linalg import toeplitz

import polymerlab.disorder as dis
from polymerlab.correlation import (exponential_model, finite_range_model,
                                    iid_model, polynomial_model, rho_array)
from polymerlab.disorder import (DisorderPath, Tilt, read_path_dump,
                                 relative_entropy_shift, rn_cost, sample_path,
                                 sample_paths, tilt_mean, write_path_dump)
from polymerlab.errors import DomainError


@pytest.mark.parametrize("model", [iid_model(), finite_range_model([1.0, 0.2]),
                                   finite_range_model([1.0, -0.3]),
                                   polynomial_model(2.0),
                                   exponential_model(0.7)])
def test_covariance_fidelity(model):
    """Averaged outer product over many paths matches the covariance
    entrywise within 5 standard errors."""
    R, N = 10_000, 128
    om = sample_paths(model, N, seed=2, replicas=R)
    emp = om.T @ om / R
    ref = toeplitz(rho_array(model, N - 1))
    # var of a product of two unit gaussians is 1 + rho^2 <= 2
    se = math.sqrt(2.0 / R)
    assert np.abs(emp - ref).max() <= 5.0 * se


def test_untilted_mean_is_centered(model_fr):
    om = sample_paths(model_fr, 200, seed=4, replicas=2000)
    n = om.size
    assert abs(om.mean()) <= 4.0 / math.sqrt(n) * math.sqrt(1.4)


def test_lag_covariances_per_model():
    model = finite_range_model([1.0, 0.25, -0.1])
    R, N = 20_000, 64
    om = sample_paths(model, N, seed=9, replicas=R)
    for j in range(6):
        emp = (om[:, :N - j] * om[:, j:]).mean()
        se = math.sqrt(2.0 / (R * (N - j)))
        ref = rho_array(model, j)[j] if j else 1.0
        assert abs(emp - ref) <= 5.0 * se * 3  # sites within a path correlate


def test_tilt_mean_against_dense_oracle(model_fr):
    N, k, d = 12, 5, 0.3
    m = tilt_mean(model_fr, N, Tilt(d, k))
    ups = toeplitz(rho_array(model_fr, N - 1))
    ind = np.concatenate([np.ones(k), np.zeros(N - k)])
    assert np.allclose(m, d * ups @ ind, atol=1e-12)


def test_iid_full_window_tilt_shifts_mean():
    model = iid_model()
    R, N, d = 4000, 64, 0.3
    om = sample_paths(model, N, seed=5, replicas=R, tilt=Tilt(d, N))
    se = 1.0 / math.sqrt(R * N)
    assert abs(om.mean() - d) <= 5.0 * se


def test_bulk_tilt_mean_value():
    # row sums of the covariance are 1 + 2*0.25 in the bulk
    model = finite_range_model([1.0, 0.25])
    m = tilt_mean(model, 64, Tilt(0.2, 64))
    assert m[32] == pytest.approx(0.2 * 1.5, abs=1e-12)


def test_tilt_preserves_covariance(model_fr):
    R, N = 20_000, 32
    t = Tilt(0.4, N)
    om = sample_paths(model_fr, N, seed=6, replicas=R, tilt=t)
    om = om - tilt_mean(model_fr, N, t)[None, :]
    emp = om.T @ om / R
    ref = toeplitz(rho_array(model_fr, N - 1))
    assert np.abs(emp - ref).max() <= 5.0 * math.sqrt(2.0 / R)


def test_determinism_and_worker_independence(model_fr):
    a = sample_paths(model_fr, 100, seed=7, replicas=5)
    b = np.vstack([sample_paths(model_fr, 100, seed=7, replicas=1,
                                replica_start=i) for i in range(5)])
    assert np.array_equal(a, b)
    c = sample_paths(model_fr, 100, seed=7, replicas=5)
    assert np.array_equal(a, c)


def test_dense_fallback_agrees_in_law(model_fr, monkeypatch):
    R, N = 8000, 48
    monkeypatch.setattr(dis, "_embedding", lambda model, n: None)
    om = sample_paths(model_fr, N, seed=8, replicas=R)
    emp = om.T @ om / R
    ref = toeplitz(rho_array(model_fr, N - 1))
    assert np.abs(emp - ref).max() <= 5.0 * math.sqrt(2.0 / R)


def test_relative_entropy_closed_forms():
    # identity covariance: a^2 L / 2
    assert relative_entropy_shift(iid_model(), 0.5, 10) == pytest.approx(
        0.5 ** 2 * 10 / 2, abs=1e-12)
    # 2x2 oracle: a=1, L=2 -> 0.5 * 1.6
    assert relative_entropy_shift(finite_range_model([1.0, 0.25]), 1.0, 2) == \
        pytest.approx(0.8, abs=1e-12)


def test_rn_cost_closed_forms():
    m = iid_model()
    assert rn_cost(m, 0.0, 0.5, 16) == 1.0
    d, z, k = 0.3, 0.5, 16
    assert rn_cost(m, d, z, k) == pytest.approx(
        math.exp(z * d ** 2 * k / (2 * (1 - z))), rel=1e-12)
    with pytest.raises(DomainError):
        rn_cost(m, 0.1, 1.0, 16)
    with pytest.raises(DomainError):
        rn_cost(m, 0.1, 0.0, 16)


def test_path_dump_roundtrip(model_fr):
    p = sample_path(model_fr, 64, seed=12, tilt=Tilt(0.1, 32))
    buf = io.BytesIO()
    write_path_dump(p, buf)
    buf.seek(0)
    n, seed, h, vals = read_path_dump(buf)
    assert n == 64 and seed == 12
    assert np.array_equal(vals, p.values)
    assert h == dis.model_hash(model_fr)


def test_sample_path_wrapper(model_fr):
    p = sample_path(model_fr, 32, seed=1, replica=4)
    assert isinstance(p, DisorderPath)
    assert len(p) == 32
    batch = sample_paths(model_fr, 32, seed=1, replicas=1, replica_start=4)
    assert np.array_equal(p.values, batch[0])
