import pytest

from polymerlab.correlation import finite_range_model, iid_model
from polymerlab.renewal import build_renewal_law


@pytest.fixture(scope="session")
def law15():
    """Canonical polynomial-tail law, exponent 1.5, support 1e5."""
    return build_renewal_law(1.5, "zeta", 100_000)


@pytest.fixture(scope="session")
def law15_small():
    """Same shape on a small support, for enumeration-sized tests."""
    return build_renewal_law(1.5, "zeta", 64)


@pytest.fixture(scope="session")
def model_fr():
    return finite_range_model([1.0, 0.2])


@pytest.fixture(scope="session")
def model_iid():
    return iid_model()
