import pytest

from kausal.bits import sample_incompressible


@pytest.fixture(scope="session")
def big_random():
    """Two gated-incompressible strings of length 10^5."""
    return sample_incompressible(100_000, 11), sample_incompressible(100_000, 12)
