import numpy as np
import pytest

from pcone.elasticity import moduli_from_lame
from pcone.sampling import make_rng
from pcone.yield_domain import YieldDomain, tresca, von_mises


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240611)


@pytest.fixture
def unit_moduli():
    """λ = μ = ρ = 1, so E = 2.5, ν = 0.25 and c_e = sqrt(3)."""
    return moduli_from_lame(1.0, 1.0)


@pytest.fixture
def von_mises_domain() -> YieldDomain:
    return YieldDomain([von_mises(1.0)])


@pytest.fixture
def tresca_domain() -> YieldDomain:
    return YieldDomain([tresca(1.0)])


@pytest.fixture
def scenario_dir():
    from pathlib import Path

    return Path(__file__).resolve().parents[1] / "src" / "pcone" / "scenarios"
