import numpy as np
import pytest

from latcorr import sim


@pytest.fixture
def study_model() -> sim.ModelParams:
    """Parameter set of the simulation study."""
    return sim.ModelParams(
        mu1=0.2, mu2=0.3, sigma1=0.2, sigma2=0.3, rho=0.7, x1_0=1.0, x2_0=2.0, T=1.0
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
