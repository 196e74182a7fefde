import numpy as np
import pytest

from nsklab.model import critical_quadratic, make_params


@pytest.fixture
def unit_params():
    """mu = nu = kappa = rho* = 1; note delta* = 0 exactly (degenerate)."""
    return make_params(1.0, 1.0, 1.0, 1.0, critical_quadratic(1.0, 1.0))


@pytest.fixture
def positive_params():
    """delta* = (3)^2/4 - 0.5 = 1.75 > 0 (real eigenvalue pair)."""
    return make_params(1.0, 2.0, 0.5, 1.0, critical_quadratic(1.0, 1.0))


@pytest.fixture
def oscillatory_params():
    """delta* = (1.5)^2/4 - 1 = -0.4375 < 0 (conjugate pair)."""
    return make_params(1.0, 0.5, 1.0, 1.0, critical_quadratic(1.0, 1.0))


def random_params(rng: np.random.Generator, regime: str):
    """Draw admissible parameters whose discriminant falls in the given regime."""
    mu = rng.uniform(0.2, 3.0)
    nu = rng.uniform(-0.5 * mu, 3.0)
    rho = rng.uniform(0.3, 3.0)
    scale = (mu / rho + nu / rho) ** 2 / 4.0
    if regime == "positive":
        target = scale * rng.uniform(0.05, 0.95)
    elif regime == "negative":
        target = scale * rng.uniform(1.05, 6.0)
    elif regime == "degenerate":
        target = scale * (1.0 + rng.uniform(-0.9e-9, 0.9e-9))
    else:
        raise ValueError(regime)
    kappa = target / rho
    return make_params(mu, nu, kappa, rho, critical_quadratic(1.0, rho))
