import numpy as np
import pytest

from tmcurv.base_geom import ChartMetric
from tmcurv.core import IsotropicParams, ScenarioGeometry


def make_geometry(metric_rows, domain, alpha="1", sigma="0", **kwargs):
    n = len(metric_rows)
    metric = ChartMetric.from_strings(metric_rows, domain)
    params = IsotropicParams.from_strings(alpha, sigma, n)
    sigma_zero = kwargs.pop("sigma_is_zero", sigma.strip() in ("0", "0.0"))
    alpha_const = kwargs.pop("alpha_is_constant", not any(c in alpha for c in "xu"))
    return ScenarioGeometry(metric=metric, params=params, sigma_is_zero=sigma_zero,
                            alpha_is_constant=alpha_const, **kwargs)


FLAT_ROWS = [["1", "0"], ["0", "1"]]
FLAT_DOMAIN = [(-2.0, 2.0), (-2.0, 2.0)]
SPHERE_ROWS = [["1", "0"], ["0", "sin(x1)^2"]]
SPHERE_DOMAIN = [(0.3, 2.8), (0.0, 6.0)]
HYPERBOLIC_ROWS = [["1/x2^2", "0"], ["0", "1/x2^2"]]
HYPERBOLIC_DOMAIN = [(-2.0, 2.0), (0.5, 3.0)]


@pytest.fixture(scope="session")
def flat_sasaki():
    return make_geometry(FLAT_ROWS, FLAT_DOMAIN)


@pytest.fixture(scope="session")
def sphere_sasaki():
    return make_geometry(SPHERE_ROWS, SPHERE_DOMAIN)


@pytest.fixture(scope="session")
def hyperbolic_sasaki():
    return make_geometry(HYPERBOLIC_ROWS, HYPERBOLIC_DOMAIN)


@pytest.fixture(scope="session")
def flat_energy():
    return make_geometry(FLAT_ROWS, FLAT_DOMAIN, alpha="1+u1^2+u2^2")


@pytest.fixture(scope="session")
def sphere_energy():
    return make_geometry(SPHERE_ROWS, SPHERE_DOMAIN, alpha="1+u1^2+u2^2")


@pytest.fixture(scope="session")
def sphere_sigma():
    return make_geometry(SPHERE_ROWS, SPHERE_DOMAIN, alpha="1", sigma="0.3")


def coordinate_basis(n):
    return [np.eye(n)[i] for i in range(n)]
