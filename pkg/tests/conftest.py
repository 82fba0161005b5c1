import numpy as np
import pytest

from delaystep.plant import PlantConfig, SpatialGrid, eval_coefficients


@pytest.fixture(scope="session")
def paper_cfg():
    return PlantConfig(tau=1.0, h=0.5, mu1=5.0, mu2=5.0, mu3=5.0)


@pytest.fixture(scope="session")
def grid02():
    return SpatialGrid.from_ds(0.02)


@pytest.fixture(scope="session")
def paper_coeff(paper_cfg, grid02):
    return eval_coefficients(paper_cfg, grid02)


@pytest.fixture(scope="session")
def zero_coeff(grid02):
    cfg = PlantConfig(tau=1.0, h=0.5, mu1=0.0, mu2=0.0, mu3=0.0)
    coeff = eval_coefficients(cfg, grid02)
    coeff.f_grid = np.zeros_like(coeff.f_grid)
    coeff.c_grid = np.zeros_like(coeff.c_grid)
    coeff.f_at = lambda s, q: 0.0
    coeff.c_at = lambda s: 0.0
    coeff.c_prime_at = lambda s: 0.0
    return coeff
