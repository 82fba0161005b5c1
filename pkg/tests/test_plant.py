import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaystep.plant import (
    PlantConfig,
    SamplingRanges,
    SpatialGrid,
    eval_coefficients,
    plant_from_json,
    plant_to_json,
    sample_plant,
    tabulated_coefficients,
)


def test_grid_requires_integer_reciprocal():
    g = SpatialGrid.from_ds(0.02)
    assert g.n == 51
    assert g.s[0] == 0.0 and g.s[-1] == 1.0
    with pytest.raises(ValueError):
        SpatialGrid.from_ds(0.03)


def test_delay_ordering_enforced():
    with pytest.raises(ValueError):
        PlantConfig(tau=0.5, h=0.5, mu1=3, mu2=3, mu3=3)
    cfg = PlantConfig(tau=1.0, h=0.4, mu1=3, mu2=3, mu3=3)
    assert cfg.eta == pytest.approx(0.6)


class TestEvalCoefficients:
    def test_c_endpoint_is_bit_zero(self, grid02):
        for mu3 in (3.0, 4.27, 5.9):
            cfg = PlantConfig(tau=1.0, h=0.5, mu1=4.0, mu2=4.0, mu3=mu3)
            coeff = eval_coefficients(cfg, grid02)
            assert coeff.c_grid[-1] == 0.0

    def test_zero_orders_give_constant_f(self, grid02):
        cfg = PlantConfig(tau=1.0, h=0.5, mu1=0.0, mu2=0.0, mu3=3.0)
        coeff = eval_coefficients(cfg, grid02)
        upper = coeff.f_grid[np.triu_indices(grid02.n)]
        assert np.all(upper == 9.0)

    def test_origin_value_matches_direct_evaluation(self, grid02):
        # arccos(0) = pi/2, so cos(5*pi/2) = 0 and f(0,0) = 0
        cfg = PlantConfig(tau=1.0, h=0.5, mu1=5.0, mu2=5.0, mu3=5.0)
        coeff = eval_coefficients(cfg, grid02)
        direct = 9.0 * np.cos(5.0 * np.arccos(0.0)) ** 2
        assert coeff.f_grid[0, 0] == pytest.approx(direct, abs=1e-14)
        assert abs(coeff.f_grid[0, 0]) < 1e-14

    def test_lower_triangle_zero(self, paper_coeff):
        n = paper_coeff.grid.n
        assert np.all(paper_coeff.f_grid[np.tril_indices(n, -1)] == 0.0)

    def test_off_grid_matches_closed_form(self, paper_cfg, paper_coeff):
        s, q = 0.137, 0.82
        expect = 9.0 * np.cos(5 * np.arccos(s)) * np.cos(5 * np.arccos(q))
        assert paper_coeff.f_at(s, q) == pytest.approx(expect, rel=1e-13)
        assert paper_coeff.f_at(q, s) == 0.0
        assert paper_coeff.c_at(1.0) == 0.0

    def test_c_prime_limit_at_right_edge(self, paper_coeff):
        # the analytic derivative has the removable limit mu^2 at s = 1
        assert paper_coeff.c_prime_at(1.0) == pytest.approx(25.0, rel=1e-6)
        fd = (paper_coeff.c_at(1.0) - paper_coeff.c_at(1.0 - 1e-7)) / 1e-7
        assert paper_coeff.c_prime_at(1.0) == pytest.approx(fd, rel=1e-3)


class TestSamplePlant:
    def test_defaults_in_range(self):
        cfg = sample_plant(0)
        assert 0.8 <= cfg.tau <= 2.0
        assert 0.1 <= cfg.h <= 0.7
        assert cfg.eta > 0
        for mu in (cfg.mu1, cfg.mu2, cfg.mu3):
            assert 3.0 <= mu <= 6.0

    def test_deterministic(self):
        assert sample_plant(123) == sample_plant(123)

    def test_degenerate_ranges_give_exact_values(self):
        r = SamplingRanges(tau=(1.0, 1.0), h=(0.5, 0.5))
        cfg = sample_plant(7, r)
        assert cfg.tau == 1.0 and cfg.h == 0.5 and cfg.eta == 0.5

    def test_impossible_ranges_rejected(self):
        r = SamplingRanges(tau=(0.2, 0.3), h=(0.5, 0.6))
        with pytest.raises(ValueError):
            sample_plant(0, r)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    def test_sampled_instances_respect_magnitude_caps(self, seed):
        cfg = sample_plant(seed)
        grid = SpatialGrid.from_ds(0.1)
        coeff = eval_coefficients(cfg, grid)
        assert coeff.f_sup <= 9.0 + 1e-12
        assert coeff.c_sup <= 2.0 + 1e-12
        assert coeff.c_grid[-1] == 0.0


def test_tabulated_round_trip(paper_cfg, paper_coeff, grid02):
    tab = tabulated_coefficients(paper_coeff.f_grid, paper_coeff.c_grid, grid02)
    assert np.array_equal(tab.f_grid, paper_coeff.f_grid)
    assert tab.c_at(0.5) == pytest.approx(paper_coeff.c_at(0.5), abs=1e-12)
    # off-grid access interpolates instead of evaluating the closed form
    assert tab.f_at(0.011, 0.493) == pytest.approx(
        paper_coeff.f_at(0.011, 0.493), abs=0.05)


def test_plant_json_round_trip(paper_cfg, grid02):
    cfg, build = plant_from_json(plant_to_json(paper_cfg))
    assert cfg == paper_cfg
    coeff = build(grid02)
    assert coeff.f_grid.shape == (51, 51)


def test_plant_json_tabulated(paper_coeff, grid02):
    spec = {"tau": 1.0, "h": 0.5, "f_grid": paper_coeff.f_grid.tolist(),
            "c_grid": paper_coeff.c_grid.tolist(), "ds": 0.02}
    cfg, build = plant_from_json(spec)
    coeff = build(grid02)
    assert np.allclose(coeff.f_grid, paper_coeff.f_grid)
