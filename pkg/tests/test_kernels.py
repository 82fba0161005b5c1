import numpy as np
import pytest

from oracles import dense_volterra_inverse

from delaystep.kernels import (
    derive_J_and_L,
    eval_J,
    eval_L,
    kernel_residual,
    residual_report,
    solve_control_kernels,
    solve_inverse,
    solve_K,
    solve_K_characteristics,
)
from delaystep.plant import PlantConfig, SpatialGrid, eval_coefficients


class TestSolveK:
    def test_zero_coefficients_fix_zero(self, paper_cfg, zero_coeff, grid02):
        K = solve_K(zero_coeff, paper_cfg, grid02)
        assert np.all(K == 0.0)

    def test_long_recycle_zeroes_the_trace(self, grid02):
        # for tau >= 1 the q = 1 trace is identically zero, bit for bit
        cfg = PlantConfig(tau=1.5, h=0.5, mu1=4.2, mu2=3.1, mu3=5.5)
        K = solve_K(eval_coefficients(cfg, grid02), cfg, grid02)
        assert np.all(K[:, -1] == 0.0)

    def test_matches_characteristics_oracle_paper_config(self, paper_cfg,
                                                         paper_coeff, grid02):
        K = solve_K(paper_coeff, paper_cfg, grid02)
        K_fd = solve_K_characteristics(paper_coeff, paper_cfg, grid02)
        rel = np.max(np.abs(K - K_fd)) / np.max(np.abs(K_fd))
        assert rel <= 1e-10  # same discretization order, independent path

    def test_matches_oracle_with_active_trace_branch(self):
        # tau < 1 exercises the shifted-row forcing in both solvers
        cfg = PlantConfig(tau=0.9, h=0.4, mu1=5.0, mu2=4.0, mu3=3.5)
        grid = SpatialGrid.from_ds(0.01)
        coeff = eval_coefficients(cfg, grid)
        K = solve_K(coeff, cfg, grid)
        K_fd = solve_K_characteristics(coeff, cfg, grid)
        rel = np.max(np.abs(K - K_fd)) / np.max(np.abs(K_fd))
        assert rel <= 1e-9

    def test_trace_branch_changes_kernel(self, grid02):
        cfg = PlantConfig(tau=0.9, h=0.4, mu1=5.0, mu2=5.0, mu3=5.0)
        cfg_long = PlantConfig(tau=1.0, h=0.5, mu1=5.0, mu2=5.0, mu3=5.0)
        K = solve_K(eval_coefficients(cfg, grid02), cfg, grid02)
        K_long = solve_K(eval_coefficients(cfg_long, grid02), cfg_long, grid02)
        assert np.max(np.abs(K - K_long)) > 0.1

    def test_short_branch_independent_of_c_bitwise(self, grid02):
        # nodes with q - s <= tau never see c; doubling c must leave them
        # bit-identical when the iteration count is pinned
        cfg = PlantConfig(tau=0.7, h=0.3, mu1=4.0, mu2=5.0, mu3=4.5)
        coeff = eval_coefficients(cfg, grid02)
        K1 = solve_K(coeff, cfg, grid02, fixed_iters=40)
        coeff2 = eval_coefficients(cfg, grid02)
        coeff2.c_grid = 2.0 * coeff2.c_grid
        base_c = coeff.c_at
        coeff2.c_at = lambda s: 2.0 * base_c(s)
        K2 = solve_K(coeff2, cfg, grid02, fixed_iters=40)
        ii, jj = np.meshgrid(np.arange(grid02.n), np.arange(grid02.n),
                             indexing="ij")
        short = (jj - ii) * grid02.ds <= cfg.tau
        assert np.array_equal(K1[short], K2[short])
        assert np.max(np.abs(K1 - K2)) > 0.0  # long branch does move

    def test_nonconvergence_raises(self, paper_cfg, paper_coeff, grid02):
        from delaystep.kernels import KernelSolveError
        with pytest.raises(KernelSolveError):
            solve_K(paper_coeff, paper_cfg, grid02, max_iter=3)


class TestDelayLineKernels:
    def test_zero_c_zeroes_both(self, paper_cfg, grid02, zero_coeff):
        K = solve_K(zero_coeff, paper_cfg, grid02)
        J, L = derive_J_and_L(K, zero_coeff, paper_cfg, grid02)
        assert np.all(J == 0.0) and np.all(L == 0.0)

    def test_continuity_at_one(self, paper_cfg, paper_coeff, grid02):
        K = solve_K(paper_coeff, paper_cfg, grid02)
        near = eval_J(K, paper_coeff, grid02, 1.0 - 1e-9)
        assert near == pytest.approx(0.0, abs=1e-6)
        assert eval_J(K, paper_coeff, grid02, 1.0) == 0.0
        assert eval_J(K, paper_coeff, grid02, 1.2) == 0.0

    def test_pointwise_bound(self, paper_cfg, paper_coeff, grid02):
        K = solve_K(paper_coeff, paper_cfg, grid02)
        J, L = derive_J_and_L(K, paper_coeff, paper_cfg, grid02)
        cap = paper_coeff.c_sup * np.exp(paper_coeff.c_sup + paper_coeff.f_sup)
        assert np.max(np.abs(J)) <= cap
        assert np.max(np.abs(L)) <= cap

    def test_trace_equals_sensor_kernel_shift(self):
        # the q = 1 trace of K must equal the sensor kernel at s + h
        cfg = PlantConfig(tau=0.8, h=0.3, mu1=4.0, mu2=4.0, mu3=4.0)
        grid = SpatialGrid.from_ds(0.02)
        coeff = eval_coefficients(cfg, grid)
        K = solve_K(coeff, cfg, grid)
        for i in (0, 10, 25, 40):
            s_i = grid.s[i]
            assert K[i, -1] == pytest.approx(
                eval_L(K, coeff, grid, cfg, s_i + cfg.h), abs=2e-3)

    def test_against_direct_quadrature(self, paper_cfg, paper_coeff, grid02):
        # J at a grid row equals a plain trapezoid of K-row times c minus c
        K = solve_K(paper_coeff, paper_cfg, grid02)
        i = 20
        sigma = grid02.s[i]
        direct = (np.trapezoid(K[i, i:] * paper_coeff.c_grid[i:], dx=grid02.ds)
                  - paper_coeff.c_at(sigma))
        assert eval_J(K, paper_coeff, grid02, sigma) == pytest.approx(
            direct, rel=1e-12)


class TestInverseKernels:
    def test_zero_kernels_invert_to_zero(self, paper_cfg, zero_coeff, grid02):
        kern = solve_control_kernels(zero_coeff, paper_cfg, grid02)
        inv = solve_inverse(kern, zero_coeff, paper_cfg, grid02)
        assert np.all(inv.B == 0.0)
        assert np.all(inv.D == 0.0)
        assert np.all(inv.E == 0.0)

    def test_matches_dense_solve_small_grid(self, paper_cfg):
        grid = SpatialGrid.from_ds(0.2)
        coeff = eval_coefficients(paper_cfg, grid)
        kern = solve_control_kernels(coeff, paper_cfg, grid)
        inv = solve_inverse(kern, coeff, paper_cfg, grid)
        dense = dense_volterra_inverse(kern.K, grid.ds)
        assert np.max(np.abs(inv.B - dense)) <= 1e-10

    def test_series_bound(self, paper_cfg, paper_coeff, grid02):
        kern = solve_control_kernels(paper_coeff, paper_cfg, grid02)
        inv = solve_inverse(kern, paper_coeff, paper_cfg, grid02)
        k_sup = np.max(np.abs(kern.K))
        l_sup = np.max(np.abs(kern.L))
        j_sup = np.max(np.abs(kern.J))
        assert np.max(np.abs(inv.B)) <= k_sup * np.exp(k_sup)
        assert np.max(np.abs(inv.D)) <= paper_cfg.h * l_sup * np.exp(k_sup)
        assert np.max(np.abs(inv.E)) <= paper_cfg.eta * j_sup * np.exp(k_sup)


class TestResidual:
    def test_zero_everything_zero_residual(self, paper_cfg, zero_coeff, grid02):
        K = np.zeros((grid02.n, grid02.n))
        assert kernel_residual(K, zero_coeff, paper_cfg, grid02) == 0.0

    def test_planted_constant_kernel_flags_boundary(self, paper_cfg,
                                                    zero_coeff, grid02):
        # K≡1 with zero coefficients satisfies the transport identity but
        # violates the q = 1 trace by exactly one
        K = np.triu(np.ones((grid02.n, grid02.n)))
        rep = residual_report(K, zero_coeff, paper_cfg, grid02)
        assert rep["boundary_sup"] >= 1.0
        assert rep["total"] >= 1.0

    def test_residual_decreases_under_refinement(self, paper_cfg):
        vals = []
        for ds in (0.04, 0.02):
            grid = SpatialGrid.from_ds(ds)
            coeff = eval_coefficients(paper_cfg, grid)
            K = solve_K(coeff, paper_cfg, grid)
            vals.append(kernel_residual(K, coeff, paper_cfg, grid))
        assert 0.3 <= vals[1] / vals[0] <= 0.8


def test_theorem_pointwise_bound_random_plants(grid02):
    from delaystep.plant import sample_plant
    for seed in (1, 2, 3):
        cfg = sample_plant(seed)
        coeff = eval_coefficients(cfg, grid02)
        K = solve_K(coeff, cfg, grid02)
        total = coeff.c_sup + coeff.f_sup
        qs = np.clip(grid02.s[None, :] - grid02.s[:, None], 0.0, None)
        cap = total * np.exp(total * qs)
        mask = np.triu(np.ones_like(K, dtype=bool))
        assert np.all(np.abs(K)[mask] <= cap[mask])
