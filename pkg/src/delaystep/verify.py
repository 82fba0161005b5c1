"""Executable checks of the design's mathematical guarantees.

Provides the forward/inverse state transformations, pointwise bound
verification for every solved kernel and gain, finite-difference Lipschitz
probes of the plant-to-kernel maps, decay-rate fitting on recorded
trajectories, and the named report suites exposed through the CLI and the
service API.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._quad import upper_trapz_matvec
from .kernels import (
    ControlKernels,
    InverseKernels,
    eval_J,
    eval_L,
    kernel_residual,
    solve_control_kernels,
    solve_inverse,
    solve_K,
    solve_K_characteristics,
)
from .observer import (
    InverseObserverKernels,
    ObserverGains,
    ObserverKernels,
    gains_from_kernels,
    solve_inverse_observer,
    solve_observer_kernels,
)
from .plant import (
    CoefficientField,
    PlantConfig,
    SamplingRanges,
    SpatialGrid,
    eval_coefficients,
    sample_plant,
)
from .simulate import GainProvider, Trajectory, default_dt, run, run_observer

__all__ = [
    "TargetState",
    "transform_forward",
    "transform_inverse",
    "check_bounds",
    "lipschitz_probe",
    "decay_rate",
    "suite_bounds",
    "suite_residual",
    "suite_cross",
    "suite_transform",
    "suite_decay",
    "suite_observer",
    "suite_robustness",
    "suite_lipschitz",
    "suite_forward",
    "run_suite",
    "SUITES",
]


@dataclass
class TargetState:
    """Transformed fields: the control target z and the observer-error targets."""

    z: np.ndarray
    zt: np.ndarray | None = None
    wt: np.ndarray | None = None
    ut_err: np.ndarray | None = None


def transform_forward(x: np.ndarray, v: np.ndarray, u: np.ndarray,
                      kernels: ControlKernels, cfg: PlantConfig,
                      grid: SpatialGrid,
                      coeff: CoefficientField | None = None) -> np.ndarray:
    """Map plant fields to the target field z.

    z(s) subtracts the Volterra average of x beyond s and the weighted
    delay-line contents; with exact kernels the result obeys z(0) = 0 along
    closed-loop trajectories.  When ``coeff`` is given the one-variable
    kernels are re-evaluated exactly; otherwise their samples interpolate.
    """
    ds = grid.ds
    n = grid.n
    term_x = upper_trapz_matvec(kernels.K, x, ds)
    z = np.empty(n)
    for i, s_i in enumerate(grid.s):
        if coeff is not None:
            lv = np.array([eval_L(kernels.K, coeff, grid, cfg, s_i + cfg.h * r)
                           for r in grid.s])
            jv = np.array([eval_J(kernels.K, coeff, grid, s_i + cfg.eta * r)
                           for r in grid.s])
        else:
            lv = np.asarray(kernels.l_interp(s_i + cfg.h * grid.s))
            jv = np.asarray(kernels.j_interp(s_i + cfg.eta * grid.s))
        z[i] = (x[i] - term_x[i]
                - cfg.h * np.trapezoid(lv * v, dx=ds)
                - cfg.eta * np.trapezoid(jv * u, dx=ds))
    return z


def transform_inverse(z: np.ndarray, v: np.ndarray, u: np.ndarray,
                      inv: InverseKernels) -> np.ndarray:
    """Reconstruct the plant state from the target field and the delay lines."""
    ds = inv.ds
    term_z = upper_trapz_matvec(inv.B, z, ds)
    term_v = np.trapezoid(inv.D * v[None, :], dx=ds, axis=1)
    term_u = np.trapezoid(inv.E * u[None, :], dx=ds, axis=1)
    return z + term_z + term_v + term_u


def _control_bound_rows(kernels: ControlKernels, coeff: CoefficientField,
                        grid: SpatialGrid) -> list[dict]:
    cbar, fbar = coeff.c_sup, coeff.f_sup
    total = cbar + fbar
    rows = []
    qs = grid.s[None, :] - grid.s[:, None]
    k_bound = total * np.exp(total * np.clip(qs, 0.0, None))
    mask = np.triu(np.ones_like(kernels.K, dtype=bool))
    rows.append({
        "name": "state_kernel", "sup": float(np.max(np.abs(kernels.K))),
        "margin": float(np.min((k_bound - np.abs(kernels.K))[mask])),
        "violations": int(np.sum(np.abs(kernels.K)[mask] > k_bound[mask])),
    })
    l_dom = np.linspace(0.0, 1.0 + kernels.h, kernels.L.shape[0])
    l_bound = cbar * np.exp(total * (1.0 - l_dom))
    l_bound = np.maximum(l_bound, 0.0)
    rows.append({
        "name": "sensor_kernel", "sup": float(np.max(np.abs(kernels.L))),
        "margin": float(np.min(l_bound - np.abs(kernels.L))),
        "violations": int(np.sum(np.abs(kernels.L) > l_bound)),
    })
    j_cap = cbar * math.exp(total)
    rows.append({
        "name": "recycle_kernel", "sup": float(np.max(np.abs(kernels.J))),
        "margin": float(j_cap - np.max(np.abs(kernels.J))),
        "violations": int(np.sum(np.abs(kernels.J) > j_cap)),
    })
    return rows


def _inverse_bound_rows(kernels: ControlKernels, inv: InverseKernels,
                        cfg: PlantConfig) -> list[dict]:
    k_sup = float(np.max(np.abs(kernels.K)))
    l_sup = float(np.max(np.abs(kernels.L)))
    j_sup = float(np.max(np.abs(kernels.J)))
    caps = {
        "inv_state_kernel": (inv.B, k_sup * math.exp(k_sup)),
        "inv_sensor_kernel": (inv.D, cfg.h * l_sup * math.exp(k_sup)),
        "inv_recycle_kernel": (inv.E, cfg.eta * j_sup * math.exp(k_sup)),
    }
    rows = []
    for name, (arr, cap) in caps.items():
        sup = float(np.max(np.abs(arr)))
        rows.append({"name": name, "sup": sup, "margin": float(cap - sup),
                     "violations": int(sup > cap)})
    return rows


def _observer_bound_rows(obs: ObserverKernels, inv_obs: InverseObserverKernels,
                         gains: ObserverGains, coeff: CoefficientField,
                         cfg: PlantConfig, grid: SpatialGrid) -> list[dict]:
    fbar = coeff.f_sup
    cbar = coeff.c_sup
    h = cfg.h
    f_cap_grid = fbar * np.exp(fbar * np.clip(grid.s[None, :] - grid.s[:, None], 0.0, None))
    f_cap = fbar * math.exp(fbar)
    m_cap = h * fbar * math.exp(fbar * (2.0 * h + 1.0))
    m_cap_grid = np.broadcast_to(
        h * f_cap * np.exp(2.0 * fbar * h * (1.0 - grid.s))[None, :],
        (grid.n, grid.n))
    mask_u = np.triu(np.ones_like(obs.F, dtype=bool))
    mask_l = mask_u.T
    rows = [
        {"name": "obs_state_kernel", "sup": float(np.max(np.abs(obs.F))),
         "margin": float(np.min((f_cap_grid - np.abs(obs.F))[mask_u])),
         "violations": int(np.sum(np.abs(obs.F)[mask_u] > f_cap_grid[mask_u]))},
        {"name": "obs_lower_kernel", "sup": float(np.max(np.abs(obs.M))),
         "margin": float(np.min((m_cap_grid - np.abs(obs.M))[mask_l])),
         "violations": int(np.sum(np.abs(obs.M)[mask_l] > m_cap_grid[mask_l]))},
        {"name": "obs_upper_kernel", "sup": float(np.max(np.abs(obs.P))),
         "margin": float(m_cap - np.max(np.abs(obs.P))),
         "violations": int(np.max(np.abs(obs.P)) > m_cap)},
        {"name": "obs_conv_kernel", "sup": float(np.max(np.abs(obs.R))),
         "margin": float(m_cap - np.max(np.abs(obs.R))),
         "violations": int(np.max(np.abs(obs.R)) > m_cap)},
        # the source cap grows like exp(exp(fbar)); clamp the exponent to
        # stay representable, which only tightens the check
        {"name": "obs_source", "sup": float(np.max(np.abs(obs.S))),
         "margin": float(cbar * math.exp(min(f_cap, 690.0))
                         - np.max(np.abs(obs.S))),
         "violations": int(np.max(np.abs(obs.S))
                           > cbar * math.exp(min(f_cap, 690.0)))},
        {"name": "inv_obs_state_kernel", "sup": float(np.max(np.abs(inv_obs.Fbrv))),
         "margin": float(f_cap - np.max(np.abs(inv_obs.Fbrv))),
         "violations": int(np.max(np.abs(inv_obs.Fbrv)) > f_cap)},
        {"name": "inv_obs_sensor_kernel", "sup": float(np.max(np.abs(inv_obs.Pbrv))),
         "margin": float(h * f_cap - np.max(np.abs(inv_obs.Pbrv))),
         "violations": int(np.max(np.abs(inv_obs.Pbrv)) > h * f_cap)},
        {"name": "inv_obs_conv_kernel", "sup": float(np.max(np.abs(inv_obs.Rbrv))),
         "margin": float(h * f_cap - np.max(np.abs(inv_obs.Rbrv))),
         "violations": int(np.max(np.abs(inv_obs.Rbrv)) > h * f_cap)},
        {"name": "gain_state", "sup": float(np.max(np.abs(gains.q1))),
         "margin": float(fbar * math.exp(fbar * (2 * h + 1)) - np.max(np.abs(gains.q1))),
         "violations": int(np.max(np.abs(gains.q1)) > fbar * math.exp(fbar * (2 * h + 1)))},
        {"name": "gain_sensor", "sup": float(np.max(np.abs(gains.q2))),
         "margin": float(m_cap - np.max(np.abs(gains.q2))),
         "violations": int(np.max(np.abs(gains.q2)) > m_cap)},
    ]
    return rows


def check_bounds(coeff: CoefficientField, cfg: PlantConfig, grid: SpatialGrid,
                 kernels: ControlKernels | None = None,
                 inv: InverseKernels | None = None,
                 obs: ObserverKernels | None = None,
                 scope: str = "all") -> dict:
    """Pointwise verification of the kernel/gain bounds for one instance.

    Solves whatever is not supplied; ``scope`` restricts the check to the
    "control" or "observer" family (used by the dataset generator, which
    only stores one family's targets).  Any negative margin counts as a
    violation.
    """
    rows = []
    if scope in ("all", "control"):
        kernels = kernels or solve_control_kernels(coeff, cfg, grid)
        inv = inv or solve_inverse(kernels, coeff, cfg, grid)
        rows += (_control_bound_rows(kernels, coeff, grid)
                 + _inverse_bound_rows(kernels, inv, cfg))
    if scope in ("all", "observer"):
        obs = obs or solve_observer_kernels(coeff, cfg, grid)
        inv_obs = solve_inverse_observer(coeff, cfg, grid)
        gains = gains_from_kernels(obs, cfg)
        rows += _observer_bound_rows(obs, inv_obs, gains, coeff, cfg, grid)
    return {
        "rows": rows,
        "violations": int(sum(r["violations"] for r in rows)),
        "worst_margin": float(min(r["margin"] for r in rows)),
    }


_PROBE_DIRECTIONS = ("tau", "eta", "f", "c", "h")


def _perturbed_instance(cfg: PlantConfig, grid: SpatialGrid, direction: str,
                        delta: float) -> tuple[PlantConfig, CoefficientField]:
    tau, h = cfg.tau, cfg.h
    if direction == "tau":
        tau = tau + delta
    elif direction == "h":
        h = h + delta
    elif direction == "eta":
        h = h - delta  # eta grows by delta at fixed tau
    new_cfg = PlantConfig(tau=tau, h=h, mu1=cfg.mu1, mu2=cfg.mu2, mu3=cfg.mu3,
                          amplitude_f=cfg.amplitude_f)
    coeff = eval_coefficients(new_cfg, grid)
    if direction == "f":
        bump = np.triu(np.outer(np.sin(np.pi * grid.s), np.sin(np.pi * grid.s)))
        coeff.f_grid = coeff.f_grid + delta * bump
        base_f = coeff.f_at
        coeff.f_at = lambda s, q, _b=base_f: (
            _b(s, q) + (delta * np.sin(np.pi * s) * np.sin(np.pi * q) if s <= q else 0.0))
    elif direction == "c":
        # bump vanishing at s = 1 keeps the admissible class
        coeff.c_grid = coeff.c_grid + delta * np.sin(np.pi * grid.s)
        base_c = coeff.c_at
        coeff.c_at = lambda s, _b=base_c: _b(s) + delta * math.sin(math.pi * s)
        base_cp = coeff.c_prime_at
        coeff.c_prime_at = lambda s, _b=base_cp: (
            _b(s) + delta * math.pi * math.cos(math.pi * s))
    return new_cfg, coeff


def _gain_set(cfg: PlantConfig, coeff: CoefficientField,
              grid: SpatialGrid) -> dict[str, np.ndarray]:
    """Kernels and gains sampled on instance-independent argument sets.

    The one-variable kernels are read on [0, 1] (they vanish beyond 1, so
    nothing is lost) to keep perturbed instances comparable even when the
    delays, and with them the native domains, move.
    """
    K = solve_K(coeff, cfg, grid)
    L = np.array([eval_L(K, coeff, grid, cfg, x) for x in grid.s])
    J = np.array([eval_J(K, coeff, grid, x) for x in grid.s])
    obs = solve_observer_kernels(coeff, cfg, grid)
    gains = gains_from_kernels(obs, cfg)
    return {"K": K, "L": L, "J": J, "Q1": gains.q1, "Q2": gains.q2}


def lipschitz_probe(base: PlantConfig, grid: SpatialGrid, delta: float,
                    direction: str) -> dict:
    """Finite-difference sensitivity of each kernel/gain to one input.

    Reports sup-norm difference quotients at delta and delta/10; stability
    of the two ratios is the desk-scale evidence of local Lipschitzness.
    Quantities structurally independent of the direction come out zero.
    """
    if direction not in _PROBE_DIRECTIONS:
        raise ValueError(f"direction must be one of {_PROBE_DIRECTIONS}")
    base_coeff = eval_coefficients(base, grid)
    ref = _gain_set(base, base_coeff, grid)
    out = {"direction": direction, "delta": delta, "ratios": {}}
    for d in (delta, delta / 10.0):
        cfg_p, coeff_p = _perturbed_instance(base, grid, direction, d)
        per = _gain_set(cfg_p, coeff_p, grid)
        for name in ref:
            diff = float(np.max(np.abs(per[name] - ref[name])))
            out["ratios"].setdefault(name, []).append(diff / d)
    return out


def decay_rate(traj: Trajectory, window: tuple[float, float]) -> float:
    """Exponential rate fitted to the cascade energy on a time window.

    Fits log(l2_x^2 + l2_v^2 + l2_u^2) by least squares and returns half
    the negated slope, i.e. the rate alpha in norms ~ exp(-alpha t).
    Positive values mean decay.
    """
    t0, t1 = window
    m = (traj.times >= t0) & (traj.times <= t1)
    if int(np.sum(m)) < 2:
        raise ValueError("decay window contains fewer than two samples")
    energy = traj.l2_x[m] ** 2 + traj.l2_v[m] ** 2 + traj.l2_u[m] ** 2
    if np.any(energy <= 0.0):
        raise ValueError("decay window touches nonpositive norms")
    slope = np.polyfit(traj.times[m], np.log(energy), 1)[0]
    return float(-0.5 * slope)


# ---------------------------------------------------------------------------
# report suites


def _paper_plant() -> PlantConfig:
    return PlantConfig(tau=1.0, h=0.5, mu1=5.0, mu2=5.0, mu3=5.0)


def _report(name: str, passed: bool, payload: dict) -> dict:
    return {"suite": name, "version": __version__, "passed": bool(passed),
            **payload}


def suite_bounds(n: int = 100, seed: int = 7, ds: float = 0.02,
                 jobs: int = 1) -> dict:
    """Bound verification across a seeded family of random plants."""
    grid = SpatialGrid.from_ds(ds)
    seeds = [int(s) for s in
             np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)]
    worst = np.inf
    violations = 0
    failures = []

    def one(sd: int) -> tuple[int, float]:
        cfg = sample_plant(sd)
        coeff = eval_coefficients(cfg, grid)
        rep = check_bounds(coeff, cfg, grid)
        return rep["violations"], rep["worst_margin"]

    if jobs > 1:
        from multiprocessing import Pool
        with Pool(jobs) as pool:
            results = pool.map(_BoundsWorker(ds), seeds)
    else:
        results = [one(sd) for sd in seeds]
    for sd, (v, m) in zip(seeds, results):
        violations += v
        worst = min(worst, m)
        if v:
            failures.append(sd)
    return _report("bounds", violations == 0, {
        "n": n, "seed": seed, "ds": ds, "violations": violations,
        "worst_margin": worst, "failing_seeds": failures,
    })


class _BoundsWorker:
    """Picklable per-seed bounds check for the worker pool."""

    def __init__(self, ds: float):
        self.ds = ds

    def __call__(self, sd: int) -> tuple[int, float]:
        grid = SpatialGrid.from_ds(self.ds)
        cfg = sample_plant(sd)
        coeff = eval_coefficients(cfg, grid)
        rep = check_bounds(coeff, cfg, grid)
        return rep["violations"], rep["worst_margin"]


def suite_residual(ds_list: tuple[float, ...] = (0.02, 0.01, 0.005)) -> dict:
    """Defect of the solved kernel under grid refinement; ratios near one
    half indicate the expected first-order behaviour."""
    cfg = _paper_plant()
    residuals = []
    for ds in ds_list:
        grid = SpatialGrid.from_ds(ds)
        coeff = eval_coefficients(cfg, grid)
        K = solve_K(coeff, cfg, grid)
        residuals.append(kernel_residual(K, coeff, cfg, grid))
    ratios = [residuals[i + 1] / residuals[i] for i in range(len(residuals) - 1)]
    ok = all(0.4 <= r <= 0.7 for r in ratios)
    return _report("residual", ok, {
        "ds": list(ds_list), "residuals": residuals, "ratios": ratios,
        "window": [0.4, 0.7],
    })


def suite_cross(ds: float = 0.005, rtol: float = 1e-3,
                budget_s: float = 10.0) -> dict:
    """Fixed-point solver against the characteristics-marching oracle."""
    cfg = _paper_plant()
    grid = SpatialGrid.from_ds(ds)
    coeff = eval_coefficients(cfg, grid)
    t0 = time.perf_counter()
    K = solve_K(coeff, cfg, grid)
    solve_s = time.perf_counter() - t0
    K_fd = solve_K_characteristics(coeff, cfg, grid)
    scale = float(np.max(np.abs(K_fd)))
    rel = float(np.max(np.abs(K - K_fd)) / scale)
    ok = rel <= rtol and solve_s <= budget_s
    return _report("cross", ok, {
        "ds": ds, "rel_linf": rel, "rtol": rtol, "solve_seconds": solve_s,
        "budget_seconds": budget_s, "kernel_sup": scale,
    })


def suite_transform(ds: float = 0.02, horizon: float = 8.0) -> dict:
    """Exact-kernel closed loop: target boundary smallness and round trip."""
    cfg = _paper_plant()
    grid = SpatialGrid.from_ds(ds)
    coeff = eval_coefficients(cfg, grid)
    kernels = solve_control_kernels(coeff, cfg, grid)
    inv = solve_inverse(kernels, coeff, cfg, grid)
    gains = GainProvider.analytic(kernels, coeff, cfg, grid)
    z0_series, t_series, sup_x = _z_boundary_series(coeff, cfg, grid, gains,
                                                    horizon)
    after = cfg.tau + cfg.h
    z0_max = max((abs(z0) for t, z0 in zip(t_series, z0_series) if t >= after),
                 default=0.0)
    threshold = 5.0 * ds * sup_x

    rng = np.random.default_rng(0)
    x_r = np.sin(2 * np.pi * grid.s) + 0.3 * rng.standard_normal(grid.n)
    v_r = np.cos(np.pi * grid.s)
    u_r = 0.5 * np.sin(3 * grid.s)
    z_r = transform_forward(x_r, v_r, u_r, kernels, cfg, grid, coeff)
    x_back = transform_inverse(z_r, v_r, u_r, inv)
    round_trip = float(np.max(np.abs(x_back - x_r)) / np.max(np.abs(x_r)))
    ok = z0_max <= threshold and round_trip <= 10.0 * ds
    return _report("transform", ok, {
        "ds": ds, "z0_max_after_transient": z0_max, "threshold": threshold,
        "round_trip_rel": round_trip, "round_trip_cap": 10.0 * ds,
        "sup_x": sup_x,
    })


def _z_boundary_series(coeff, cfg, grid, gains, horizon, stride: int = 50):
    """Closed-loop run recording z(0, t) and the running sup of |x|.

    At s = 0 the forward transform subtracts exactly the feedback
    quadrature, so z(0) is the gap between the fresh boundary value and the
    feedback recomputed from the current fields.
    """
    from .simulate import Stepper, control_full_state, initial_state

    dt = default_dt(cfg, grid)
    state = initial_state(grid, np.sin(grid.s))
    stepper = Stepper(coeff, cfg, grid, dt)
    n_steps = int(np.round(horizon / dt))
    zs, ts = [], []
    sup_x = 0.0
    for k in range(n_steps + 1):
        U = control_full_state(state, gains, cfg.h, cfg.eta, grid.ds)
        if k % stride == 0:
            zs.append(float(state.x[0]) - U)
            ts.append(state.t)
            sup_x = max(sup_x, float(np.max(np.abs(state.x))))
        if k == n_steps:
            break
        state = stepper.step(state, U)
    return zs, ts, sup_x


def suite_decay(ds: float = 0.02, horizon: float = 8.0) -> dict:
    """Scenario battery: stabilizing feedback decays, the delay-ignorant
    baseline does not."""
    cfg = _paper_plant()
    grid = SpatialGrid.from_ds(ds)
    coeff = eval_coefficients(cfg, grid)
    kernels = solve_control_kernels(coeff, cfg, grid)
    obs = solve_observer_kernels(coeff, cfg, grid)
    og = gains_from_kernels(obs, cfg)
    gains = GainProvider.analytic(kernels, coeff, cfg, grid, og)
    window = (cfg.tau + cfg.h + 1.0, horizon)

    sf = run("state_fb", coeff, cfg, grid, gains, horizon)
    alpha_sf = decay_rate(sf, window)
    ratio_sf = float(sf.l2_x[-1] / sf.l2_x[0])

    base = GainProvider.uncompensated(coeff, cfg, grid)
    un = run("uncompensated", coeff, cfg, grid, base, horizon)
    ratio_un = float(un.l2_x[-1] / un.l2_x[0])

    of = run("output_fb", coeff, cfg, grid, gains, horizon,
             xh0=np.zeros(grid.n))
    alpha_of = decay_rate(of, window)

    ok = (alpha_sf > 0.0 and ratio_sf <= 1e-2 and ratio_un >= 1.0
          and alpha_of > 0.0)
    return _report("decay", ok, {
        "ds": ds, "horizon": horizon, "alpha_state_fb": alpha_sf,
        "x_ratio_state_fb": ratio_sf, "x_ratio_uncompensated": ratio_un,
        "alpha_output_fb": alpha_of, "window": list(window),
    })


def suite_observer(ds: float = 0.02, horizon: float = 5.0) -> dict:
    """Estimation study under a prescribed input with a grossly wrong guess."""
    cfg = _paper_plant()
    grid = SpatialGrid.from_ds(ds)
    coeff = eval_coefficients(cfg, grid)
    obs_k = solve_observer_kernels(coeff, cfg, grid)
    og = gains_from_kernels(obs_k, cfg)
    gains = GainProvider("analytic", np.zeros(grid.n), np.zeros(grid.n),
                         np.zeros(grid.n), q1=og.q1, q2=og.q2)
    forcing = lambda t: 5.0 * math.sin(3.0 * math.pi * t) + 3.0 * math.cos(2.0 * math.pi * t)
    traj = run_observer(coeff, cfg, grid, gains, forcing, horizon,
                        x0=np.sin(2 * np.pi * grid.s),
                        xh0=np.full(grid.n, 10.0))
    ratio = float(traj.err_l2[-1] / traj.err_l2[0])
    ok = ratio <= 1e-3
    return _report("observer", ok, {
        "ds": ds, "horizon": horizon, "err_initial": float(traj.err_l2[0]),
        "err_final": float(traj.err_l2[-1]), "err_ratio": ratio,
        "threshold": 1e-3,
    })


def suite_robustness(amplitude: float = 1e-2, seed: int = 11,
                     ds: float = 0.02, horizon: float = 8.0) -> dict:
    """Uniform gain perturbations must leave both loops decaying."""
    cfg = _paper_plant()
    grid = SpatialGrid.from_ds(ds)
    coeff = eval_coefficients(cfg, grid)
    kernels = solve_control_kernels(coeff, cfg, grid)
    obs = solve_observer_kernels(coeff, cfg, grid)
    og = gains_from_kernels(obs, cfg)
    exact = GainProvider.analytic(kernels, coeff, cfg, grid, og)
    noisy = exact.perturbed(amplitude, seed)
    window = (cfg.tau + cfg.h + 1.0, horizon)
    sf = run("state_fb", coeff, cfg, grid, noisy, horizon)
    alpha_sf = decay_rate(sf, window)
    of = run("output_fb", coeff, cfg, grid, noisy, horizon,
             xh0=np.zeros(grid.n))
    alpha_of = decay_rate(of, window)
    ok = alpha_sf > 0.0 and alpha_of > 0.0
    return _report("robustness", ok, {
        "amplitude": amplitude, "seed": seed, "ds": ds,
        "alpha_state_fb": alpha_sf, "alpha_output_fb": alpha_of,
    })


def suite_lipschitz(n: int = 10, seed: int = 5, ds: float = 0.02,
                    deltas: tuple[float, float] = (1e-2, 1e-3),
                    factor: float = 3.0) -> dict:
    """Difference-quotient stability across plants and directions."""
    grid = SpatialGrid.from_ds(ds)
    seeds = [int(s) for s in
             np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)]
    rows = []
    ok = True
    for sd in seeds:
        cfg = sample_plant(sd)
        for direction in ("tau", "f", "c", "h"):
            probe = lipschitz_probe(cfg, grid, deltas[0], direction)
            for name, (r_big, r_small) in probe["ratios"].items():
                lo, hi = sorted((r_big, r_small))
                if hi < 1e-9:
                    stable = True  # structurally insensitive direction
                else:
                    stable = lo > 0.0 and hi <= factor * lo
                ok = ok and stable
                rows.append({"seed": sd, "direction": direction,
                             "kernel": name, "ratio_coarse": r_big,
                             "ratio_fine": r_small, "stable": stable})
    return _report("lipschitz", ok, {
        "n": n, "seed": seed, "ds": ds, "deltas": list(deltas),
        "factor": factor, "rows": rows,
    })


def suite_forward(seed: int = 3) -> dict:
    """Neural forward pass against its straight-line reference, plus a
    container round trip."""
    import os
    import tempfile

    from . import neuralop
    from .container import read_container, write_container

    report_rows = []
    ok = True
    for kind in ("K", "Q1"):
        cfg = neuralop.default_config(kind)
        weights = neuralop.random_weights(cfg, seed=seed)
        rng = np.random.default_rng(seed + 1)
        enc = rng.standard_normal((cfg.input_channels, cfg.grid_points,
                                   cfg.grid_points))
        if cfg.query_dim == 2:
            queries = rng.uniform(0.0, 1.0, size=(40, 2))
        else:
            queries = rng.uniform(0.0, 1.0, size=(40, 1))
        fast = neuralop.forward(weights, enc, queries)
        slow = neuralop.reference_forward(weights, enc, queries)
        err = float(np.max(np.abs(fast - slow)))
        report_rows.append({"kind": kind, "max_abs_err": err})
        ok = ok and err <= 1e-12

    with tempfile.TemporaryDirectory() as td:
        path = os.path.join(td, "rt.pdon")
        rng = np.random.default_rng(seed)
        arrays = {"a": rng.standard_normal((7, 3)), "b": rng.standard_normal(5)}
        write_container(path, arrays, meta={"probe": True})
        back = read_container(path)
        bit_exact = all(np.array_equal(arrays[k], back.arrays[k])
                        for k in arrays)
    ok = ok and bit_exact
    return _report("forward", ok, {
        "rows": report_rows, "container_bit_exact": bool(bit_exact),
        "tolerance": 1e-12,
    })


SUITES = {
    "bounds": suite_bounds,
    "residual": suite_residual,
    "cross": suite_cross,
    "transform": suite_transform,
    "decay": suite_decay,
    "observer": suite_observer,
    "robustness": suite_robustness,
    "lipschitz": suite_lipschitz,
    "forward": suite_forward,
}


def run_suite(name: str, **kwargs) -> dict:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**kwargs)
