"""Time integration of the plant cascade, the observer copy, and the controllers.

The plant is a rightward transport PIDE on [0, 1] fed at s = 0 by the
control input, plus two leftward transport lines realizing the delays: the
sensor line v (speed 1/h, fed by the in-domain boundary value) and the
recycle line u (speed 1/eta, fed by the sensor-line outflow).  Everything is
discretized with first-order upwind differences and explicit Euler steps
under a CFL guard; integral terms use the trapezoid rule.

The observer advances an identical cascade driven by the measured sensor
outflow, with output injection on the state and sensor line, and its
recycle inflow replayed from a ring buffer of delayed boundary samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from ._quad import upper_trapz_matvec
from .kernels import ControlKernels, eval_J, eval_L, solve_K
from .observer import ObserverGains
from .plant import CoefficientField, PlantConfig, SpatialGrid

__all__ = [
    "GainProvider",
    "CascadeState",
    "ObserverState",
    "BoundaryHistory",
    "Trajectory",
    "SimulationDiverged",
    "Stepper",
    "control_full_state",
    "control_output_feedback",
    "default_dt",
    "initial_state",
    "run",
    "run_observer",
    "INITIAL_PROFILES",
]

Mode = Literal["open_loop", "uncompensated", "state_fb", "output_fb"]


class SimulationDiverged(RuntimeError):
    """NaN/Inf detected mid-run; carries the offending time."""


@dataclass
class GainProvider:
    """Feedback and injection gains sampled on the simulation grid.

    ``k0`` is the state-weighting gain (the s = 0 trace of the Volterra
    kernel), ``l_h`` and ``j_eta`` the delay-line gains evaluated at h*r and
    eta*r, and ``q1``/``q2`` the observer injection gains.  ``kind`` records
    the provenance: analytic solve, container file, neural inference,
    uncompensated baseline, or a perturbed copy.
    """

    kind: str
    k0: np.ndarray
    l_h: np.ndarray
    j_eta: np.ndarray
    q1: np.ndarray | None = None
    q2: np.ndarray | None = None

    @staticmethod
    def zero(grid: SpatialGrid) -> "GainProvider":
        z = np.zeros(grid.n)
        return GainProvider("zero", z, z.copy(), z.copy(), z.copy(), z.copy())

    @staticmethod
    def analytic(kernels: ControlKernels, coeff: CoefficientField,
                 cfg: PlantConfig, grid: SpatialGrid,
                 gains: ObserverGains | None = None) -> "GainProvider":
        k0 = kernels.K[0, :].copy()
        l_h = np.array([eval_L(kernels.K, coeff, grid, cfg, cfg.h * r)
                        for r in grid.s])
        j_eta = np.array([eval_J(kernels.K, coeff, grid, cfg.eta * r)
                          for r in grid.s])
        return GainProvider("analytic", k0, l_h, j_eta,
                            q1=None if gains is None else gains.q1.copy(),
                            q2=None if gains is None else gains.q2.copy())

    @staticmethod
    def uncompensated(coeff: CoefficientField, cfg: PlantConfig,
                      grid: SpatialGrid) -> "GainProvider":
        """Nominal design that ignores both delays: the kernel of the
        delay-free plant and no delay-line terms."""
        class _Zero:
            tau = 0.0
        k_free = solve_K(coeff, _Zero(), grid)
        z = np.zeros(grid.n)
        return GainProvider("uncompensated", k_free[0, :].copy(), z, z.copy())

    def perturbed(self, amplitude: float, seed: int) -> "GainProvider":
        """Uniform noise of the given amplitude on every gain sample."""
        rng = np.random.default_rng(seed)

        def bump(v: np.ndarray | None) -> np.ndarray | None:
            if v is None:
                return None
            return v + rng.uniform(-amplitude, amplitude, size=v.shape)

        return GainProvider(f"{self.kind}+noise", bump(self.k0), bump(self.l_h),
                            bump(self.j_eta), bump(self.q1), bump(self.q2))


@dataclass
class CascadeState:
    """Discretized plant fields at one instant."""

    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    t: float


@dataclass
class ObserverState:
    """Observer copy of the cascade plus the delayed-boundary stream.

    The stream buffers timestamped samples of the measured boundary value
    x(1, t - h); the observer's recycle inflow is read from it.  Keeping the
    buffer in measurement form makes the inflow numerically identical to
    what feeds the plant's own recycle line, so an exactly initialized
    observer tracks the plant bit for bit.
    """

    xh: np.ndarray
    vh: np.ndarray
    uh: np.ndarray
    history: "BoundaryHistory"


class BoundaryHistory:
    """Time-ordered buffer of boundary samples with linear interpolation.

    Pushes must come in nondecreasing time order (prefill then the
    simulation loop both satisfy this), so lookups are a binary search.
    Pre-simulation history is synthesized from the delay-line initial
    conditions, which carry the boundary's past by construction.
    """

    def __init__(self, capacity: int):
        self._t = np.empty(capacity)
        self._v = np.empty(capacity)
        self._count = 0

    def push(self, t: float, value: float) -> None:
        if self._count == self._t.shape[0]:
            self._t = np.concatenate([self._t, np.empty(self._t.shape[0])])
            self._v = np.concatenate([self._v, np.empty(self._v.shape[0])])
        if self._count and t < self._t[self._count - 1] - 1e-12:
            raise ValueError("history pushes must be time-ordered")
        self._t[self._count] = t
        self._v[self._count] = value
        self._count += 1

    def query(self, t: float) -> float:
        if self._count == 0:
            raise RuntimeError("boundary history is empty")
        ts = self._t[: self._count]
        vs = self._v[: self._count]
        k = int(np.searchsorted(ts, t))
        if k <= 0:
            return float(vs[0])
        if k >= self._count:
            return float(vs[self._count - 1])
        w = (t - ts[k - 1]) / (ts[k] - ts[k - 1])
        return float((1.0 - w) * vs[k - 1] + w * vs[k])

    @staticmethod
    def prefill(cfg: PlantConfig, v0: np.ndarray, u0: np.ndarray,
                grid: SpatialGrid, horizon: float, dt: float) -> "BoundaryHistory":
        """Seed the delayed-boundary stream from the delay-line data.

        The stream holds samples of x(1, t - h), i.e. the measurement.  The
        recycle line carries x(1, t - h - eta(1-s)), so at t = 0 it provides
        the stream on [-eta, 0]; the sensor line pins the t = 0 value.
        """
        capacity = int(np.ceil(horizon / dt)) + 2 * grid.n + 8
        hist = BoundaryHistory(capacity)
        for s_k, u_k in zip(grid.s[:-1], u0[:-1]):
            hist.push(-cfg.eta * (1.0 - s_k), float(u_k))
        hist.push(0.0, float(v0[0]))
        return hist


@dataclass
class Trajectory:
    """Recorded run: times, trapezoid L2 norms, control input, optional snapshots."""

    times: np.ndarray
    l2_x: np.ndarray
    l2_v: np.ndarray
    l2_u: np.ndarray
    U: np.ndarray
    snapshots: np.ndarray | None = None  # (len(times), n) samples of x
    err_l2: np.ndarray | None = None     # observer-error L2, observer runs only
    xh_snapshots: np.ndarray | None = None

    def to_csv(self) -> str:
        lines = ["t,l2_x,l2_v,l2_u,U"]
        for k in range(self.times.shape[0]):
            lines.append(f"{self.times[k]:.10g},{self.l2_x[k]:.10g},"
                         f"{self.l2_v[k]:.10g},{self.l2_u[k]:.10g},{self.U[k]:.10g}")
        return "\n".join(lines) + "\n"

    def snapshots_csv(self, grid: SpatialGrid) -> str:
        if self.snapshots is None:
            raise ValueError("run was recorded without snapshots")
        lines = ["t,s,x"]
        for k, t in enumerate(self.times):
            for i, s in enumerate(grid.s):
                lines.append(f"{t:.10g},{s:.10g},{self.snapshots[k, i]:.10g}")
        return "\n".join(lines) + "\n"


def _l2(vec: np.ndarray, ds: float) -> float:
    return float(np.sqrt(np.trapezoid(vec * vec, dx=ds)))


def control_full_state(state: CascadeState, g: GainProvider, h: float,
                       eta: float, ds: float) -> float:
    """Feedback value: weighted trapezoid integrals of the three fields."""
    term_x = np.trapezoid(g.k0 * state.x, dx=ds)
    term_v = h * np.trapezoid(g.l_h * state.v, dx=ds)
    term_u = eta * np.trapezoid(g.j_eta * state.u, dx=ds)
    return float(term_x + term_v + term_u)


def control_output_feedback(obs: ObserverState, g: GainProvider, h: float,
                            eta: float, ds: float) -> float:
    """Same quadrature applied to the observer fields."""
    term_x = np.trapezoid(g.k0 * obs.xh, dx=ds)
    term_v = h * np.trapezoid(g.l_h * obs.vh, dx=ds)
    term_u = eta * np.trapezoid(g.j_eta * obs.uh, dx=ds)
    return float(term_x + term_v + term_u)


def default_dt(cfg: PlantConfig, grid: SpatialGrid) -> float:
    return min(1e-3, 0.5 * cfg.h * grid.ds, 0.5 * cfg.eta * grid.ds)


def _check_cfl(cfg: PlantConfig, grid: SpatialGrid, dt: float) -> None:
    limit = min(grid.ds, cfg.h * grid.ds, cfg.eta * grid.ds)
    if dt > limit * (1.0 + 1e-12):
        raise ValueError(f"dt={dt} violates the CFL bound {limit:.3e}")


class Stepper:
    """Explicit upwind stepper for the plant cascade.

    Boundary couplings are applied in a fixed order after the interior
    updates: sensor inflow from the fresh state boundary, recycle inflow
    from the fresh sensor outflow, then the control value at s = 0.
    """

    def __init__(self, coeff: CoefficientField, cfg: PlantConfig,
                 grid: SpatialGrid, dt: float):
        _check_cfl(cfg, grid, dt)
        self.coeff = coeff
        self.cfg = cfg
        self.grid = grid
        self.dt = dt

    def step(self, state: CascadeState, U: float) -> CascadeState:
        cfg, grid, dt = self.cfg, self.grid, self.dt
        ds = grid.ds
        x, v, u = state.x, state.v, state.u
        nonlocal_term = upper_trapz_matvec(self.coeff.f_grid, x, ds)
        source = self.coeff.c_grid * u[0] + nonlocal_term
        x_new = x.copy()
        x_new[1:] = x[1:] - (dt / ds) * (x[1:] - x[:-1]) + dt * source[1:]
        v_new = v.copy()
        v_new[:-1] = v[:-1] + (dt / (cfg.h * ds)) * (v[1:] - v[:-1])
        u_new = u.copy()
        u_new[:-1] = u[:-1] + (dt / (cfg.eta * ds)) * (u[1:] - u[:-1])
        v_new[-1] = x_new[-1]
        u_new[-1] = v_new[0]
        x_new[0] = U
        return CascadeState(x=x_new, v=v_new, u=u_new, t=state.t + dt)

    def observer_step(self, obs: ObserverState, measured_v0: float, U: float,
                      gains: GainProvider, t: float) -> ObserverState:
        """Advance the observer copy with output injection.

        ``measured_v0`` is the plant's sensor outflow v(0, t) = x(1, t - h);
        the recycle inflow at the new time is read from the measurement
        stream (linear interpolation between samples).
        """
        cfg, grid, dt = self.cfg, self.grid, self.dt
        ds = grid.ds
        xh, vh, uh = obs.xh, obs.vh, obs.uh
        innovation = measured_v0 - vh[0]
        q1 = gains.q1 if gains.q1 is not None else np.zeros(grid.n)
        q2 = gains.q2 if gains.q2 is not None else np.zeros(grid.n)
        nonlocal_term = upper_trapz_matvec(self.coeff.f_grid, xh, ds)
        source = self.coeff.c_grid * uh[0] + nonlocal_term + q1 * innovation
        xh_new = xh.copy()
        xh_new[1:] = xh[1:] - (dt / ds) * (xh[1:] - xh[:-1]) + dt * source[1:]
        vh_new = vh.copy()
        vh_new[:-1] = (vh[:-1] + (dt / (cfg.h * ds)) * (vh[1:] - vh[:-1])
                       + (dt / cfg.h) * q2[:-1] * innovation)
        uh_new = uh.copy()
        uh_new[:-1] = uh[:-1] + (dt / (cfg.eta * ds)) * (uh[1:] - uh[:-1])
        vh_new[-1] = xh_new[-1]
        uh_new[-1] = obs.history.query(t + dt)
        xh_new[0] = U
        return ObserverState(xh=xh_new, vh=vh_new, uh=uh_new, history=obs.history)


INITIAL_PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": lambda s: np.sin(s),
    "sin2pi": lambda s: np.sin(2.0 * np.pi * s),
    "zero": lambda s: np.zeros_like(s),
    "one": lambda s: np.ones_like(s),
}


def initial_state(grid: SpatialGrid, x0: np.ndarray,
                  v0: np.ndarray | None = None,
                  u0: np.ndarray | None = None) -> CascadeState:
    """Assemble the start state; missing delay lines default to the steady
    extension of the boundary value x0(1) through the couplings."""
    if v0 is None:
        v0 = np.full(grid.n, x0[-1])
    if u0 is None:
        u0 = np.full(grid.n, x0[-1])
    return CascadeState(x=x0.copy(), v=v0.copy(), u=u0.copy(), t=0.0)


def _record(traj_lists, state: CascadeState, U: float, ds: float,
            snapshots: bool, obs: ObserverState | None = None) -> None:
    times, lx, lv, lu, us, snaps, errs, xh_snaps = traj_lists
    times.append(state.t)
    lx.append(_l2(state.x, ds))
    lv.append(_l2(state.v, ds))
    lu.append(_l2(state.u, ds))
    us.append(U)
    if snapshots:
        snaps.append(state.x.copy())
    if obs is not None:
        errs.append(_l2(state.x - obs.xh, ds))
        if snapshots:
            xh_snaps.append(obs.xh.copy())


def _finalize(traj_lists, snapshots: bool, with_obs: bool) -> Trajectory:
    times, lx, lv, lu, us, snaps, errs, xh_snaps = traj_lists
    return Trajectory(
        times=np.array(times), l2_x=np.array(lx), l2_v=np.array(lv),
        l2_u=np.array(lu), U=np.array(us),
        snapshots=np.array(snaps) if snapshots else None,
        err_l2=np.array(errs) if with_obs else None,
        xh_snapshots=np.array(xh_snaps) if (with_obs and snapshots) else None,
    )


def _guard_finite(state: CascadeState) -> None:
    if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.v))
            and np.all(np.isfinite(state.u))):
        raise SimulationDiverged(f"non-finite state at t={state.t:.4f}")


def run(mode: Mode, coeff: CoefficientField, cfg: PlantConfig,
        grid: SpatialGrid, gains: GainProvider, horizon: float,
        dt: float | None = None, x0: np.ndarray | None = None,
        v0: np.ndarray | None = None, u0: np.ndarray | None = None,
        xh0: np.ndarray | None = None, stride: int = 10,
        snapshots: bool = False) -> Trajectory:
    """Integrate one closed- or open-loop scenario and record the trajectory.

    Deterministic: identical inputs produce identical outputs bit for bit.
    Output-feedback mode runs the observer alongside the plant and feeds
    back the observer fields.
    """
    dt = default_dt(cfg, grid) if dt is None else dt
    if x0 is None:
        x0 = INITIAL_PROFILES["sin"](grid.s)
    state = initial_state(grid, x0, v0, u0)
    stepper = Stepper(coeff, cfg, grid, dt)

    obs: ObserverState | None = None
    if mode == "output_fb":
        xh = np.zeros(grid.n) if xh0 is None else xh0.copy()
        # the recycle inflow replays the true boundary, so the history is
        # prefilled from the plant's delay lines, not the observer's guess
        hist = BoundaryHistory.prefill(cfg, state.v, state.u, grid, horizon, dt)
        obs = ObserverState(xh=xh, vh=np.full(grid.n, xh[-1]),
                            uh=np.full(grid.n, xh[-1]), history=hist)

    n_steps = int(np.round(horizon / dt))
    traj_lists = ([], [], [], [], [], [], [], [])

    for k in range(n_steps + 1):
        if mode == "open_loop":
            U = 0.0
        elif mode in ("uncompensated", "state_fb"):
            U = control_full_state(state, gains, cfg.h, cfg.eta, grid.ds)
        elif mode == "output_fb":
            U = control_output_feedback(obs, gains, cfg.h, cfg.eta, grid.ds)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if k % stride == 0:
            _record(traj_lists, state, U, grid.ds, snapshots, obs)
            _guard_finite(state)
        if k == n_steps:
            break
        if mode == "output_fb":
            measured = float(state.v[0])
            new_state = stepper.step(state, U)
            obs.history.push(new_state.t, float(new_state.v[0]))
            obs = stepper.observer_step(obs, measured, U, gains, state.t)
            state = new_state
        else:
            state = stepper.step(state, U)
    return _finalize(traj_lists, snapshots, mode == "output_fb")


def run_observer(coeff: CoefficientField, cfg: PlantConfig, grid: SpatialGrid,
                 gains: GainProvider, forcing: Callable[[float], float],
                 horizon: float, dt: float | None = None,
                 x0: np.ndarray | None = None,
                 xh0: np.ndarray | None = None, stride: int = 10,
                 snapshots: bool = False) -> Trajectory:
    """Open-loop plant driven by a prescribed input, tracked by the observer.

    Used for estimation studies: the plant and observer share the input
    signal, the observer sees only the delayed boundary measurement.
    """
    dt = default_dt(cfg, grid) if dt is None else dt
    if x0 is None:
        x0 = INITIAL_PROFILES["sin2pi"](grid.s)
    state = initial_state(grid, x0)
    stepper = Stepper(coeff, cfg, grid, dt)
    xh = np.full(grid.n, 10.0) if xh0 is None else xh0.copy()
    hist = BoundaryHistory.prefill(cfg, state.v, state.u, grid, horizon, dt)
    obs = ObserverState(xh=xh, vh=np.full(grid.n, xh[-1]),
                        uh=np.full(grid.n, xh[-1]), history=hist)

    n_steps = int(np.round(horizon / dt))
    traj_lists = ([], [], [], [], [], [], [], [])
    for k in range(n_steps + 1):
        U = float(forcing(state.t))
        if k % stride == 0:
            _record(traj_lists, state, U, grid.ds, snapshots, obs)
            _guard_finite(state)
        if k == n_steps:
            break
        measured = float(state.v[0])
        new_state = stepper.step(state, U)
        obs.history.push(new_state.t, float(new_state.v[0]))
        obs = stepper.observer_step(obs, measured, U, gains, state.t)
        state = new_state
    return _finalize(traj_lists, snapshots, True)
