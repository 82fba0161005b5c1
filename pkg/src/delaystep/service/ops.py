"""Service-layer operations: one function per endpoint/subcommand.

The CLI calls these directly; the HTTP routes wrap them.  All functions
take and return the pydantic models from ``schemas``.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from .. import verify
from ..container import read_container
from ..dataset import gen_dataset, write_dataset
from ..kernels import solve_control_kernels, solve_inverse
from ..neuralop import (
    bench_inference,
    default_config,
    gains_from_network,
    load_weights,
    random_weights,
)
from ..observer import gains_from_kernels, solve_observer_kernels
from ..plant import (
    PlantConfig,
    SpatialGrid,
    eval_coefficients,
    tabulated_coefficients,
)
from ..simulate import INITIAL_PROFILES, GainProvider, run, run_observer
from . import schemas as sc

__all__ = [
    "plant_objects", "op_kernels", "op_observer_gains", "op_simulate",
    "op_verify", "op_dataset", "op_infer", "op_bench", "op_train_stub",
]


def plant_objects(spec: sc.PlantSpec, ds: float):
    grid = SpatialGrid.from_ds(ds)
    cfg = PlantConfig(tau=spec.tau, h=spec.h, mu1=spec.mu1, mu2=spec.mu2,
                      mu3=spec.mu3, amplitude_f=spec.amplitude_f)
    if spec.f_grid is not None:
        src_grid = SpatialGrid.from_ds(spec.ds)
        if src_grid.n != grid.n:
            raise ValueError("tabulated plants must be supplied on the "
                             "requested grid")
        coeff = tabulated_coefficients(np.asarray(spec.f_grid),
                                       np.asarray(spec.c_grid), grid)
    else:
        coeff = eval_coefficients(cfg, grid)
    return cfg, coeff, grid


def op_kernels(req: sc.KernelsRequest) -> sc.KernelsResponse:
    cfg, coeff, grid = plant_objects(req.plant, req.ds)
    kernels = solve_control_kernels(coeff, cfg, grid, tol=req.tol,
                                    max_iter=req.max_iter)
    resp = sc.KernelsResponse(
        K=kernels.K.tolist(), L=kernels.L.tolist(), J=kernels.J.tolist(),
        ds=grid.ds, h=cfg.h, eta=cfg.eta, tau=cfg.tau)
    if req.with_inverse:
        inv = solve_inverse(kernels, coeff, cfg, grid, tol=req.tol,
                            max_iter=req.max_iter)
        resp.B, resp.D, resp.E = inv.B.tolist(), inv.D.tolist(), inv.E.tolist()
    return resp


def op_observer_gains(req: sc.ObserverGainsRequest) -> sc.ObserverGainsResponse:
    cfg, coeff, grid = plant_objects(req.plant, req.ds)
    obs = solve_observer_kernels(coeff, cfg, grid, tol=req.tol)
    gains = gains_from_kernels(obs, cfg)
    resp = sc.ObserverGainsResponse(q1=gains.q1.tolist(), q2=gains.q2.tolist(),
                                    ds=grid.ds)
    if req.with_kernels:
        resp.F = obs.F.tolist()
        resp.M = obs.M.tolist()
        resp.P = obs.P.tolist()
        resp.R = obs.R.tolist()
        resp.S = obs.S.tolist()
    return resp


def _gains_for(req: sc.SimulateRequest, cfg, coeff, grid) -> GainProvider:
    if req.gains_from == "analytic":
        if req.mode == "uncompensated":
            return GainProvider.uncompensated(coeff, cfg, grid)
        if req.mode == "open_loop":
            return GainProvider.zero(grid)
        kernels = solve_control_kernels(coeff, cfg, grid)
        og = None
        if req.mode in ("output_fb", "observer"):
            og = gains_from_kernels(solve_observer_kernels(coeff, cfg, grid), cfg)
        g = GainProvider.analytic(kernels, coeff, cfg, grid, og)
    elif req.gains_from == "file":
        g = _gains_from_container(req.gains_path, grid)
    else:
        bundle = load_weights(req.gains_path)
        enc_grid = SpatialGrid.from_ds(
            1.0 / (bundle[next(iter(bundle))].config.grid_points - 1))
        enc_coeff = eval_coefficients(cfg, enc_grid)
        need = {"state_fb": "control", "uncompensated": "control",
                "open_loop": "control", "output_fb": "both",
                "observer": "observer"}[req.mode]
        g = gains_from_network(bundle, cfg, enc_coeff, grid, need=need)
    if req.perturb_amplitude > 0.0:
        g = g.perturbed(req.perturb_amplitude, req.perturb_seed)
    return g


def _gains_from_container(path: str, grid: SpatialGrid) -> GainProvider:
    cont = read_container(path)
    need = {"K", "L", "J"}
    if not need.issubset(cont.arrays):
        raise ValueError(f"gain container must hold arrays {sorted(need)}")
    meta = cont.meta
    h, eta = float(meta["h"]), float(meta["eta"])
    K = cont["K"]
    src = np.linspace(0.0, 1.0, K.shape[0])
    k0 = np.interp(grid.s, src, K[0, :])
    l_dom = np.linspace(0.0, 1.0 + h, cont["L"].shape[0])
    l_h = np.interp(h * grid.s, l_dom, cont["L"])
    j_dom = np.linspace(0.0, 1.0 + eta, cont["J"].shape[0])
    j_eta = np.interp(eta * grid.s, j_dom, cont["J"])
    q1 = q2 = None
    if "Q1" in cont.arrays:
        q1 = np.interp(grid.s, src, cont["Q1"])
        q2 = np.interp(grid.s, src, cont["Q2"])
    return GainProvider("file", k0, l_h, j_eta, q1=q1, q2=q2)


def op_simulate(req: sc.SimulateRequest) -> sc.TrajectoryResponse:
    cfg, coeff, grid = plant_objects(req.plant, req.ds)
    gains = _gains_for(req, cfg, coeff, grid)
    x0 = req.x0_amp * INITIAL_PROFILES[req.x0](grid.s)
    if req.mode == "observer":
        a, b, c, d = req.forcing
        forcing = lambda t: a * math.sin(b * math.pi * t) + c * math.cos(d * math.pi * t)
        traj = run_observer(coeff, cfg, grid, gains, forcing, req.horizon,
                            dt=req.dt, x0=x0,
                            xh0=np.full(grid.n, req.xh0_const),
                            stride=req.stride, snapshots=req.snapshots)
    else:
        traj = run(req.mode, coeff, cfg, grid, gains, req.horizon, dt=req.dt,
                   x0=x0, xh0=np.full(grid.n, req.xh0_const),
                   stride=req.stride, snapshots=req.snapshots)
    return sc.TrajectoryResponse(
        times=traj.times.tolist(), l2_x=traj.l2_x.tolist(),
        l2_v=traj.l2_v.tolist(), l2_u=traj.l2_u.tolist(), U=traj.U.tolist(),
        err_l2=None if traj.err_l2 is None else traj.err_l2.tolist(),
        csv=traj.to_csv(),
        snapshots_csv=traj.snapshots_csv(grid) if req.snapshots else None)


# which request fields each suite understands
_SUITE_PARAMS = {
    "bounds": ("n", "seed", "ds", "jobs"),
    "residual": (),
    "cross": ("ds",),
    "transform": ("ds",),
    "decay": ("ds",),
    "observer": ("ds",),
    "robustness": ("amplitude", "seed", "ds"),
    "lipschitz": ("n", "seed", "ds"),
    "forward": ("seed",),
}


def op_verify(req: sc.VerifyRequest) -> sc.ReportResponse:
    kwargs = {}
    for name in _SUITE_PARAMS[req.suite]:
        val = getattr(req, name)
        if val is not None:
            kwargs[name] = val
    return sc.ReportResponse(report=verify.run_suite(req.suite, **kwargs))


def op_dataset(req: sc.DatasetRequest) -> sc.DatasetResponse:
    ds = gen_dataset(req.n, req.seed, kind=req.kind, ds=req.ds, jobs=req.jobs)
    write_dataset(req.out, ds)
    digest = hashlib.sha256(open(req.out, "rb").read()).hexdigest()
    return sc.DatasetResponse(path=req.out, n=req.n, kind=req.kind,
                              sha256=digest)


def op_infer(req: sc.InferRequest) -> sc.InferResponse:
    bundle = load_weights(req.weights_path)
    grid = SpatialGrid.from_ds(req.ds)
    cfg, _, _ = plant_objects(req.plant, req.ds)
    enc_grid = SpatialGrid.from_ds(
        1.0 / (bundle[next(iter(bundle))].config.grid_points - 1))
    enc_coeff = eval_coefficients(cfg, enc_grid)
    g = gains_from_network(bundle, cfg, enc_coeff, grid, need=req.need)
    return sc.InferResponse(
        k0=g.k0.tolist(), l_h=g.l_h.tolist(), j_eta=g.j_eta.tolist(),
        q1=None if g.q1 is None else g.q1.tolist(),
        q2=None if g.q2 is None else g.q2.tolist(), ds=req.ds)


def op_bench(req: sc.BenchRequest) -> sc.BenchResponse:
    if req.weights_path:
        bundle = load_weights(req.weights_path)
    else:
        kinds = (("K", "L", "J") if req.target == "control" else ("Q1", "Q2"))
        bundle = {k: random_weights(default_config(k), seed=req.seed + i)
                  for i, k in enumerate(kinds)}
    seeds = [req.seed + i for i in range(req.n_plants)]
    report = bench_inference(bundle, seeds, tuple(req.ds_list),
                             runs=req.runs, target=req.target)
    report["weights"] = req.weights_path or "random (shape-determined timing)"
    return sc.BenchResponse(report=report)


def op_train_stub(req: sc.TrainStubRequest) -> sc.TrainStubResponse:
    cont = read_container(req.dataset_path)
    meta = cont.meta
    return sc.TrainStubResponse(
        n=int(meta.get("n", 0)), kind=str(meta.get("kind", "?")),
        note="training lives in the separate trainer package (trainer/): "
             "npm install && npm run train -- --dataset <file> --net K --out w.pdon")
