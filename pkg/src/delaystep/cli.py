"""Command-line client for the gain-computation service.

Each subcommand marshals its flags into the service request models and
executes them either in process (default) or against a running server via
``--url``.  File outputs land under $DELAYSTEP_OUT when a relative ``--out``
is given.  Exit codes: 0 success, 1 usage error, 2 numeric failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import urllib.request
from pathlib import Path

import numpy as np

from . import __version__
from .container import ContainerError, write_container
from .kernels import KernelSolveError
from .service import ops
from .service import schemas as sc
from .simulate import SimulationDiverged

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract says 1
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _out_path(raw: str | None) -> Path | None:
    if raw is None:
        return None
    p = Path(raw)
    base = os.environ.get("DELAYSTEP_OUT")
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text)
        print(out)


def _plant_args(p: _Parser) -> None:
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--mu1", type=float, default=5.0)
    p.add_argument("--mu2", type=float, default=5.0)
    p.add_argument("--mu3", type=float, default=5.0)
    p.add_argument("--amplitude-f", type=float, default=9.0)
    p.add_argument("--plant-json", type=str, default=None,
                   help="JSON plant spec file; overrides the flags above")


def _plant_spec(args) -> sc.PlantSpec:
    if args.plant_json:
        return sc.PlantSpec(**json.loads(Path(args.plant_json).read_text()))
    return sc.PlantSpec(tau=args.tau, h=args.h, mu1=args.mu1, mu2=args.mu2,
                        mu3=args.mu3, amplitude_f=args.amplitude_f)


def _remote(url: str, route: str, payload) -> dict:
    body = payload.model_dump_json().encode()
    req = urllib.request.Request(f"{url.rstrip('/')}/{route}", data=body,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode())


def _call(args, route: str, op, req, resp_model):
    if getattr(args, "url", None):
        return resp_model(**_remote(args.url, route, req))
    return op(req)


def build_parser() -> _Parser:
    p = _Parser(prog="delaystep", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(q):
        q.add_argument("--url", type=str, default=None,
                       help="base URL of a running service; default in-process")
        q.add_argument("--out", type=str, default=None)
        q.add_argument("--format", choices=("csv", "json"), default="json")
        return q

    q = common(sub.add_parser("kernels", help="solve the control kernels"))
    _plant_args(q)
    q.add_argument("--ds", type=float, default=0.02)
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--max-iter", type=int, default=200)
    q.add_argument("--with-inverse", action="store_true")

    q = common(sub.add_parser("observer-gains", help="solve the observer gains"))
    _plant_args(q)
    q.add_argument("--ds", type=float, default=0.02)
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--with-kernels", action="store_true")

    q = common(sub.add_parser("dataset", help="generate a training corpus"))
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--kind", choices=("control", "observer"), default="control")
    q.add_argument("--ds", type=float, default=0.02)
    q.add_argument("--jobs", type=int, default=1)

    q = common(sub.add_parser("simulate", help="run a closed- or open-loop scenario"))
    _plant_args(q)
    q.add_argument("--mode", choices=("open_loop", "uncompensated", "state_fb",
                                      "output_fb", "observer"),
                   default="state_fb")
    q.add_argument("--ds", type=float, default=0.02)
    q.add_argument("--horizon", type=float, default=8.0)
    q.add_argument("--dt", type=float, default=None)
    q.add_argument("--x0", choices=("sin", "sin2pi", "zero", "one"), default="sin")
    q.add_argument("--x0-amp", type=float, default=1.0)
    q.add_argument("--xh0-const", type=float, default=0.0)
    q.add_argument("--stride", type=int, default=10)
    q.add_argument("--snapshots", action="store_true")
    q.add_argument("--gains-from", choices=("analytic", "file", "neural"),
                   default="analytic")
    q.add_argument("--gains-path", type=str, default=None)
    q.add_argument("--perturb-amplitude", type=float, default=0.0)
    q.add_argument("--perturb-seed", type=int, default=0)

    q = common(sub.add_parser("verify", help="run a verification suite"))
    q.add_argument("--suite", required=True,
                   choices=sorted(ops._SUITE_PARAMS))
    q.add_argument("--n", type=int, default=None)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--ds", type=float, default=None)
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--amplitude", type=float, default=None)

    q = common(sub.add_parser("infer", help="evaluate network gains for a plant"))
    _plant_args(q)
    q.add_argument("--weights", type=str, required=True)
    q.add_argument("--ds", type=float, default=0.02)
    q.add_argument("--need", choices=("control", "observer", "both"),
                   default="control")

    q = common(sub.add_parser("bench", help="solver vs network timing table"))
    q.add_argument("--weights", type=str, default=None)
    q.add_argument("--ds-list", type=str, default="0.02,0.01,0.005")
    q.add_argument("--runs", type=int, default=100)
    q.add_argument("--n-plants", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--target", choices=("control", "observer"), default="control")

    q = common(sub.add_parser("train-stub",
                              help="validate a dataset and point at the trainer"))
    q.add_argument("--dataset", type=str, required=True)

    q = sub.add_parser("serve", help="run the HTTP service")
    q.add_argument("--host", type=str, default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)
    return p


def _cmd_kernels(args) -> int:
    req = sc.KernelsRequest(plant=_plant_spec(args), ds=args.ds, tol=args.tol,
                            max_iter=args.max_iter,
                            with_inverse=args.with_inverse)
    resp = _call(args, "kernels", ops.op_kernels, req, sc.KernelsResponse)
    out = _out_path(args.out)
    if out is not None and out.suffix == ".pdon":
        arrays = {"K": np.array(resp.K), "L": np.array(resp.L),
                  "J": np.array(resp.J)}
        if resp.B is not None:
            arrays.update(B=np.array(resp.B), D=np.array(resp.D),
                          E=np.array(resp.E))
        write_container(out, arrays, meta={"tau": resp.tau, "h": resp.h,
                                           "eta": resp.eta, "ds": resp.ds,
                                           "tool_version": __version__})
        print(out)
    else:
        _emit(resp.model_dump_json(indent=2), out)
    return EXIT_OK


def _cmd_observer_gains(args) -> int:
    req = sc.ObserverGainsRequest(plant=_plant_spec(args), ds=args.ds,
                                  tol=args.tol, with_kernels=args.with_kernels)
    resp = _call(args, "observer-gains", ops.op_observer_gains, req,
                 sc.ObserverGainsResponse)
    out = _out_path(args.out)
    if out is not None and out.suffix == ".pdon":
        arrays = {"Q1": np.array(resp.q1), "Q2": np.array(resp.q2)}
        if resp.F is not None:
            arrays.update(F=np.array(resp.F), M=np.array(resp.M),
                          P=np.array(resp.P), R=np.array(resp.R),
                          S=np.array(resp.S))
        write_container(out, arrays, meta={"ds": resp.ds,
                                           "tool_version": __version__})
        print(out)
    else:
        _emit(resp.model_dump_json(indent=2), out)
    return EXIT_OK


def _cmd_dataset(args) -> int:
    out = _out_path(args.out or "dataset.pdon")
    req = sc.DatasetRequest(n=args.n, seed=args.seed, kind=args.kind,
                            ds=args.ds, out=str(out), jobs=args.jobs)
    resp = _call(args, "dataset", ops.op_dataset, req, sc.DatasetResponse)
    print(json.dumps(resp.model_dump(), indent=2))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    req = sc.SimulateRequest(
        plant=_plant_spec(args), mode=args.mode, ds=args.ds,
        horizon=args.horizon, dt=args.dt, x0=args.x0, x0_amp=args.x0_amp,
        xh0_const=args.xh0_const, stride=args.stride, snapshots=args.snapshots,
        gains_from=args.gains_from, gains_path=args.gains_path,
        perturb_amplitude=args.perturb_amplitude,
        perturb_seed=args.perturb_seed)
    resp = _call(args, "simulate", ops.op_simulate, req, sc.TrajectoryResponse)
    out = _out_path(args.out)
    if args.format == "csv":
        _emit(resp.csv, out)
        if resp.snapshots_csv and out is not None:
            snap = out.with_suffix(".snapshots.csv")
            snap.write_text(resp.snapshots_csv)
            print(snap)
    else:
        payload = resp.model_dump()
        payload.pop("csv")
        payload.pop("snapshots_csv", None)
        payload["request"] = json.loads(req.model_dump_json())
        payload["tool_version"] = __version__
        _emit(json.dumps(payload, indent=2), out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    req = sc.VerifyRequest(suite=args.suite, n=args.n, seed=args.seed,
                           ds=args.ds, jobs=args.jobs, amplitude=args.amplitude)
    resp = _call(args, "verify", ops.op_verify, req, sc.ReportResponse)
    payload = {"request": json.loads(req.model_dump_json()),
               "tool_version": __version__, **resp.report}
    _emit(json.dumps(payload, indent=2, default=float), _out_path(args.out))
    return EXIT_OK if resp.report.get("passed") else EXIT_VERIFY


def _cmd_infer(args) -> int:
    req = sc.InferRequest(weights_path=args.weights, plant=_plant_spec(args),
                          ds=args.ds, need=args.need)
    resp = _call(args, "infer", ops.op_infer, req, sc.InferResponse)
    out = _out_path(args.out)
    if out is not None and out.suffix == ".pdon":
        arrays = {"k0": np.array(resp.k0), "l_h": np.array(resp.l_h),
                  "j_eta": np.array(resp.j_eta)}
        if resp.q1 is not None:
            arrays.update(q1=np.array(resp.q1), q2=np.array(resp.q2))
        write_container(out, arrays, meta={"ds": resp.ds,
                                           "tool_version": __version__})
        print(out)
    else:
        _emit(resp.model_dump_json(indent=2), out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    ds_list = [float(x) for x in args.ds_list.split(",") if x]
    req = sc.BenchRequest(weights_path=args.weights, ds_list=ds_list,
                          runs=args.runs, n_plants=args.n_plants,
                          seed=args.seed, target=args.target)
    resp = _call(args, "bench", ops.op_bench, req, sc.BenchResponse)
    payload = {"tool_version": __version__, **resp.report}
    _emit(json.dumps(payload, indent=2), _out_path(args.out))
    return EXIT_OK


def _cmd_train_stub(args) -> int:
    req = sc.TrainStubRequest(dataset_path=args.dataset)
    resp = _call(args, "train-stub", ops.op_train_stub, req,
                 sc.TrainStubResponse)
    _emit(resp.model_dump_json(indent=2), _out_path(args.out))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "kernels": _cmd_kernels,
    "observer-gains": _cmd_observer_gains,
    "dataset": _cmd_dataset,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "infer": _cmd_infer,
    "bench": _cmd_bench,
    "train-stub": _cmd_train_stub,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (KernelSolveError, SimulationDiverged, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, ContainerError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
