"""Training-corpus generation: plant samples paired with solved targets.

A control sample stores the plant inputs (delays and coefficient grids at
the training resolution) with the solved kernel targets K, L, J; an
observer sample stores the two injection gains instead.  Samples are solved
independently and bound-checked before being accepted, so a corpus contains
only verified solutions.  Containers are written with batched arrays under
``inputs/`` and ``targets/`` plus a meta block describing the corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .container import Container, write_container
from .kernels import KernelSolveError, solve_control_kernels
from .observer import gains_from_kernels, solve_observer_kernels
from .plant import (
    PlantConfig,
    SamplingRanges,
    SpatialGrid,
    eval_coefficients,
    sample_plant,
)
from .verify import check_bounds

__all__ = ["OperatorSample", "gen_dataset", "write_dataset", "dataset_arrays"]

TRAIN_DS = 0.02
_RETRY_CAP = 5
# matches the narrower dead-time range used for estimation corpora
OBSERVER_RANGES = SamplingRanges(h=(0.1, 0.6))


@dataclass
class OperatorSample:
    """One solved training pair."""

    tau: float
    h: float
    f_grid: np.ndarray
    c_grid: np.ndarray
    targets: dict[str, np.ndarray]


def _solve_sample(seed: int, kind: str, grid: SpatialGrid,
                  ranges: SamplingRanges) -> OperatorSample:
    seq = np.random.SeedSequence(seed)
    for attempt, child in enumerate(seq.spawn(_RETRY_CAP)):
        sd = int(child.generate_state(1, dtype=np.uint32)[0])
        cfg = sample_plant(sd, ranges)
        coeff = eval_coefficients(cfg, grid)
        try:
            if kind == "control":
                kernels = solve_control_kernels(coeff, cfg, grid)
                rep = check_bounds(coeff, cfg, grid, kernels=kernels,
                                   scope="control")
                targets = {"K": kernels.K, "L": kernels.L, "J": kernels.J}
            else:
                obs = solve_observer_kernels(coeff, cfg, grid)
                gains = gains_from_kernels(obs, cfg)
                rep = check_bounds(coeff, cfg, grid, obs=obs,
                                   scope="observer")
                targets = {"Q1": gains.q1, "Q2": gains.q2}
        except KernelSolveError:
            continue
        if rep["violations"] == 0:
            return OperatorSample(tau=cfg.tau, h=cfg.h, f_grid=coeff.f_grid,
                                  c_grid=coeff.c_grid, targets=targets)
    raise KernelSolveError(
        f"sample seed {seed} failed bound-checked solving {_RETRY_CAP} times")


class _SampleWorker:
    def __init__(self, kind: str, ds: float, ranges: SamplingRanges):
        self.kind = kind
        self.ds = ds
        self.ranges = ranges

    def __call__(self, seed: int) -> OperatorSample:
        return _solve_sample(seed, self.kind, SpatialGrid.from_ds(self.ds),
                             self.ranges)


def gen_dataset(n: int, seed: int, kind: str = "control",
                ds: float = TRAIN_DS, jobs: int = 1,
                ranges: SamplingRanges | None = None) -> Container:
    """Generate n verified samples; byte-deterministic for a fixed seed.

    Per-sample seeds are spawned up front so the result is independent of
    the worker count.
    """
    if kind not in ("control", "observer"):
        raise ValueError("kind must be 'control' or 'observer'")
    if n < 1:
        raise ValueError("n must be at least 1")
    if ranges is None:
        ranges = OBSERVER_RANGES if kind == "observer" else SamplingRanges()
    seeds = [int(s) for s in
             np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)]
    worker = _SampleWorker(kind, ds, ranges)
    if jobs > 1:
        from multiprocessing import Pool
        with Pool(jobs) as pool:
            samples = pool.map(worker, seeds, chunksize=max(1, n // (4 * jobs)))
    else:
        samples = [worker(sd) for sd in seeds]
    return Container(arrays=dataset_arrays(samples),
                     meta={"kind": kind, "ds": ds, "n": n, "seed": seed,
                           "bounds_checked": True})


def dataset_arrays(samples: list[OperatorSample]) -> dict[str, np.ndarray]:
    arrays = {
        "inputs/tau": np.array([s.tau for s in samples]),
        "inputs/h": np.array([s.h for s in samples]),
        "inputs/f": np.stack([s.f_grid for s in samples]),
        "inputs/c": np.stack([s.c_grid for s in samples]),
    }
    for key in samples[0].targets:
        arrays[f"targets/{key}"] = np.stack([s.targets[key] for s in samples])
    return arrays


def write_dataset(path: str | Path, dataset: Container) -> None:
    write_container(path, dataset.arrays, dataset.meta)
