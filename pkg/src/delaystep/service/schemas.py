"""Request/response models for the gain-computation service.

These models are the wire contract shared by the HTTP routes and the CLI
thin client; field names and defaults mirror the CLI flags one to one.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class PlantSpec(BaseModel):
    """Parametric plant (delays + oscillation orders) or tabulated grids."""

    tau: float = Field(gt=0)
    h: float = Field(gt=0)
    mu1: Optional[float] = None
    mu2: Optional[float] = None
    mu3: Optional[float] = None
    amplitude_f: float = 9.0
    f_grid: Optional[list[list[float]]] = None
    c_grid: Optional[list[float]] = None
    ds: Optional[float] = None  # grid of the tabulated data

    @model_validator(mode="after")
    def _one_form(self):
        parametric = self.mu1 is not None and self.mu2 is not None and self.mu3 is not None
        tabulated = self.f_grid is not None and self.c_grid is not None and self.ds is not None
        if not parametric and not tabulated:
            raise ValueError("plant needs either mu1/mu2/mu3 or f_grid/c_grid/ds")
        if self.h >= self.tau:
            raise ValueError("delays must satisfy h < tau")
        return self


class KernelsRequest(BaseModel):
    plant: PlantSpec
    ds: float = 0.02
    tol: float = 1e-10
    max_iter: int = 200
    with_inverse: bool = False


class KernelsResponse(BaseModel):
    K: list[list[float]]
    L: list[float]
    J: list[float]
    ds: float
    h: float
    eta: float
    tau: float
    B: Optional[list[list[float]]] = None
    D: Optional[list[list[float]]] = None
    E: Optional[list[list[float]]] = None


class ObserverGainsRequest(BaseModel):
    plant: PlantSpec
    ds: float = 0.02
    tol: float = 1e-10
    with_kernels: bool = False


class ObserverGainsResponse(BaseModel):
    q1: list[float]
    q2: list[float]
    ds: float
    F: Optional[list[list[float]]] = None
    M: Optional[list[list[float]]] = None
    P: Optional[list[list[float]]] = None
    R: Optional[list[float]] = None
    S: Optional[list[float]] = None


class SimulateRequest(BaseModel):
    plant: PlantSpec
    mode: Literal["open_loop", "uncompensated", "state_fb", "output_fb",
                  "observer"] = "state_fb"
    ds: float = 0.02
    horizon: float = 8.0
    dt: Optional[float] = None
    x0: Literal["sin", "sin2pi", "zero", "one"] = "sin"
    x0_amp: float = 1.0
    xh0_const: float = 0.0
    stride: int = 10
    snapshots: bool = False
    gains_from: Literal["analytic", "file", "neural"] = "analytic"
    gains_path: Optional[str] = None
    perturb_amplitude: float = 0.0
    perturb_seed: int = 0
    # prescribed input a*sin(b t) + c*cos(d t), observer mode only
    forcing: tuple[float, float, float, float] = (5.0, 3.0, 3.0, 2.0)


class TrajectoryResponse(BaseModel):
    times: list[float]
    l2_x: list[float]
    l2_v: list[float]
    l2_u: list[float]
    U: list[float]
    err_l2: Optional[list[float]] = None
    csv: str
    snapshots_csv: Optional[str] = None


class VerifyRequest(BaseModel):
    suite: Literal["bounds", "residual", "cross", "transform", "decay",
                   "observer", "robustness", "lipschitz", "forward"]
    n: Optional[int] = None
    seed: Optional[int] = None
    ds: Optional[float] = None
    jobs: int = 1
    amplitude: Optional[float] = None


class ReportResponse(BaseModel):
    report: dict


class DatasetRequest(BaseModel):
    n: int = Field(ge=1)
    seed: int = 0
    kind: Literal["control", "observer"] = "control"
    ds: float = 0.02
    out: str
    jobs: int = 1


class DatasetResponse(BaseModel):
    path: str
    n: int
    kind: str
    sha256: str


class InferRequest(BaseModel):
    weights_path: str
    plant: PlantSpec
    ds: float = 0.02
    need: Literal["control", "observer", "both"] = "control"


class InferResponse(BaseModel):
    k0: list[float]
    l_h: list[float]
    j_eta: list[float]
    q1: Optional[list[float]] = None
    q2: Optional[list[float]] = None
    ds: float


class BenchRequest(BaseModel):
    weights_path: Optional[str] = None  # random weights when omitted
    ds_list: list[float] = [0.02, 0.01, 0.005]
    runs: int = 100
    n_plants: int = 1
    seed: int = 0
    target: Literal["control", "observer"] = "control"


class BenchResponse(BaseModel):
    report: dict


class TrainStubRequest(BaseModel):
    dataset_path: str


class TrainStubResponse(BaseModel):
    n: int
    kind: str
    note: str
