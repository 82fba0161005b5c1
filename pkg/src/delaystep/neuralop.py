"""Branch/trunk operator-network inference for kernel and gain prediction.

A network maps a stacked-channel encoding of a plant instance (constants
broadcast to full grids alongside the coefficient samples) to one kernel or
gain function.  The branch side is two stride-2 convolutions followed by two
dense layers; the trunk side embeds query locations; the output at a query
is the inner product of the two feature vectors plus a scalar bias.

Query conventions (recorded in every weights manifest, and binding for any
trainer producing compatible files):

* coordinates are normalized to the unit interval/square; one-variable
  kernels on stretched domains [0, 1+delay] are queried at
  argument / (1 + delay), so the k-th sample of a stored target corresponds
  to the query k / (grid_points - 1) regardless of the delay;
* in the default ``grid`` encoding the trunk's first layer is an embedding
  table over a fixed reference lattice (the flattened grid for
  two-dimensional queries); a query point mixes the per-node trunk features
  with its piecewise-linear hat weights, so on-lattice queries hit table
  entries exactly;
* the ``raw`` encoding feeds coordinates straight into a small trunk
  (dimension 2 for kernels on the triangle, 1 for one-variable outputs).

All weights are float64; fully-connected tensors are stored (out, in),
convolutions (out, in, kh, kw) with channel-major flattening, cross
correlation, stride 2 and no padding.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .container import Container, read_container, write_container
from .kernels import solve_control_kernels
from .observer import gains_from_kernels, solve_observer_kernels
from .plant import CoefficientField, PlantConfig, SpatialGrid, eval_coefficients

__all__ = [
    "DeepONetConfig",
    "DeepONetWeights",
    "default_config",
    "random_weights",
    "zero_weights",
    "forward",
    "forward_batch",
    "reference_forward",
    "plant_encoding",
    "gains_from_network",
    "predict_kernel",
    "save_weights",
    "load_weights",
    "bench_inference",
]

_KINDS_2D = ("K",)
_CONTROL_KINDS = ("K", "L", "J")
_OBSERVER_KINDS = ("Q1", "Q2")


@dataclass(frozen=True)
class DeepONetConfig:
    """Architecture description; shapes are validated against it exactly."""

    kind: str
    input_channels: int
    grid_points: int = 51
    conv_channels: tuple[int, int] = (64, 128)
    kernel_size: int = 5
    stride: int = 2
    branch_fc: tuple[int, int, int] = (12800, 512, 256)
    trunk_fc: tuple[int, int, int] = (2601, 128, 256)
    p: int = 256
    query_encoding: str = "grid"  # or "raw"
    query_dim: int = 2
    activations: tuple[str, ...] = ("relu", "relu", "relu", "linear",
                                    "relu", "linear")

    @property
    def conv_out_spatial(self) -> int:
        o = self.grid_points
        for _ in range(2):
            o = (o - self.kernel_size) // self.stride + 1
        return o

    @property
    def flatten_dim(self) -> int:
        return self.conv_channels[1] * self.conv_out_spatial ** 2

    def validate(self) -> None:
        if self.branch_fc[0] != self.flatten_dim:
            raise ValueError(
                f"branch fc input {self.branch_fc[0]} does not match the "
                f"conv flatten size {self.flatten_dim}")
        if self.branch_fc[2] != self.p or self.trunk_fc[2] != self.p:
            raise ValueError("branch and trunk heads must both produce p features")
        if self.query_encoding == "raw" and self.trunk_fc[0] != self.query_dim:
            raise ValueError("raw encoding requires trunk input = query_dim")
        if self.query_encoding == "grid" and self.query_dim == 2:
            g = int(round(np.sqrt(self.trunk_fc[0])))
            if g * g != self.trunk_fc[0]:
                raise ValueError("grid encoding of 2-d queries needs a square lattice")
        if self.query_encoding not in ("grid", "raw"):
            raise ValueError(f"unknown query encoding {self.query_encoding!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "input_channels": self.input_channels,
            "grid_points": self.grid_points,
            "conv_channels": list(self.conv_channels),
            "kernel_size": self.kernel_size, "stride": self.stride,
            "branch_fc": list(self.branch_fc), "trunk_fc": list(self.trunk_fc),
            "p": self.p, "query_encoding": self.query_encoding,
            "query_dim": self.query_dim, "activations": list(self.activations),
        }

    @staticmethod
    def from_dict(d: dict) -> "DeepONetConfig":
        cfg = DeepONetConfig(
            kind=d["kind"], input_channels=int(d["input_channels"]),
            grid_points=int(d.get("grid_points", 51)),
            conv_channels=tuple(d.get("conv_channels", (64, 128))),
            kernel_size=int(d.get("kernel_size", 5)),
            stride=int(d.get("stride", 2)),
            branch_fc=tuple(d.get("branch_fc", (12800, 512, 256))),
            trunk_fc=tuple(d.get("trunk_fc", (2601, 128, 256))),
            p=int(d.get("p", 256)),
            query_encoding=d.get("query_encoding", "grid"),
            query_dim=int(d.get("query_dim", 2)),
            activations=tuple(d.get("activations", ("relu", "relu", "relu",
                                                    "linear", "relu", "linear"))),
        )
        cfg.validate()
        return cfg


_CHANNELS = {"K": 3, "L": 4, "J": 4, "Q1": 2, "Q2": 2}


def default_config(kind: str, query_encoding: str = "grid",
                   reduced: bool = False) -> DeepONetConfig:
    """Stock architecture per network kind.

    ``reduced`` swaps in a small variant with the same wiring for fast
    tests.  Raw encoding uses the per-point trunk of matching dimension.
    """
    channels = _CHANNELS[kind]
    qdim = 2 if kind in _KINDS_2D else 1
    g = 51
    # grid encoding: lattice = the net's flattened query grid, so training
    # targets cover every embedding row (g^2 nodes for the triangle kernel,
    # g for one-variable outputs)
    lattice = g * g if qdim == 2 else g
    if reduced:
        conv = (4, 8)
        o = g
        for _ in range(2):
            o = (o - 5) // 2 + 1
        flat = conv[1] * o * o
        branch = (flat, 32, 16)
        trunk = ({"grid": lattice, "raw": qdim}[query_encoding], 24, 16)
        p = 16
    else:
        conv = (64, 128)
        branch = (12800, 512, 256)
        trunk = ({"grid": lattice, "raw": qdim}[query_encoding], 128, 256)
        p = 256
    cfg = DeepONetConfig(kind=kind, input_channels=channels,
                         conv_channels=conv, branch_fc=branch,
                         trunk_fc=trunk, p=p,
                         query_encoding=query_encoding, query_dim=qdim)
    cfg.validate()
    return cfg


_TENSOR_SHAPES = (
    ("conv1_w", lambda c: (c.conv_channels[0], c.input_channels,
                           c.kernel_size, c.kernel_size)),
    ("conv1_b", lambda c: (c.conv_channels[0],)),
    ("conv2_w", lambda c: (c.conv_channels[1], c.conv_channels[0],
                           c.kernel_size, c.kernel_size)),
    ("conv2_b", lambda c: (c.conv_channels[1],)),
    ("fc1_w", lambda c: (c.branch_fc[1], c.branch_fc[0])),
    ("fc1_b", lambda c: (c.branch_fc[1],)),
    ("fc2_w", lambda c: (c.branch_fc[2], c.branch_fc[1])),
    ("fc2_b", lambda c: (c.branch_fc[2],)),
    ("trunk1_w", lambda c: (c.trunk_fc[1], c.trunk_fc[0])),
    ("trunk1_b", lambda c: (c.trunk_fc[1],)),
    ("trunk2_w", lambda c: (c.trunk_fc[2], c.trunk_fc[1])),
    ("trunk2_b", lambda c: (c.trunk_fc[2],)),
    ("out_b", lambda c: (1,)),
)


@dataclass
class DeepONetWeights:
    """Named parameter tensors plus the config they must match."""

    config: DeepONetConfig
    tensors: dict[str, np.ndarray]
    _trunk_cache: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.config.validate()
        expected = {name: shape_fn(self.config)
                    for name, shape_fn in _TENSOR_SHAPES}
        missing = sorted(set(expected) - set(self.tensors))
        if missing:
            raise ValueError(f"weights missing tensors: {missing}")
        extra = sorted(set(self.tensors) - set(expected))
        if extra:
            raise ValueError(f"weights carry unknown tensors: {extra}")
        for name, shape in expected.items():
            got = tuple(self.tensors[name].shape)
            if got != shape:
                raise ValueError(
                    f"tensor {name!r} has shape {got}, expected {shape}")

    def trunk_lattice_features(self) -> np.ndarray:
        """Per-node trunk outputs for the grid encoding, computed once.

        Node k's first-layer preactivation is just column k of the embedding
        matrix plus the bias; the dense head is then applied to all nodes.
        """
        if self._trunk_cache is None:
            t = self.tensors
            z1 = t["trunk1_w"].T + t["trunk1_b"][None, :]
            a1 = np.maximum(z1, 0.0)
            self._trunk_cache = a1 @ t["trunk2_w"].T + t["trunk2_b"][None, :]
        return self._trunk_cache


def zero_weights(cfg: DeepONetConfig) -> DeepONetWeights:
    cfg.validate()
    tensors = {name: np.zeros(shape_fn(cfg)) for name, shape_fn in _TENSOR_SHAPES}
    return DeepONetWeights(config=cfg, tensors=tensors)


def random_weights(cfg: DeepONetConfig, seed: int = 0) -> DeepONetWeights:
    """Fan-in scaled Gaussian weights; used for tests and timing."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape_fn in _TENSOR_SHAPES:
        shape = shape_fn(cfg)
        fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else 1
        tensors[name] = rng.standard_normal(shape) / np.sqrt(max(fan_in, 1))
    return DeepONetWeights(config=cfg, tensors=tensors)


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    """Valid-padding strided cross correlation; x (C,H,W), w (O,C,k,k)."""
    c, hh, ww = x.shape
    o, _, k, _ = w.shape
    oh = (hh - k) // stride + 1
    ow = (ww - k) // stride + 1
    sc, sh, sw = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x, shape=(c, oh, ow, k, k),
        strides=(sc, sh * stride, sw * stride, sh, sw), writeable=False)
    out = np.tensordot(windows, w, axes=([0, 3, 4], [1, 2, 3]))
    return np.transpose(out, (2, 0, 1)) + b[:, None, None]


def _conv2d_batch(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                  stride: int) -> np.ndarray:
    """Batched variant; x (B,C,H,W) -> (B,O,oh,ow).

    einsum with path optimization beats tensordot's internal transposes for
    these shapes on a single core.
    """
    bb, c, hh, ww = x.shape
    o, _, k, _ = w.shape
    oh = (hh - k) // stride + 1
    ow = (ww - k) // stride + 1
    sb, sc, sh, sw = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x, shape=(bb, c, oh, ow, k, k),
        strides=(sb, sc, sh * stride, sw * stride, sh, sw), writeable=False)
    out = np.einsum("bcijxy,ocxy->boij", windows, w, optimize=True)
    return out + b[None, :, None, None]


def _branch(weights: DeepONetWeights, encoding: np.ndarray) -> np.ndarray:
    cfg = weights.config
    t = weights.tensors
    if encoding.shape != (cfg.input_channels, cfg.grid_points, cfg.grid_points):
        raise ValueError(
            f"encoding shape {encoding.shape} does not match config "
            f"({cfg.input_channels}, {cfg.grid_points}, {cfg.grid_points})")
    a = np.maximum(_conv2d(encoding, t["conv1_w"], t["conv1_b"], cfg.stride), 0.0)
    a = np.maximum(_conv2d(a, t["conv2_w"], t["conv2_b"], cfg.stride), 0.0)
    flat = a.reshape(-1)
    a = np.maximum(t["fc1_w"] @ flat + t["fc1_b"], 0.0)
    return t["fc2_w"] @ a + t["fc2_b"]


def _branch_batch(weights: DeepONetWeights, encodings: np.ndarray) -> np.ndarray:
    """Branch features for a stack of encodings; (B,C,g,g) -> (B,p).

    Batching amortizes the streaming of the large dense layer's weights,
    which dominates single-sample latency.
    """
    cfg = weights.config
    t = weights.tensors
    bb = encodings.shape[0]
    if encodings.shape[1:] != (cfg.input_channels, cfg.grid_points,
                               cfg.grid_points):
        raise ValueError(f"batched encoding shape {encodings.shape} does not "
                         f"match the config")
    a = np.maximum(_conv2d_batch(encodings, t["conv1_w"], t["conv1_b"],
                                 cfg.stride), 0.0)
    a = np.maximum(_conv2d_batch(a, t["conv2_w"], t["conv2_b"], cfg.stride), 0.0)
    flat = a.reshape(bb, -1)
    a = np.maximum(flat @ t["fc1_w"].T + t["fc1_b"][None, :], 0.0)
    return a @ t["fc2_w"].T + t["fc2_b"][None, :]


def _hat_indices_1d(y: np.ndarray, lattice_n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pos = np.clip(y, 0.0, 1.0) * (lattice_n - 1)
    k0 = np.minimum(pos.astype(int), lattice_n - 2)
    w = pos - k0
    return k0, k0 + 1, w


def _queries_array(queries: np.ndarray, query_dim: int) -> np.ndarray:
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != query_dim:
        raise ValueError(f"queries must have {query_dim} coordinates, "
                         f"got shape {q.shape}")
    return q


def forward(weights: DeepONetWeights, encoding: np.ndarray,
            queries: np.ndarray) -> np.ndarray:
    """Evaluate the operator network at normalized query locations.

    Pure function of its inputs; output[i] is the inner product of the
    branch features with the trunk features of query i, plus the scalar
    output bias.
    """
    cfg = weights.config
    q = _queries_array(queries, cfg.query_dim)
    b = _branch(weights, encoding)
    t = weights.tensors
    if cfg.query_encoding == "raw":
        a1 = np.maximum(q @ t["trunk1_w"].T + t["trunk1_b"][None, :], 0.0)
        feats = a1 @ t["trunk2_w"].T + t["trunk2_b"][None, :]
        return feats @ b + t["out_b"][0]

    node_vals = weights.trunk_lattice_features() @ b + t["out_b"][0]
    if cfg.query_dim == 1:
        n_lat = cfg.trunk_fc[0]
        k0, k1, w = _hat_indices_1d(q[:, 0], n_lat)
        return (1.0 - w) * node_vals[k0] + w * node_vals[k1]
    g = int(round(np.sqrt(cfg.trunk_fc[0])))
    i0, i1, wi = _hat_indices_1d(q[:, 0], g)
    j0, j1, wj = _hat_indices_1d(q[:, 1], g)
    v00 = node_vals[i0 * g + j0]
    v01 = node_vals[i0 * g + j1]
    v10 = node_vals[i1 * g + j0]
    v11 = node_vals[i1 * g + j1]
    return ((1 - wi) * (1 - wj) * v00 + (1 - wi) * wj * v01
            + wi * (1 - wj) * v10 + wi * wj * v11)


def reference_forward(weights: DeepONetWeights, encoding: np.ndarray,
                      queries: np.ndarray) -> np.ndarray:
    """Straight-line re-evaluation of the same arithmetic, kept naive.

    Convolutions loop over output positions, the trunk is evaluated node by
    node (grid encoding) or query by query (raw); used as the oracle for
    the optimized path.
    """
    cfg = weights.config
    t = weights.tensors
    k, stride = cfg.kernel_size, cfg.stride

    def conv_loops(x, w, bias):
        oc = w.shape[0]
        oh = (x.shape[1] - k) // stride + 1
        ow = (x.shape[2] - k) // stride + 1
        out = np.zeros((oc, oh, ow))
        for o in range(oc):
            for i in range(oh):
                for j in range(ow):
                    patch = x[:, i * stride:i * stride + k, j * stride:j * stride + k]
                    out[o, i, j] = np.sum(patch * w[o]) + bias[o]
        return out

    a = np.maximum(conv_loops(encoding, t["conv1_w"], t["conv1_b"]), 0.0)
    a = np.maximum(conv_loops(a, t["conv2_w"], t["conv2_b"]), 0.0)
    flat = a.reshape(-1)
    hidden = np.maximum(t["fc1_w"] @ flat + t["fc1_b"], 0.0)
    b_vec = t["fc2_w"] @ hidden + t["fc2_b"]

    def trunk_of(vec: np.ndarray) -> np.ndarray:
        z = np.maximum(t["trunk1_w"] @ vec + t["trunk1_b"], 0.0)
        return t["trunk2_w"] @ z + t["trunk2_b"]

    q = _queries_array(queries, cfg.query_dim)
    out = np.zeros(q.shape[0])
    if cfg.query_encoding == "raw":
        for m in range(q.shape[0]):
            out[m] = float(trunk_of(q[m]) @ b_vec + t["out_b"][0])
        return out

    n_lat = cfg.trunk_fc[0]

    def node_value(kk: int) -> float:
        e = np.zeros(n_lat)
        e[kk] = 1.0
        return float(trunk_of(e) @ b_vec + t["out_b"][0])

    if cfg.query_dim == 1:
        for m in range(q.shape[0]):
            pos = min(max(q[m, 0], 0.0), 1.0) * (n_lat - 1)
            k0 = min(int(pos), n_lat - 2)
            w = pos - k0
            out[m] = (1 - w) * node_value(k0) + w * node_value(k0 + 1)
        return out
    g = int(round(np.sqrt(n_lat)))
    for m in range(q.shape[0]):
        pi = min(max(q[m, 0], 0.0), 1.0) * (g - 1)
        pj = min(max(q[m, 1], 0.0), 1.0) * (g - 1)
        i0 = min(int(pi), g - 2)
        j0 = min(int(pj), g - 2)
        wi = pi - i0
        wj = pj - j0
        out[m] = ((1 - wi) * (1 - wj) * node_value(i0 * g + j0)
                  + (1 - wi) * wj * node_value(i0 * g + j0 + 1)
                  + wi * (1 - wj) * node_value((i0 + 1) * g + j0)
                  + wi * wj * node_value((i0 + 1) * g + j0 + 1))
    return out


def forward_batch(weights: DeepONetWeights, encodings: np.ndarray,
                  queries: np.ndarray) -> np.ndarray:
    """Evaluate one network for a stack of plants at a shared query set.

    Returns (batch, n_queries); same arithmetic as ``forward`` per plant,
    with the weight traffic shared across the batch.
    """
    cfg = weights.config
    q = _queries_array(queries, cfg.query_dim)
    b = _branch_batch(weights, encodings)
    t = weights.tensors
    if cfg.query_encoding == "raw":
        a1 = np.maximum(q @ t["trunk1_w"].T + t["trunk1_b"][None, :], 0.0)
        feats = a1 @ t["trunk2_w"].T + t["trunk2_b"][None, :]
        return b @ feats.T + t["out_b"][0]

    node_vals = b @ weights.trunk_lattice_features().T + t["out_b"][0]
    if cfg.query_dim == 1:
        k0, k1, w = _hat_indices_1d(q[:, 0], cfg.trunk_fc[0])
        return (1.0 - w)[None, :] * node_vals[:, k0] + w[None, :] * node_vals[:, k1]
    g = int(round(np.sqrt(cfg.trunk_fc[0])))
    i0, i1, wi = _hat_indices_1d(q[:, 0], g)
    j0, j1, wj = _hat_indices_1d(q[:, 1], g)
    # accumulate in place; the four gathers dominate, so avoid temporaries
    out = node_vals[:, i0 * g + j0]
    out *= ((1 - wi) * (1 - wj))[None, :]
    for idx, wgt in ((i0 * g + j1, (1 - wi) * wj),
                     (i1 * g + j0, wi * (1 - wj)),
                     (i1 * g + j1, wi * wj)):
        out += wgt[None, :] * node_vals[:, idx]
    return out


def plant_encoding(kind: str, cfg: PlantConfig, coeff: CoefficientField) -> np.ndarray:
    """Stacked-channel branch input: constants broadcast to full grids,
    the f samples, and c broadcast along the second axis."""
    g = coeff.grid.n
    ones = np.ones((g, g))
    c_chan = np.repeat(coeff.c_grid[:, None], g, axis=1)
    if kind == "K":
        chans = [cfg.tau * ones, coeff.f_grid, c_chan]
    elif kind in ("L", "J"):
        chans = [cfg.tau * ones, cfg.eta * ones, coeff.f_grid, c_chan]
    elif kind in ("Q1", "Q2"):
        chans = [cfg.h * ones, coeff.f_grid]
    else:
        raise ValueError(f"unknown network kind {kind!r}")
    return np.stack(chans)


def predict_kernel(weights: DeepONetWeights, cfg: PlantConfig,
                   coeff: CoefficientField, out_grid: SpatialGrid) -> np.ndarray:
    """Evaluate one network over its whole output domain on ``out_grid``."""
    kind = weights.config.kind
    enc = plant_encoding(kind, cfg, coeff)
    s = out_grid.s
    if kind == "K":
        qs = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2)
        vals = forward(weights, enc, qs).reshape(out_grid.n, out_grid.n)
        return np.triu(vals)
    qs = s[:, None]
    return forward(weights, enc, qs)


def gains_from_network(bundle: dict[str, DeepONetWeights], cfg: PlantConfig,
                       coeff: CoefficientField, grid: SpatialGrid,
                       need: str = "both"):
    """Package network predictions as simulator gains.

    ``coeff`` must be sampled at the networks' encoding resolution.  Raises
    a configuration error when a required network is absent.
    """
    from .simulate import GainProvider

    required = {"control": list(_CONTROL_KINDS), "observer": list(_OBSERVER_KINDS),
                "both": list(_CONTROL_KINDS) + list(_OBSERVER_KINDS)}[need]
    missing = [k for k in required if k not in bundle]
    if missing:
        raise ValueError(f"weights bundle is missing networks: {missing}")

    r = grid.s
    zero = np.zeros(grid.n)
    k0 = l_h = j_eta = zero
    q1 = q2 = None
    if "K" in required:
        enc = plant_encoding("K", cfg, coeff)
        k_queries = np.stack([np.zeros(grid.n), r], axis=1)
        k0 = forward(bundle["K"], enc, k_queries)
        enc_lj = plant_encoding("L", cfg, coeff)
        l_h = forward(bundle["L"], enc_lj, (cfg.h * r / (1.0 + cfg.h))[:, None])
        j_eta = forward(bundle["J"], enc_lj,
                        (cfg.eta * r / (1.0 + cfg.eta))[:, None])
    if "Q1" in required:
        enc_q = plant_encoding("Q1", cfg, coeff)
        q1 = forward(bundle["Q1"], enc_q, r[:, None])
        q2 = forward(bundle["Q2"], plant_encoding("Q2", cfg, coeff), r[:, None])
    return GainProvider("neural", k0, l_h, j_eta, q1=q1, q2=q2)


def save_weights(path: str | Path, bundle: dict[str, DeepONetWeights],
                 extra_meta: dict | None = None) -> None:
    arrays = {}
    nets = {}
    for kind, w in bundle.items():
        nets[kind] = w.config.to_dict()
        for name, arr in w.tensors.items():
            arrays[f"{kind}/{name}"] = arr
    meta = {"deeponet_config": {"networks": nets}}
    if extra_meta:
        meta.update(extra_meta)
    write_container(path, arrays, meta)


def load_weights(path: str | Path) -> dict[str, DeepONetWeights]:
    cont = read_container(path)
    nets = cont.meta.get("deeponet_config", {}).get("networks")
    if not nets:
        raise ValueError("container lacks a deeponet_config block")
    bundle = {}
    for kind, cfg_dict in nets.items():
        cfg = DeepONetConfig.from_dict(cfg_dict)
        tensors = {}
        prefix = f"{kind}/"
        for name, arr in cont.arrays.items():
            if name.startswith(prefix):
                tensors[name[len(prefix):]] = arr
        bundle[kind] = DeepONetWeights(config=cfg, tensors=tensors)
    return bundle


def _bench_queries(kind: str, grid: SpatialGrid) -> np.ndarray:
    if kind == "K":
        return np.stack(np.meshgrid(grid.s, grid.s, indexing="ij"),
                        axis=-1).reshape(-1, 2)
    return grid.s[:, None]


def bench_inference(bundle: dict[str, DeepONetWeights],
                    plant_seeds: list[int], ds_list: tuple[float, ...],
                    runs: int = 100, target: str = "control") -> dict:
    """Wall-clock comparison of numerical solving against network evaluation.

    Solver runs are cold, one plant at a time.  Network weights are treated
    as loaded once (embedding features cached) and the plants of a run are
    evaluated as one batch, which is how a gain server amortizes its weight
    traffic; the single-plant latency is reported alongside.  Means are
    over plants x runs.
    """
    from .plant import sample_plant

    enc_grid = SpatialGrid.from_ds(1.0 / (bundle[next(iter(bundle))]
                                          .config.grid_points - 1))
    plants = [sample_plant(sd) for sd in plant_seeds]
    enc_coeffs = [eval_coefficients(p, enc_grid) for p in plants]
    kinds = _CONTROL_KINDS if target == "control" else _OBSERVER_KINDS
    encodings = {k: np.stack([plant_encoding(k, p, cf)
                              for p, cf in zip(plants, enc_coeffs)])
                 for k in kinds}
    for k in kinds:
        bundle[k].trunk_lattice_features()

    # warm both paths so the first timed row does not absorb one-off costs
    warm_grid = SpatialGrid.from_ds(ds_list[0])
    solve_control_kernels(eval_coefficients(plants[0], warm_grid), plants[0],
                          warm_grid)
    for k in kinds:
        forward_batch(bundle[k], encodings[k], _bench_queries(k, warm_grid))

    rows = []
    for ds in ds_list:
        grid = SpatialGrid.from_ds(ds)
        coeffs = [eval_coefficients(p, grid) for p in plants]
        t0 = time.perf_counter()
        for _ in range(runs):
            for p, cf in zip(plants, coeffs):
                if target == "control":
                    solve_control_kernels(cf, p, grid)
                else:
                    gains_from_kernels(solve_observer_kernels(cf, p, grid), p)
        solver_mean = (time.perf_counter() - t0) / (runs * len(plants))

        queries = {k: _bench_queries(k, grid) for k in kinds}
        t0 = time.perf_counter()
        for _ in range(runs):
            for k in kinds:
                forward_batch(bundle[k], encodings[k], queries[k])
        infer_mean = (time.perf_counter() - t0) / (runs * len(plants))

        t0 = time.perf_counter()
        for _ in range(min(runs, 10)):
            for k in kinds:
                forward(bundle[k], encodings[k][0], queries[k])
        single_latency = (time.perf_counter() - t0) / (min(runs, 10))
        rows.append({"ds": ds, "solver_mean_s": solver_mean,
                     "infer_mean_s": infer_mean,
                     "infer_single_latency_s": single_latency,
                     "speedup": solver_mean / infer_mean})
    return {"target": target, "runs": runs, "n_plants": len(plants),
            "protocol": "solver cold per plant; inference batched across "
                        "plants with preloaded weights; single-plant latency "
                        "reported separately",
            "rows": rows}
