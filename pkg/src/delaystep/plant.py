"""Plant descriptions: delays, coefficient functions and the spatial grid.

A plant instance couples a transport PIDE on [0, 1] with two delay lines: a
recycle delay ``tau`` through which the boundary value re-enters the domain
dynamics, and a sensor dead time ``h`` on the measurement.  The in-domain
coupling is driven by a two-variable coefficient ``f(s, q)`` supported on
s <= q and a one-variable coefficient ``c(s)`` vanishing at s = 1.

Randomly sampled instances use products of Chebyshev-type oscillations
``cos(mu * arccos(.))`` with continuously distributed orders, so coefficient
magnitudes are bounded by construction (|f| <= amplitude, |c| <= 2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "SpatialGrid",
    "PlantConfig",
    "CoefficientField",
    "SamplingRanges",
    "sample_plant",
    "eval_coefficients",
    "tabulated_coefficients",
    "plant_from_json",
    "plant_to_json",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [0, 1] with spacing ds; 1/ds must be an integer."""

    ds: float
    n: int
    s: np.ndarray = field(repr=False, compare=False)

    @staticmethod
    def from_ds(ds: float) -> "SpatialGrid":
        if ds <= 0:
            raise ValueError("ds must be positive")
        m = 1.0 / ds
        if abs(m - round(m)) > 1e-9:
            raise ValueError(f"1/ds must be an integer, got ds={ds}")
        n = int(round(m)) + 1
        s = np.linspace(0.0, 1.0, n)
        s.setflags(write=False)
        return SpatialGrid(ds=ds, n=n, s=s)


@dataclass(frozen=True)
class PlantConfig:
    """Delays plus the parameters of the closed-form coefficient family.

    ``mu1``/``mu2`` set the oscillation orders of f in each argument,
    ``mu3`` the order of c; they may be None for plants defined only by
    tabulated coefficient grids.
    """

    tau: float
    h: float
    mu1: float | None = None
    mu2: float | None = None
    mu3: float | None = None
    amplitude_f: float = 9.0

    def __post_init__(self):
        if not (0.0 < self.h < self.tau):
            raise ValueError(
                f"delays must satisfy 0 < h < tau, got h={self.h}, tau={self.tau}"
            )

    @property
    def eta(self) -> float:
        return self.tau - self.h


def _cheb(mu: float, x: np.ndarray | float) -> np.ndarray | float:
    # cos(mu * arccos x); well defined on [0, 1] for any real mu.
    return np.cos(mu * np.arccos(np.clip(x, -1.0, 1.0)))


def _cheb_prime(mu: float, x: np.ndarray | float) -> np.ndarray | float:
    # d/dx cos(mu * arccos x) = mu * sin(mu a) / sin(a), a = arccos x,
    # with the removable limit mu^2 at x = 1.
    x = np.asarray(x, dtype=float)
    a = np.arccos(np.clip(x, -1.0, 1.0))
    out = np.where(a < 1e-8, mu * mu, mu * np.sin(mu * a) / np.where(a < 1e-8, 1.0, np.sin(a)))
    return out if out.shape else float(out)


@dataclass
class CoefficientField:
    """Coefficient samples on a grid plus off-grid evaluators.

    ``f_grid[i, j]`` holds f(s_i, q_j) for s_i <= q_j and exact zeros
    elsewhere; ``c_grid[-1]`` is exactly zero.  The evaluators are backed by
    the closed form when the field came from a PlantConfig, and by linear
    interpolation for tabulated input.  ``c_prime_at`` is analytic in the
    closed-form case and a centered difference otherwise.
    """

    f_grid: np.ndarray
    c_grid: np.ndarray
    grid: SpatialGrid
    f_at: Callable[[float, float], float]
    c_at: Callable[[float], float]
    c_prime_at: Callable[[float], float]

    @property
    def f_sup(self) -> float:
        return float(np.max(np.abs(self.f_grid)))

    @property
    def c_sup(self) -> float:
        return float(np.max(np.abs(self.c_grid)))


def eval_coefficients(cfg: PlantConfig, grid: SpatialGrid) -> CoefficientField:
    """Sample the closed-form coefficients of ``cfg`` on ``grid``."""
    if cfg.mu1 is None or cfg.mu2 is None or cfg.mu3 is None:
        raise ValueError("eval_coefficients needs a config with mu parameters")
    s = grid.s
    amp, mu1, mu2, mu3 = cfg.amplitude_f, cfg.mu1, cfg.mu2, cfg.mu3
    f = amp * np.outer(_cheb(mu1, s), _cheb(mu2, s))
    f = np.triu(f)  # zero where s > q
    c = _cheb(mu3, s) - _cheb(mu3, 1.0)
    # arccos(1) == 0 exactly, so the last entry is a bit-exact zero.
    c = np.asarray(c, dtype=float)

    def f_at(ss: float, qq: float) -> float:
        if ss > qq:
            return 0.0
        return float(amp * _cheb(mu1, ss) * _cheb(mu2, qq))

    def c_at(ss: float) -> float:
        return float(_cheb(mu3, ss) - 1.0)

    def c_prime_at(ss: float) -> float:
        return float(_cheb_prime(mu3, ss))

    return CoefficientField(f_grid=f, c_grid=c, grid=grid,
                            f_at=f_at, c_at=c_at, c_prime_at=c_prime_at)


def tabulated_coefficients(f_grid: np.ndarray, c_grid: np.ndarray,
                           grid: SpatialGrid) -> CoefficientField:
    """Wrap user-supplied coefficient tables; off-grid access interpolates."""
    f_grid = np.triu(np.asarray(f_grid, dtype=float))
    c_grid = np.asarray(c_grid, dtype=float).copy()
    if f_grid.shape != (grid.n, grid.n) or c_grid.shape != (grid.n,):
        raise ValueError("tabulated coefficient shapes do not match the grid")
    c_grid[-1] = 0.0
    s = grid.s
    ds = grid.ds

    def f_at(ss: float, qq: float) -> float:
        if ss > qq:
            return 0.0
        i = min(int(ss / ds), grid.n - 2)
        j = min(int(qq / ds), grid.n - 2)
        wi = ss / ds - i
        wj = qq / ds - j
        patch = f_grid[i:i + 2, j:j + 2]
        return float((1 - wi) * ((1 - wj) * patch[0, 0] + wj * patch[0, 1])
                     + wi * ((1 - wj) * patch[1, 0] + wj * patch[1, 1]))

    def c_at(ss: float) -> float:
        return float(np.interp(ss, s, c_grid))

    def c_prime_at(ss: float) -> float:
        d = max(ds, 1e-6)
        lo, hi = max(ss - d, 0.0), min(ss + d, 1.0)
        return (c_at(hi) - c_at(lo)) / (hi - lo)

    return CoefficientField(f_grid=f_grid, c_grid=c_grid, grid=grid,
                            f_at=f_at, c_at=c_at, c_prime_at=c_prime_at)


@dataclass(frozen=True)
class SamplingRanges:
    """Uniform sampling intervals for random plant instances."""

    tau: tuple[float, float] = (0.8, 2.0)
    h: tuple[float, float] = (0.1, 0.7)
    mu1: tuple[float, float] = (3.0, 6.0)
    mu2: tuple[float, float] = (3.0, 6.0)
    mu3: tuple[float, float] = (3.0, 6.0)
    amplitude_f: float = 9.0


_REJECT_CAP = 1000


def sample_plant(seed: int, ranges: SamplingRanges | None = None) -> PlantConfig:
    """Draw a random admissible plant; deterministic for a fixed seed.

    Delay pairs with h >= tau are rejected and redrawn; exceeding the retry
    cap signals that the requested ranges admit no valid pair.
    """
    ranges = ranges or SamplingRanges()
    rng = np.random.default_rng(seed)
    for _ in range(_REJECT_CAP):
        tau = rng.uniform(*ranges.tau)
        h = rng.uniform(*ranges.h)
        if 0.0 < h < tau:
            mu1 = rng.uniform(*ranges.mu1)
            mu2 = rng.uniform(*ranges.mu2)
            mu3 = rng.uniform(*ranges.mu3)
            return PlantConfig(tau=tau, h=h, mu1=mu1, mu2=mu2, mu3=mu3,
                               amplitude_f=ranges.amplitude_f)
    raise ValueError("sampling ranges never produced delays with h < tau")


def plant_to_json(cfg: PlantConfig) -> str:
    return json.dumps({
        "tau": cfg.tau, "h": cfg.h,
        "mu1": cfg.mu1, "mu2": cfg.mu2, "mu3": cfg.mu3,
        "amplitude_f": cfg.amplitude_f,
    })


def plant_from_json(spec: str | Mapping) -> tuple[PlantConfig, Callable[[SpatialGrid], CoefficientField]]:
    """Parse a plant spec; returns the config and a coefficient builder.

    Two forms are accepted: parametric {tau, h, mu1, mu2, mu3, amplitude_f}
    and tabulated {tau, h, f_grid, c_grid, ds}.  The tabulated form is
    resampled onto the requested grid by linear interpolation.
    """
    d = json.loads(spec) if isinstance(spec, str) else dict(spec)
    tau, h = float(d["tau"]), float(d["h"])
    if "f_grid" in d:
        src_grid = SpatialGrid.from_ds(float(d["ds"]))
        src = tabulated_coefficients(np.asarray(d["f_grid"], dtype=float),
                                     np.asarray(d["c_grid"], dtype=float), src_grid)
        cfg = PlantConfig(tau=tau, h=h)

        def build(grid: SpatialGrid) -> CoefficientField:
            if grid.n == src_grid.n:
                return src
            f = np.zeros((grid.n, grid.n))
            for i in range(grid.n):
                for j in range(i, grid.n):
                    f[i, j] = src.f_at(grid.s[i], grid.s[j])
            c = np.interp(grid.s, src_grid.s, src.c_grid)
            return tabulated_coefficients(f, c, grid)

        return cfg, build

    cfg = PlantConfig(tau=tau, h=h, mu1=float(d["mu1"]), mu2=float(d["mu2"]),
                      mu3=float(d["mu3"]),
                      amplitude_f=float(d.get("amplitude_f", 9.0)))
    return cfg, lambda grid: eval_coefficients(cfg, grid)
