"""Observer kernel solver and output-injection gains.

The estimation-error system is mapped to a cascade that empties in finite
time by a transformation with four kernels: F on the triangle T1 (acting on
the transformed state), a pair M / P that weight the sensor-line error on
the lower and upper triangles, and a convolution kernel R on [0, 1].  The
two injection gains are traces of M: the in-domain gain is -M(s, 0)/h and
the sensor-line gain is -M(1, 1-s).

M and P satisfy the same transport equation with sources that coincide on
the diagonal, where the compatibility condition M(s, s) = P(s, s) holds; we
therefore solve them as a single field A on the unit square, marched along
characteristics of slope -1/h in (s, q) from the q = 1 edge (where
A = h*F(., 1)) and the s = 0 edge (where A = 0), with Picard iteration on
the integral coupling.  M and P are the lower/upper triangular views of A,
so the seam condition is met by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._quad import diag_prefix_trapz, tail_trapz_matmul, upper_trapz_matmul
from .kernels import DEFAULT_MAX_ITER, DEFAULT_TOL, KernelSolveError
from .plant import CoefficientField, PlantConfig, SpatialGrid

__all__ = [
    "ObserverKernels",
    "InverseObserverKernels",
    "ObserverGains",
    "solve_F",
    "solve_observer_kernels",
    "solve_inverse_observer",
    "gains_from_kernels",
]


@dataclass
class ObserverKernels:
    """Gridded observer kernels: F, P on T1; M on the lower triangle; R, S on [0, 1]."""

    F: np.ndarray
    M: np.ndarray
    P: np.ndarray
    R: np.ndarray
    S: np.ndarray
    ds: float
    h: float

    @property
    def combined(self) -> np.ndarray:
        """The single transport field whose triangular views are M and P."""
        return np.tril(self.M) + np.triu(self.P, 1)


@dataclass
class InverseObserverKernels:
    """Inverse-transformation kernels: Fbrv on T1, Pbrv on [0, 1+h], Rbrv on [0, 1]."""

    Fbrv: np.ndarray
    Pbrv: np.ndarray
    Rbrv: np.ndarray
    ds: float
    h: float


@dataclass
class ObserverGains:
    """Output-injection gains sampled on the grid."""

    q1: np.ndarray
    q2: np.ndarray
    ds: float


def solve_F(coeff: CoefficientField, grid: SpatialGrid, sign: float = 1.0,
            tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Solve the T1 transport kernel with integral coupling sign*int f F - f.

    sign=+1 gives the forward kernel F, sign=-1 its inverse counterpart.
    The integral form runs along diagonal rays from the s = 0 edge, where
    the kernel vanishes.
    """
    n, ds = grid.n, grid.ds
    f = coeff.f_grid
    F = np.zeros((n, n))
    for _ in range(max_iter):
        x = sign * upper_trapz_matmul(f, F, ds) - f
        F_new = np.triu(diag_prefix_trapz(x, ds))
        change = float(np.max(np.abs(F_new - F)))
        F = F_new
        if change <= tol:
            return F
    raise KernelSolveError("observer kernel F iteration did not converge")


def _march_combined(f: np.ndarray, top: np.ndarray, h: float, ds: float,
                    tol: float, max_iter: int) -> np.ndarray:
    """Semi-Lagrangian march of the combined M/P field with Picard coupling.

    Levels run q = 1 down to 0; per level each node pulls its value from the
    foot of its characteristic on the level above (linear interpolation in
    s), accumulating the source along the step.  Characteristics crossing
    the s = 0 edge mid-step pick up a zero entry value and a partial-path
    source.  The integral source uses the previous Picard iterate.
    """
    n = f.shape[0]
    s = np.arange(n) * ds
    A = np.zeros((n, n))
    A[:, -1] = top
    feet = s - h * ds
    inside = feet >= -1e-14
    entry_len = np.where(inside, ds, s / h)  # q-length of the step actually inside

    for sweep in range(max_iter):
        src = h * tail_trapz_matmul(f, A, ds)
        A_new = np.zeros((n, n))
        A_new[:, -1] = top
        foot_clip = np.clip(feet, 0.0, None)
        for j in range(n - 2, -1, -1):
            # outside feet enter through s = 0 where the field is zero; the
            # clipped interpolation picks up the s = 0 source for them
            foot_vals = np.where(inside, np.interp(foot_clip, s, A_new[:, j + 1]), 0.0)
            src_foot = np.interp(foot_clip, s, src[:, j + 1])
            A_new[:, j] = foot_vals + 0.5 * entry_len * (src_foot + src[:, j])
            A_new[0, j] = 0.0
        change = float(np.max(np.abs(A_new - A)))
        A = A_new
        if change <= tol:
            return A
    raise KernelSolveError("observer M/P marching did not converge")


def solve_observer_kernels(coeff: CoefficientField, cfg: PlantConfig,
                           grid: SpatialGrid, tol: float = DEFAULT_TOL,
                           max_iter: int = DEFAULT_MAX_ITER) -> ObserverKernels:
    n, ds = grid.n, grid.ds
    f = coeff.f_grid
    h = cfg.h
    F = solve_F(coeff, grid, sign=1.0, tol=tol, max_iter=max_iter)
    A = _march_combined(f, h * F[:, -1], h, ds, tol, max_iter)
    M = np.tril(A)
    P = np.triu(A)
    R = A[n - 1, ::-1].copy()

    S = coeff.c_grid.copy()
    for _ in range(max_iter):
        integ = ds * (F @ S - 0.5 * (np.diagonal(F) * S + F[:, -1] * S[-1]))
        S_new = coeff.c_grid + integ
        change = float(np.max(np.abs(S_new - S)))
        S = S_new
        if change <= tol:
            break
    else:
        raise KernelSolveError("source kernel S iteration did not converge")
    return ObserverKernels(F=F, M=M, P=P, R=R, S=S, ds=ds, h=h)


def solve_inverse_observer(coeff: CoefficientField, cfg: PlantConfig,
                           grid: SpatialGrid, tol: float = DEFAULT_TOL,
                           max_iter: int = DEFAULT_MAX_ITER) -> InverseObserverKernels:
    """Inverse kernels: the flipped-coupling T1 kernel plus its q = 1 trace shifts."""
    n, ds = grid.n, grid.ds
    h = cfg.h
    Fb = solve_F(coeff, grid, sign=-1.0, tol=tol, max_iter=max_iter)
    edge = Fb[:, -1]
    s = grid.s
    varsig = np.linspace(0.0, 1.0 + h, n)
    Pb = np.where(varsig > h + 1e-12,
                  h * np.interp(np.clip(varsig - h, 0.0, 1.0), s, edge), 0.0)
    zeta = s
    Rb = h * np.interp(1.0 - h * zeta, s, edge)
    return InverseObserverKernels(Fbrv=Fb, Pbrv=Pb, Rbrv=Rb, ds=ds, h=h)


def gains_from_kernels(obs: ObserverKernels, cfg: PlantConfig) -> ObserverGains:
    """Read the injection gains off the M traces."""
    n = obs.M.shape[0]
    q1 = -obs.M[:, 0] / cfg.h
    q2 = -obs.M[n - 1, ::-1].copy()
    return ObserverGains(q1=q1, q2=q2, ds=obs.ds)
