"""Control kernel solver for the delay-compensating transformation.

The stabilizing transformation is built from a Volterra kernel K on the
triangle T1 = {0 <= s <= q <= 1} together with two one-variable kernels: L,
which weights the sensor-delay line, and J, which weights the recycle line.
K satisfies a transport equation along the diagonal direction with an
integral self-coupling and a nonlocal boundary trace at q = 1 that folds the
recycle delay back into the domain.  Written in integral form along the
characteristics, the problem splits into two branches at q - s = tau: below
that offset the boundary trace is zero and K is driven by f alone; above it
the trace contributes a c-dependent forcing evaluated on the shifted row
s - q + 1 + tau.

Two independent solvers are provided: ``solve_K`` iterates the integral
form to a fixed point (the primary path), while ``solve_K_characteristics``
marches the differential form along characteristics and serves as a
cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._quad import (
    diag_suffix_trapz,
    interp_rows,
    tail_trapz,
    tail_trapz_matmul,
    upper_trapz_matmul,
)
from .plant import CoefficientField, PlantConfig, SpatialGrid

__all__ = [
    "ControlKernels",
    "InverseKernels",
    "KernelSolveError",
    "solve_K",
    "solve_K_characteristics",
    "derive_J_and_L",
    "eval_J",
    "eval_L",
    "solve_control_kernels",
    "solve_inverse",
    "kernel_residual",
    "residual_report",
]

# Branch membership must be robust to float noise in q - s - tau; values are
# continuous across the branch line, so ties may go either way.
_BRANCH_EPS = 1e-9

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


class KernelSolveError(RuntimeError):
    """Fixed-point iteration failed to reach tolerance within max_iter."""


@dataclass
class ControlKernels:
    """Gridded control kernels and their domain metadata.

    K lives on the n x n grid of T1 (zeros below the diagonal); L and J are
    sampled on n uniform points over [0, 1+h] and [0, 1+eta] respectively,
    both identically zero from argument 1 onward.
    """

    K: np.ndarray
    L: np.ndarray
    J: np.ndarray
    ds: float
    h: float
    eta: float
    tau: float

    @property
    def l_spacing(self) -> float:
        return (1.0 + self.h) / (self.L.shape[0] - 1)

    @property
    def j_spacing(self) -> float:
        return (1.0 + self.eta) / (self.J.shape[0] - 1)

    def l_interp(self, phi: np.ndarray | float) -> np.ndarray | float:
        dom = np.linspace(0.0, 1.0 + self.h, self.L.shape[0])
        return np.interp(phi, dom, self.L)

    def j_interp(self, sigma: np.ndarray | float) -> np.ndarray | float:
        dom = np.linspace(0.0, 1.0 + self.eta, self.J.shape[0])
        return np.interp(sigma, dom, self.J)


@dataclass
class InverseKernels:
    """Kernels of the inverse transformation: B on T1, D and E on the unit square."""

    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    ds: float


def _psi_diagonals(n: int, ds: float, tau: float) -> list[tuple[int, float]]:
    """Diagonal offsets d with q - s = d*ds strictly above the branch line."""
    out = []
    for d in range(1, n):
        if d * ds > tau + _BRANCH_EPS:
            out.append((d, 1.0 + tau - d * ds))
    return out


def solve_K(coeff: CoefficientField, cfg: PlantConfig, grid: SpatialGrid,
            tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
            fixed_iters: int | None = None) -> np.ndarray:
    """Solve the kernel integral equation by successive approximation.

    Each sweep rebuilds the two forcing terms (a diagonal-ray integral of f
    and, on the upper branch, the shifted-row trace of c) and the two
    integral couplings, then checks the sup-norm change.  ``fixed_iters``
    forces an exact iteration count, bypassing the tolerance test.
    """
    n, ds = grid.n, grid.ds
    f = coeff.f_grid
    tau = cfg.tau

    forcing = -diag_suffix_trapz(f, ds)
    psi_diags = _psi_diagonals(n, ds, tau)
    trace = _ShiftedRowTrace(psi_diags, coeff, n, ds) if psi_diags else None

    K = np.zeros((n, n))
    iters = max_iter if fixed_iters is None else fixed_iters
    for it in range(iters):
        inner = upper_trapz_matmul(K, f, ds)
        K_new = forcing + diag_suffix_trapz(inner, ds)
        if trace is not None:
            traces = trace(K)
            for (d, _), val in zip(psi_diags, traces):
                idx = np.arange(n - d)
                K_new[idx, idx + d] += val
        K_new = np.triu(K_new)
        change = float(np.max(np.abs(K_new - K)))
        K = K_new
        if fixed_iters is None and change <= tol:
            return K
    if fixed_iters is not None:
        return K
    raise KernelSolveError(
        f"kernel iteration did not reach tol={tol} in {max_iter} sweeps "
        f"(last change {change:.3e}); refine the grid or check coefficients"
    )


class _ShiftedRowTrace:
    """Batched evaluation of the upper-branch forcing for all diagonals.

    For each affected diagonal the forcing is the tail integral of
    c * K(a, .) from the shifted row position a, plus -c(a); row
    interpolation weights and partial-cell geometry depend only on the grid
    and tau, so they are precomputed and each sweep costs a couple of
    vectorized gathers.
    """

    def __init__(self, psi_diags, coeff, n: int, ds: float):
        self.n, self.ds = n, ds
        a = np.array([av for _, av in psi_diags])
        pos = a / ds
        self.i0 = np.minimum(np.floor(pos + 1e-12).astype(int), n - 1)
        self.w = pos - self.i0
        self.i1 = np.minimum(self.i0 + 1, n - 1)
        self.c = coeff.c_grid
        self.const = np.array([-coeff.c_at(av) for _, av in psi_diags])
        # first full grid node at or right of each a
        self.k0 = np.maximum(np.ceil(pos - 1e-12).astype(int), 0)
        self.partial_w = self.k0 * ds - a
        self.a = a

    def __call__(self, K: np.ndarray) -> np.ndarray:
        rows = ((1.0 - self.w)[:, None] * K[self.i0]
                + self.w[:, None] * K[self.i1])
        vals = rows * self.c[None, :]
        # suffix trapezoids via a reversed cumulative sum
        cells = 0.5 * self.ds * (vals[:, 1:] + vals[:, :-1])
        suffix = np.zeros_like(vals)
        suffix[:, :-1] = np.cumsum(cells[:, ::-1], axis=1)[:, ::-1]
        m = vals.shape[0]
        out = suffix[np.arange(m), self.k0] + self.const
        has_partial = self.partial_w > 1e-14
        if np.any(has_partial):
            frac = self.partial_w / self.ds
            k0 = self.k0
            v_at_a = np.where(k0 >= 1,
                              vals[np.arange(m), k0] * (1.0 - frac)
                              + vals[np.arange(m), np.maximum(k0 - 1, 0)] * frac,
                              vals[np.arange(m), 0])
            partial = 0.5 * self.partial_w * (v_at_a + vals[np.arange(m), k0])
            out = out + np.where(has_partial, partial, 0.0)
        return out


def solve_K_characteristics(coeff: CoefficientField, cfg: PlantConfig,
                            grid: SpatialGrid) -> np.ndarray:
    """Characteristics-marching finite-difference solver, kept as the oracle.

    Rows are filled from s = 1 downward: the q = 1 trace of each row only
    references rows at s + tau, already available.  Within a row the march
    steps down-diagonal with a trapezoid rule; the self-coupling integral
    makes each new value implicit in a single scalar, solved in closed form.
    Deliberately self-contained; shares no quadrature path with solve_K.
    Requires tau comfortably above the grid spacing.
    """
    n, ds = grid.n, grid.ds
    f = coeff.f_grid
    c = coeff.c_grid
    tau = cfg.tau
    if tau < 2.0 * ds:
        raise ValueError("characteristics oracle requires tau >= 2*ds")

    K = np.zeros((n, n))
    rhs = np.zeros((n, n))  # f - integral coupling, reused row to row

    def boundary_value(i: int) -> float:
        s_i = i * ds
        a = s_i + tau
        if a >= 1.0 - _BRANCH_EPS:
            return 0.0
        pos = a / ds
        i0 = int(np.floor(pos + 1e-12))
        w = pos - i0
        row = (1.0 - w) * K[i0] + w * K[min(i0 + 1, n - 1)]
        # integral of c*row over [a, 1], partial first cell included
        k0 = int(np.ceil(pos - 1e-12))
        vals = c * row
        acc = float(np.trapezoid(vals[k0:], dx=ds)) if n - k0 >= 2 else 0.0
        if k0 * ds - a > 1e-14:
            width = k0 * ds - a
            frac = width / ds
            v_a = vals[k0] * (1.0 - frac) + vals[k0 - 1] * frac
            acc += 0.5 * width * (v_a + vals[k0])
        return acc - coeff.c_at(a)

    for i in range(n - 1, -1, -1):
        K[i, n - 1] = boundary_value(i)
        for j in range(i, n - 1):
            # trapezoid coupling over [s_i, q_j] split into known part and
            # the implicit half-weight on the new node
            if j == i:
                t_known = 0.0
                f_end = 0.0
            else:
                w = np.full(j - i + 1, ds)
                w[0] *= 0.5
                w[-1] *= 0.5
                t_known = float(np.dot(w[:-1], K[i, i:j] * f[i:j, j]))
                f_end = f[j, j]
            known = (K[i + 1, j + 1]
                     - 0.5 * ds * rhs[i + 1, j + 1]
                     - 0.5 * ds * (f[i, j] - t_known))
            K[i, j] = known / (1.0 - 0.25 * ds * ds * f_end)
            rhs[i, j] = f[i, j] - (t_known + 0.5 * ds * f_end * K[i, j])
        # rhs on the boundary column, needed by the row above
        j = n - 1
        if i < n - 1:
            w = np.full(j - i + 1, ds)
            w[0] *= 0.5
            w[-1] *= 0.5
            rhs[i, j] = f[i, j] - float(np.dot(w, K[i, i:] * f[i:, j]))
        else:
            rhs[i, j] = f[i, j]
    return np.triu(K)


def eval_J(K: np.ndarray, coeff: CoefficientField, grid: SpatialGrid,
           sigma: float) -> float:
    """Recycle kernel value J(sigma) = int_sigma^1 K(sigma, q) c(q) dq - c(sigma),
    zero from sigma = 1 onward."""
    if sigma >= 1.0 - 1e-12:
        return 0.0
    row = interp_rows(K, sigma, grid.ds)
    return tail_trapz(coeff.c_grid * row, sigma, grid.ds) - coeff.c_at(sigma)


def eval_L(K: np.ndarray, coeff: CoefficientField, grid: SpatialGrid,
           cfg: PlantConfig, phi: float) -> float:
    """Sensor kernel value L(phi) = J(phi + eta) for phi < 1, zero beyond."""
    if phi >= 1.0 - 1e-12:
        return 0.0
    return eval_J(K, coeff, grid, phi + cfg.eta)


def derive_J_and_L(K: np.ndarray, coeff: CoefficientField, cfg: PlantConfig,
                   grid: SpatialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Sample J over [0, 1+eta] and L over [0, 1+h] on n uniform points each."""
    n = grid.n
    sig = np.linspace(0.0, 1.0 + cfg.eta, n)
    phi = np.linspace(0.0, 1.0 + cfg.h, n)
    J = np.array([eval_J(K, coeff, grid, x) for x in sig])
    L = np.array([eval_L(K, coeff, grid, cfg, x) for x in phi])
    return J, L


def solve_control_kernels(coeff: CoefficientField, cfg: PlantConfig,
                          grid: SpatialGrid, tol: float = DEFAULT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> ControlKernels:
    """Convenience wrapper: solve K then derive the delay-line kernels."""
    K = solve_K(coeff, cfg, grid, tol=tol, max_iter=max_iter)
    J, L = derive_J_and_L(K, coeff, cfg, grid)
    return ControlKernels(K=K, L=L, J=J, ds=grid.ds, h=cfg.h, eta=cfg.eta,
                          tau=cfg.tau)


def solve_inverse(kernels: ControlKernels, coeff: CoefficientField,
                  cfg: PlantConfig, grid: SpatialGrid,
                  tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> InverseKernels:
    """Solve the Volterra relations for the inverse-transformation kernels.

    B adds iterated K-couplings on T1; D and E live on the unit square with
    forcings h*L(s + h r) and eta*J(s + eta r) and a full-column coupling
    through K.
    """
    n, ds = grid.n, grid.ds
    K = kernels.K
    s = grid.s

    B = K.copy()
    for _ in range(max_iter):
        B_new = K + upper_trapz_matmul(K, B, ds)
        change = float(np.max(np.abs(B_new - B)))
        B = B_new
        if change <= tol:
            break
    else:
        raise KernelSolveError("inverse kernel B iteration did not converge")

    # forcings h*L(s + h r) and eta*J(s + eta r) on the (s, r) square,
    # read off the sampled one-variable kernels
    args_l = s[:, None] + cfg.h * s[None, :]
    args_j = s[:, None] + cfg.eta * s[None, :]
    fd = cfg.h * np.asarray(kernels.l_interp(args_l))
    fe = cfg.eta * np.asarray(kernels.j_interp(args_j))

    D = fd.copy()
    E = fe.copy()
    for _ in range(max_iter):
        D_new = fd + tail_trapz_matmul(K, D, ds)
        E_new = fe + tail_trapz_matmul(K, E, ds)
        change = max(float(np.max(np.abs(D_new - D))),
                     float(np.max(np.abs(E_new - E))))
        D, E = D_new, E_new
        if change <= tol:
            break
    else:
        raise KernelSolveError("inverse kernel D/E iteration did not converge")
    return InverseKernels(B=B, D=D, E=E, ds=ds)


def _directional_derivative(K: np.ndarray, ds: float) -> np.ndarray:
    """K_s + K_q as a difference along the diagonal direction.

    The kernel is only piecewise smooth across the branch line q - s = tau,
    but that line is itself a characteristic, so diagonal differences never
    straddle it.  Central differences where both neighbours exist, one-sided
    at the s = 0 edge.
    """
    n = K.shape[0]
    d = np.full((n, n), np.nan)
    d[1:-1, 1:-1] = (K[2:, 2:] - K[:-2, :-2]) / (2.0 * ds)
    d[0, :-1] = (K[1, 1:] - K[0, :-1]) / ds
    return d


def residual_report(K: np.ndarray, coeff: CoefficientField, cfg: PlantConfig,
                    grid: SpatialGrid) -> dict:
    """Sup-norm defect of K in the differential form plus the q = 1 trace mismatch."""
    n, ds = grid.n, grid.ds
    f = coeff.f_grid
    coupling = upper_trapz_matmul(K, f, ds)
    deriv = _directional_derivative(K, ds)
    pde = deriv - f + coupling
    mask = np.triu(np.ones((n, n), dtype=bool))
    mask[:, -1] = False  # boundary row checked separately
    vals = np.abs(pde[mask])
    pde_sup = float(np.nanmax(vals)) if vals.size else 0.0

    bc_sup = 0.0
    for i in range(n):
        s_i = i * ds
        if s_i + cfg.tau >= 1.0 - _BRANCH_EPS:
            target = 0.0
        else:
            target = eval_J(K, coeff, grid, s_i + cfg.tau)
        bc_sup = max(bc_sup, abs(K[i, n - 1] - target))
    return {"pde_sup": pde_sup, "boundary_sup": float(bc_sup),
            "total": max(pde_sup, float(bc_sup))}


def kernel_residual(K: np.ndarray, coeff: CoefficientField, cfg: PlantConfig,
                    grid: SpatialGrid) -> float:
    return residual_report(K, coeff, cfg, grid)["total"]
