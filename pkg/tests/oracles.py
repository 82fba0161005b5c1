"""Independent oracles: deliberately plain reimplementations.

Nothing here shares quadrature or marching code with the package; loops and
np.trapezoid only.  These exist to cross-check the production solvers, so
keeping them naive is the point.
"""

import numpy as np


def _coupling_known(f, F, i, j, ds):
    """Trapezoid of f(s_i,.)*F(., q_j) over [s_i, q_j] excluding the
    half-weight term of the unknown node (i, j) itself."""
    if j == i:
        return 0.0, 0.0
    w = np.full(j - i + 1, ds)
    w[0] *= 0.5
    w[-1] *= 0.5
    known = float(np.dot(w[1:], f[i, i + 1:j + 1] * F[i + 1:j + 1, j]))
    return known, 0.5 * ds * f[i, i]


def observer_state_kernel_march(f: np.ndarray, ds: float) -> np.ndarray:
    """Diagonal march for the observer T1 kernel (trapezoid steps, implicit
    scalar at each new node).  Starts each diagonal at the zero edge s = 0."""
    n = f.shape[0]
    F = np.zeros((n, n))
    X = np.zeros((n, n))  # coupling integrand along diagonals
    for i in range(n):
        X[i, i] = -f[i, i]
    for i in range(n - 1):  # main diagonal first (zero-width coupling)
        F[i + 1, i + 1] = F[i, i] + 0.5 * ds * (X[i, i] + X[i + 1, i + 1])
    for d in range(1, n):
        # edge start of the diagonal (F value is zero, coupling explicit)
        known, coef = _coupling_known(f, F, 0, d, ds)
        X[0, d] = known + coef * F[0, d] - f[0, d]
        for i in range(0, n - 1 - d):
            j = i + d
            known, coef = _coupling_known(f, F, i + 1, j + 1, ds)
            num = (F[i, j] + 0.5 * ds * (X[i, j] + known - f[i + 1, j + 1]))
            F[i + 1, j + 1] = num / (1.0 - 0.5 * ds * coef)
            X[i + 1, j + 1] = known + coef * F[i + 1, j + 1] - f[i + 1, j + 1]
    return F


def observer_combined_march(f: np.ndarray, F: np.ndarray, h: float,
                            ds: float) -> np.ndarray:
    """Eulerian upwind march of the combined lower/upper sensor kernel field.

    Levels step q downward with a lagged source column; requires h < 1 for
    the CFL condition of the explicit update.
    """
    if h >= 1.0:
        raise ValueError("explicit oracle requires h < 1")
    n = f.shape[0]
    A = np.zeros((n, n))
    A[:, n - 1] = h * F[:, n - 1]
    for j in range(n - 2, -1, -1):
        src = np.zeros(n)
        for i in range(n):
            src[i] = h * np.trapezoid(f[i, i:] * A[i:, j + 1], dx=ds)
        for i in range(1, n):
            A[i, j] = (A[i, j + 1] - h * (A[i, j + 1] - A[i - 1, j + 1])
                       + ds * src[i])
        A[0, j] = 0.0
    return A


def observer_gains_fd(f: np.ndarray, h: float, ds: float):
    """Full observer-gain computation through the FD oracles."""
    F = observer_state_kernel_march(f, ds)
    A = observer_combined_march(f, F, h, ds)
    n = f.shape[0]
    q1 = -A[:, 0] / h
    q2 = -A[n - 1, ::-1].copy()
    return q1, q2, F, A


def dense_collocation_state_kernel(f: np.ndarray, ds: float,
                                   sign: float = 1.0) -> np.ndarray:
    """Dense linear solve of the discretized observer T1 kernel equations.

    Unknowns are the upper-triangle nodes; the affine fixed-point map is
    assembled column by column and solved directly.
    """
    n = f.shape[0]
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    pos = {ij: k for k, ij in enumerate(idx)}
    m = len(idx)

    def apply_map(vec: np.ndarray) -> np.ndarray:
        F = np.zeros((n, n))
        for (i, j), k in pos.items():
            F[i, j] = vec[k]
        out = np.zeros(m)
        for (i, j), k in pos.items():
            d = j - i
            # prefix trapezoid of the coupling along the diagonal ray
            acc = 0.0
            prev = None
            for step in range(i + 1):
                ii, jj = step, step + d
                if jj == ii:
                    inner = 0.0
                else:
                    w = np.full(jj - ii + 1, ds)
                    w[0] *= 0.5
                    w[-1] *= 0.5
                    inner = float(np.dot(w, f[ii, ii:jj + 1] * F[ii:jj + 1, jj]))
                x = sign * inner - f[ii, jj]
                if prev is not None:
                    acc += 0.5 * ds * (prev + x)
                prev = x
            out[k] = acc
        return out

    b = apply_map(np.zeros(m))
    A = np.zeros((m, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = 1.0
        A[:, k] = apply_map(e) - b
    F_vec = np.linalg.solve(np.eye(m) - A, b)
    F = np.zeros((n, n))
    for (i, j), k in pos.items():
        F[i, j] = F_vec[k]
    return F


def dense_volterra_inverse(K: np.ndarray, ds: float) -> np.ndarray:
    """Column-by-column direct solve of the inverse-kernel relation on T1."""
    n = K.shape[0]
    B = np.zeros((n, n))
    for j in range(n):
        mdim = j + 1
        A = np.eye(mdim)
        for i in range(mdim):
            w = np.zeros(mdim)
            if j > i:
                w[i:j + 1] = ds
                w[i] *= 0.5
                w[j] *= 0.5
            A[i, i:] -= w[i:] * K[i, i:j + 1]
        B[:mdim, j] = np.linalg.solve(A, K[:mdim, j])
    return np.triu(B)
