"""Trapezoid quadrature helpers on the uniform unit-interval grid.

All kernel fields live on the n x n tensor grid of a uniform spacing ``ds``
with row index = first argument and column index = second argument.  Fields
supported on the upper triangle (first argument <= second) store explicit
zeros below the diagonal; the helpers below exploit those zeros so that
variable-limit integrals reduce to dense matrix products plus endpoint
corrections.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "upper_trapz_matvec",
    "upper_trapz_matmul",
    "tail_trapz_matmul",
    "diag_suffix_trapz",
    "diag_prefix_trapz",
    "tail_trapz",
    "interp_rows",
]


def upper_trapz_matvec(kernel: np.ndarray, vec: np.ndarray, ds: float) -> np.ndarray:
    """Row-wise integral r[i] = int_{s_i}^{1} kernel(s_i, q) vec(q) dq.

    ``kernel`` must be zero below the diagonal so the matrix product
    truncates the integral at the moving lower limit.
    """
    full = kernel @ vec
    corr = 0.5 * (np.diagonal(kernel) * vec + kernel[:, -1] * vec[-1])
    return ds * (full - corr)


def upper_trapz_matmul(a: np.ndarray, b: np.ndarray, ds: float) -> np.ndarray:
    """c[i, j] = int_{s_i}^{q_j} a(s_i, m) b(m, q_j) dm for upper-triangular a, b.

    Both factors must carry zeros below the diagonal; entries with i > j
    come out exactly zero.
    """
    full = a @ b
    corr = 0.5 * (
        np.diagonal(a)[:, None] * b + a * np.diagonal(b)[None, :]
    )
    return ds * (full - corr)


def tail_trapz_matmul(a: np.ndarray, b: np.ndarray, ds: float) -> np.ndarray:
    """c[i, j] = int_{s_i}^{1} a(s_i, m) b(m, q_j) dm.

    ``a`` must be zero below the diagonal; ``b`` may be dense (its column
    index is a free parameter, not an integration limit).
    """
    full = a @ b
    corr = 0.5 * (
        np.diagonal(a)[:, None] * b + np.outer(a[:, -1], b[-1, :])
    )
    return ds * (full - corr)


def diag_suffix_trapz(x: np.ndarray, ds: float) -> np.ndarray:
    """t[i, j] = integral of x along the diagonal ray from (i, j) to the j = n-1 edge.

    The ray visits (i+k, j+k); the recurrence accumulates trapezoid cells
    backwards from the edge, one row per step.
    """
    n = x.shape[0]
    t = np.zeros_like(x)
    for i in range(n - 2, -1, -1):
        t[i, :-1] = t[i + 1, 1:] + 0.5 * ds * (x[i, :-1] + x[i + 1, 1:])
    return t


def diag_prefix_trapz(x: np.ndarray, ds: float) -> np.ndarray:
    """t[i, j] = integral of x along the diagonal ray from the i = 0 edge up to (i, j).

    Only the upper triangle is meaningful; entries below the diagonal are
    left at whatever the recurrence produces and must be masked by callers.
    """
    n = x.shape[0]
    t = np.zeros_like(x)
    for i in range(1, n):
        t[i, 1:] = t[i - 1, :-1] + 0.5 * ds * (x[i - 1, :-1] + x[i, 1:])
        t[i, 0] = 0.0
    return t


def tail_trapz(vals: np.ndarray, start: float, ds: float) -> float:
    """Integral over [start, 1] of the piecewise-linear interpolant of ``vals``.

    ``vals`` are samples on the uniform grid over [0, 1]; ``start`` may fall
    between nodes, in which case a partial first cell is added.
    """
    n = vals.shape[0]
    end = (n - 1) * ds
    if start >= end - 1e-14:
        return 0.0
    k0 = int(np.ceil(start / ds - 1e-12))
    k0 = max(k0, 0)
    x0 = k0 * ds
    partial = 0.0
    if x0 - start > 1e-14:
        frac = (x0 - start) / ds
        v_start = vals[k0] * (1.0 - frac) + vals[k0 - 1] * frac if k0 >= 1 else vals[0]
        partial = 0.5 * (x0 - start) * (v_start + vals[k0])
    rest = np.trapezoid(vals[k0:], dx=ds) if n - k0 >= 2 else 0.0
    return partial + float(rest)


def interp_rows(field: np.ndarray, s: float, ds: float) -> np.ndarray:
    """Linear interpolation between adjacent rows of ``field`` at off-grid s."""
    n = field.shape[0]
    pos = s / ds
    i0 = int(np.floor(pos + 1e-12))
    i0 = min(max(i0, 0), n - 1)
    w = pos - i0
    if i0 >= n - 1 or abs(w) < 1e-12:
        return field[i0].copy()
    return (1.0 - w) * field[i0] + w * field[i0 + 1]
