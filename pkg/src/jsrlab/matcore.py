"""Dense complex matrix primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every function
here treats its inputs as immutable values and returns fresh arrays.

Besides the single-matrix operations, the module carries batched kernels
(``op_norms``, ``spectral_radii``, ``max_spectral_radius``) that act on stacks
of shape ``(N, d, d)``.  The set-level code in :mod:`jsrlab.jsr` enumerates
millions of products and relies on them.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import UsageError

KRON_CAP = 4096

# Relative slack added to batched norm values so that closed-form rounding
# never pushes an upper bound below the true norm.
NORM_INFLATION = 1e-12

_MAX_SQUARINGS = 40
_RTOL = 1e-13
_TIE_RTOL = 1e-12


def as_cmatrix(a) -> np.ndarray:
    """Validate ``a`` as a square, finite, non-empty complex matrix."""
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise UsageError("0x0 matrices are not allowed")
    if not np.all(np.isfinite(arr)):
        raise UsageError("matrix has non-finite entries")
    return arr


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128)


def matmul(a, b) -> np.ndarray:
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b


def op_norm(a) -> float:
    """Spectral norm (largest singular value)."""
    a = as_cmatrix(a)
    return float(np.linalg.norm(a, 2))


def kron(a, b, cap: int = KRON_CAP) -> np.ndarray:
    a, b = as_cmatrix(a), as_cmatrix(b)
    dim = a.shape[0] * b.shape[0]
    if dim > cap:
        raise UsageError(f"kron dimension {dim} exceeds cap {cap}")
    return np.kron(a, b)


class SpectralRadius(NamedTuple):
    value: float
    error: float
    converged: bool


def spectral_radius_info(a) -> SpectralRadius:
    """Spectral radius by scaled repeated squaring, with an error estimate.

    The Gelfand sequence ``||A^(2^k)||_F^(1/2^k)`` decreases monotonically to
    the spectral radius; each square is renormalised and the logarithm of the
    scale is accumulated separately, so neither overflow nor underflow occurs.
    ``error`` is certified when the trace lower bound meets the estimate and is
    otherwise extrapolated from the last step of the sequence.
    """
    a = as_cmatrix(a)
    value, err = _gelfand(a[None])
    value, err = float(value[0]), float(err[0])
    return SpectralRadius(value, err, err <= 1e-9 * max(value, 1e-300) or err == 0.0)


def spectral_radius(a) -> float:
    return spectral_radius_info(a).value


# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------

def _pow2_scale(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exponents ``e`` with ``x / 2**e`` having entries of modulus below 1.

    Scaling by powers of two is exact, so kernels can square entries without
    overflow or underflow and rescale afterwards.
    """
    m = np.abs(x.reshape(x.shape[0], -1)).max(axis=1)
    _, e = np.frexp(m)
    return x * np.ldexp(1.0, -e)[:, None, None], e


def frobenius_norms(stack: np.ndarray) -> np.ndarray:
    x, e = _pow2_scale(np.asarray(stack))
    s = x.reshape(x.shape[0], -1)
    return np.ldexp(np.sqrt((s.real ** 2 + s.imag ** 2).sum(axis=1)), e)


def _herm_gram(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, 1, 2)) @ x


def op_norms(stack: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of matrices, inflated by ``NORM_INFLATION``.

    Dimensions 1-3 use closed forms for the largest eigenvalue of ``X^H X``;
    larger matrices fall back to LAPACK.
    """
    x = np.asarray(stack, dtype=np.complex128)
    n, d = x.shape[0], x.shape[1]
    if n == 0:
        return np.zeros(0)
    x, e = _pow2_scale(x)
    if d == 1:
        lam = np.abs(x[:, 0, 0]) ** 2
    elif d == 2:
        h = _herm_gram(x)
        h11, h22 = h[:, 0, 0].real, h[:, 1, 1].real
        lam = 0.5 * (h11 + h22) + np.sqrt(0.25 * (h11 - h22) ** 2 + np.abs(h[:, 0, 1]) ** 2)
    elif d == 3:
        lam = _herm3_max_eig(_herm_gram(x))
    else:
        lam = np.linalg.eigvalsh(_herm_gram(x))[:, -1]
    return np.ldexp(np.sqrt(np.maximum(lam, 0.0)), e) * (1.0 + NORM_INFLATION)


def _herm3_max_eig(h: np.ndarray) -> np.ndarray:
    # trigonometric closed form; near a doubled top eigenvalue acos loses
    # accuracy, so those rows go to LAPACK
    d0, d1, d2 = h[:, 0, 0].real, h[:, 1, 1].real, h[:, 2, 2].real
    a01, a02, a12 = h[:, 0, 1], h[:, 0, 2], h[:, 1, 2]
    p1 = np.abs(a01) ** 2 + np.abs(a02) ** 2 + np.abs(a12) ** 2
    q = (d0 + d1 + d2) / 3.0
    e0, e1, e2 = d0 - q, d1 - q, d2 - q
    p2 = e0 * e0 + e1 * e1 + e2 * e2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe = p > 1e-150 * np.maximum(np.abs(q), 1e-300)
    ps = np.where(safe, p, 1.0)
    b0, b1, b2 = e0 / ps, e1 / ps, e2 / ps
    c01, c02, c12 = a01 / ps, a02 / ps, a12 / ps
    det = (b0 * (b1 * b2 - np.abs(c12) ** 2)
           - (c01 * (np.conj(c01) * b2 - c12 * np.conj(c02))).real
           + (c02 * (np.conj(c01) * np.conj(c12) - b1 * np.conj(c02))).real)
    r = np.clip(det / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam = np.where(safe, q + 2.0 * ps * np.cos(phi), q)
    bad = safe & (r < -1.0 + 1e-6)
    if np.any(bad):
        lam[bad] = np.linalg.eigvalsh(h[bad])[:, -1]
    return lam


def _gelfand(stack: np.ndarray, floor: float | None = None, dynamic: bool = False):
    """Core repeated-squaring loop over a stack.

    Returns ``(values, errors)``.  With ``floor`` set, rows whose running upper
    bound drops below ``floor`` stop early and report that upper bound (so
    their value is only certified to be below the floor).  With ``dynamic``
    the floor is raised to the best certified lower bound seen so far.
    """
    x = np.asarray(stack, dtype=np.complex128)
    n, d = x.shape[0], x.shape[1]
    values = np.zeros(n)
    errors = np.zeros(n)
    if n == 0:
        return values, errors
    if d == 1:
        values[:] = np.abs(x[:, 0, 0])
        return values, errors

    f = frobenius_norms(x)
    live = np.nonzero(f > 0)[0]
    # logs of the running upper bound and certified lower bound
    ub = np.log(f[live])
    b = x[live] / f[live, None, None]
    lb = ub + _log_trace_ratio(b, d)
    log_floor = -np.inf if floor is None or floor <= 0 else math.log(floor)
    if dynamic and live.size:
        log_floor = max(log_floor, float(lb.max()))
    weight = 1.0
    last_step = np.full(live.size, np.inf)

    for _ in range(_MAX_SQUARINGS):
        if live.size == 0:
            break
        done = (ub - lb) <= _RTOL
        done |= last_step <= _RTOL
        below = ub < log_floor - 1e-10
        finished = done | below
        if np.any(finished):
            idx = live[finished]
            values[idx] = np.exp(ub[finished])
            gap = np.minimum(ub[finished] - lb[finished], 2.0 * last_step[finished])
            errors[idx] = values[idx] * np.expm1(np.maximum(gap, 0.0))
            keep = ~finished
            live, ub, lb, b, last_step = live[keep], ub[keep], lb[keep], b[keep], last_step[keep]
            if live.size == 0:
                break
        weight *= 0.5
        c = b @ b
        g = frobenius_norms(c)
        zero = g == 0
        if np.any(zero):
            values[live[zero]] = 0.0
            errors[live[zero]] = 0.0
            keep = ~zero
            live, ub, lb, c, g = live[keep], ub[keep], lb[keep], c[keep], g[keep]
            if live.size == 0:
                break
        step = np.log(g) * weight
        ub = ub + step
        b = c / g[:, None, None]
        lb = np.maximum(lb, ub + weight * _log_trace_ratio(b, d))
        last_step = -step
        if dynamic:
            log_floor = max(log_floor, float(lb.max()))

    if live.size:
        values[live] = np.exp(ub)
        gap = np.minimum(ub - lb, 2.0 * last_step)
        errors[live] = values[live] * np.expm1(np.maximum(gap, 0.0))
    return values, errors


def _log_trace_ratio(b: np.ndarray, d: int) -> np.ndarray:
    # log(|tr B| / d); rho(B) >= |tr B| / d
    t = np.abs(np.trace(b, axis1=1, axis2=2)) / d
    with np.errstate(divide="ignore"):
        return np.log(t)


def spectral_radii(stack: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Spectral radii of a stack.

    Rows certified to lie below ``floor`` carry an upper bound (< floor)
    instead of a converged value.
    """
    return _gelfand(stack, floor=floor)[0]


def max_spectral_radius(stack: np.ndarray, floor: float = 0.0) -> tuple[float, int]:
    """Largest spectral radius in a stack and the first index attaining it.

    Ties within a relative ``1e-12`` resolve to the smallest index.  Returns
    ``(-1.0, -1)`` when no row can exceed ``floor``.
    """
    x = np.asarray(stack, dtype=np.complex128)
    if x.shape[0] == 0:
        return -1.0, -1
    # a floor slightly below the caller's keeps near-ties alive
    cut = floor * (1 - 1e-10)
    values, _ = _gelfand(x, floor=cut if floor > 0 else None, dynamic=True)
    best = float(values.max())
    # rows stopped early report values strictly below ``cut``
    if floor > 0 and best < cut:
        return -1.0, -1
    idx = int(np.nonzero(values >= best * (1 - _TIE_RTOL))[0][0])
    return best, idx
