"""
Resampling of grid fibers on the fundamental domain [0,1) x [0,1).

A fiber is a complex array of shape (Nx, Ny) holding phi(ix/Nx, iy/Ny, p) for one p.
In y the fiber is 1-periodic and is interpolated trigonometrically. In x it is
only quasi-periodic: samples past the right edge are borrowed from the left edge
with the twist phase e(c*p*y) (and e(-c*p*y) the other way), then a local cubic
Lagrange stencil is applied.

The module works on bare arrays; ``twist`` always means the integer c*p.
"""

import logging
from typing import List, Tuple

import numpy as np

from .errors import DomainError, PreconditionError


logger = logging.getLogger(__name__)

# Grid hits closer than this (in units of the y spacing) use the stored sample.
GRID_HIT_TOL = 1e-10

CUBIC_OFFSETS = (-1, 0, 1, 2)


def unit_phase(t) -> np.ndarray:
    """
    e(t) = exp(2*pi*i*t) with t reduced to [-1/2, 1/2] first.

    The reduction is odd in t, so unit_phase(-t) is the exact conjugate of unit_phase(t).
    """
    t = np.asarray(t, dtype=float)
    return np.exp(2j * np.pi * (t - np.round(t)))


def cubic_weights(theta) -> Tuple[np.ndarray, ...]:
    """Lagrange weights for nodes -1, 0, 1, 2 evaluated at fractional offset theta."""
    t = np.asarray(theta, dtype=float)
    return (
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    )


def _frequencies(ny: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(ny) * ny).astype(np.int64)


def _shift_multiplier(ny: int, sy: float) -> np.ndarray:
    """Fourier multiplier moving a periodic row by sy (sample at y + sy)."""
    mult = unit_phase(_frequencies(ny) * sy)
    if ny % 2 == 0:
        # the Nyquist mode is interpolated as cos(pi*Ny*y)
        mult[ny // 2] = np.cos(np.pi * ny * sy)
    return mult


def _is_integer(value: float) -> bool:
    return abs(value - round(value)) <= GRID_HIT_TOL


def twisted_roll(fiber: np.ndarray, twist: int, shift: int, y_eval=None) -> np.ndarray:
    """
    Values at x-index i + shift for every i, crossing the x-edge with the twist phase.

    Args:
        fiber: (Nx, Ny) samples
        twist: the integer c*p of the fiber
        shift: integer index offset (any sign, any size)
        y_eval: y coordinates of the columns (defaults to the grid nodes)

    Returns:
        (Nx, Ny) array
    """
    nx, ny = fiber.shape
    if y_eval is None:
        y_eval = np.arange(ny) / ny
    index = np.arange(nx) + shift
    periods = np.floor_divide(index, nx)
    rows = np.mod(index, nx)
    out = fiber[rows, :]
    if twist != 0 and np.any(periods != 0):
        out = out * unit_phase(twist * periods[:, None] * np.asarray(y_eval)[None, :])
    return out


def twisted_roll_adjoint(values: np.ndarray, twist: int, shift: int, y_eval=None) -> np.ndarray:
    """Conjugate transpose of :func:`twisted_roll`."""
    nx, ny = values.shape
    if y_eval is None:
        y_eval = np.arange(ny) / ny
    index = np.arange(nx) + shift
    periods = np.floor_divide(index, nx)
    rows = np.mod(index, nx)
    if twist != 0 and np.any(periods != 0):
        values = values * np.conj(
            unit_phase(twist * periods[:, None] * np.asarray(y_eval)[None, :])
        )
    out = np.empty_like(values)
    out[rows, :] = values
    return out


def _x_taps(sx: float, nx: int) -> List[Tuple[int, float]]:
    u = sx * nx
    if _is_integer(u):
        return [(int(round(u)), 1.0)]
    m = int(np.floor(u))
    weights = cubic_weights(u - m)
    return [(m + o, float(w)) for o, w in zip(CUBIC_OFFSETS, weights)]


def shift_fiber(fiber: np.ndarray, twist: int, sx: float, sy: float) -> np.ndarray:
    """
    Resample a fiber at the shifted grid (ix/Nx + sx, iy/Ny + sy).

    The shift is uniform, so the y part is a Fourier multiplier and the x part is
    the same four-tap stencil for every row.
    """
    nx, ny = fiber.shape
    if not (np.isfinite(sx) and np.isfinite(sy)):
        raise DomainError(f"Non-finite shift ({sx}, {sy})")

    ty = sy * ny
    if _is_integer(ty):
        moved = np.roll(fiber, -int(round(ty)), axis=1)
    else:
        moved = np.fft.ifft(np.fft.fft(fiber, axis=1) * _shift_multiplier(ny, sy), axis=1)

    y_eval = np.arange(ny) / ny + sy
    out = np.zeros((nx, ny), dtype=complex)
    for shift, weight in _x_taps(sx, nx):
        out += weight * twisted_roll(moved, twist, shift, y_eval)
    return out


def shift_fiber_adjoint(values: np.ndarray, twist: int, sx: float, sy: float) -> np.ndarray:
    """Conjugate transpose of :func:`shift_fiber` as a linear map on fibers."""
    nx, ny = values.shape
    y_eval = np.arange(ny) / ny + sy
    gathered = np.zeros((nx, ny), dtype=complex)
    for shift, weight in _x_taps(sx, nx):
        gathered += weight * twisted_roll_adjoint(values, twist, shift, y_eval)

    ty = sy * ny
    if _is_integer(ty):
        return np.roll(gathered, int(round(ty)), axis=1)
    return np.fft.ifft(
        np.fft.fft(gathered, axis=1) * np.conj(_shift_multiplier(ny, sy)), axis=1
    )


def interpolate_fiber(fiber: np.ndarray, twist: int, x0, y0) -> np.ndarray:
    """
    Evaluate a grid fiber at arbitrary points of the fundamental domain.

    Args:
        fiber: (Nx, Ny) samples
        twist: the integer c*p of the fiber
        x0, y0: broadcastable arrays with entries in [0, 1)

    Returns:
        complex array of the broadcast shape
    """
    nx, ny = fiber.shape
    x0, y0 = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(y0, dtype=float))
    shape = x0.shape
    xs = x0.ravel()
    ys = y0.ravel()

    coeffs = np.fft.fft(fiber, axis=1)
    freqs = _frequencies(ny)
    basis = unit_phase(ys[:, None] * freqs[None, :])
    if ny % 2 == 0:
        basis[:, ny // 2] = np.cos(np.pi * ny * ys)

    ty = ys * ny
    iy = np.mod(np.rint(ty).astype(np.int64), ny)
    on_grid = np.abs(ty - np.rint(ty)) <= GRID_HIT_TOL

    u = xs * nx
    base = np.floor(u).astype(np.int64)
    weights = cubic_weights(u - base)

    values = np.zeros(xs.shape, dtype=complex)
    for offset, weight in zip(CUBIC_OFFSETS, weights):
        index = base + offset
        periods = np.floor_divide(index, nx)
        rows = np.mod(index, nx)
        row_values = np.einsum("nk,nk->n", coeffs[rows], basis) / ny
        row_values = np.where(on_grid, fiber[rows, iy], row_values)
        if twist != 0:
            row_values = row_values * unit_phase(twist * periods * ys)
        values += weight * row_values
    return values.reshape(shape)


def interpolate(el, x0, y0, p: int):
    """
    Interpolate a grid-flavoured element on the fundamental domain.

    Trigonometric in y, local cubic in x with twisted edge samples.

    Args:
        el: Element of Grid flavour
        x0, y0: points in [0, 1) (scalars or arrays)
        p: fiber index

    Returns:
        complex value (or array for array input)
    """
    if el.data is None:
        raise PreconditionError("interpolate needs a grid-flavoured element")
    x_arr = np.asarray(x0, dtype=float)
    y_arr = np.asarray(y0, dtype=float)
    if not (np.all(np.isfinite(x_arr)) and np.all(np.isfinite(y_arr))):
        raise DomainError("interpolate needs finite coordinates")
    if np.any((x_arr < 0) | (x_arr >= 1)) or np.any((y_arr < 0) | (y_arr >= 1)):
        raise DomainError("interpolate works on the fundamental domain [0,1) x [0,1)")
    P = el.trunc.P
    if abs(p) > P:
        result = np.zeros(np.broadcast(x_arr, y_arr).shape, dtype=complex)
    else:
        result = interpolate_fiber(el.data[p + P], el.params.c * p, x_arr, y_arr)
    if result.ndim == 0:
        return complex(result)
    return result
