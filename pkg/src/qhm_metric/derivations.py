"""
The three derivations of the Heisenberg action and the Lip seminorm.

    delta_1(phi) = -d phi/dx
    delta_2(phi) = 2 pi i c p x phi - d phi/dy
    delta_3(phi) = 2 pi i p phi

Closed-form elements are differentiated through their analytic partials. Grid
elements use a fourth-order central difference in x, whose ghost points come from
the twist, and the spectral derivative in y with the Nyquist mode dropped.
"""

import logging
from typing import Callable, Tuple

import numpy as np

from .element import Element, FiberFunc
from .errors import CapabilityError, DomainError
from .interpolation import twisted_roll, twisted_roll_adjoint
from .norms import NormReport, sup_sum_norm


logger = logging.getLogger(__name__)

# (shift, weight) of the five-point first-derivative stencil, in units of 1/h
CENTRAL_STENCIL = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))


def _spectral_multiplier(ny: int) -> np.ndarray:
    k = np.rint(np.fft.fftfreq(ny) * ny)
    mult = 2j * np.pi * k
    if ny % 2 == 0:
        mult[ny // 2] = 0.0
    return mult


def grid_dx(fiber: np.ndarray, twist: int) -> np.ndarray:
    """Fourth-order d/dx of a fiber on the uniform grid, twisted across the edge."""
    nx = fiber.shape[0]
    out = np.zeros(fiber.shape, dtype=complex)
    for shift, weight in CENTRAL_STENCIL:
        out += weight * twisted_roll(fiber, twist, shift)
    return out * nx


def grid_dx_adjoint(values: np.ndarray, twist: int) -> np.ndarray:
    nx = values.shape[0]
    out = np.zeros(values.shape, dtype=complex)
    for shift, weight in CENTRAL_STENCIL:
        out += weight * twisted_roll_adjoint(values, twist, shift)
    return out * nx


def grid_dy(fiber: np.ndarray) -> np.ndarray:
    """Spectral d/dy of a periodic fiber."""
    mult = _spectral_multiplier(fiber.shape[1])
    return np.fft.ifft(np.fft.fft(fiber, axis=1) * mult[None, :], axis=1)


def grid_dy_adjoint(values: np.ndarray) -> np.ndarray:
    # skew-adjoint
    return -grid_dy(values)


def apply_grid_derivation(index: int, fiber: np.ndarray, p: int, c: int) -> np.ndarray:
    """delta_index of a single grid fiber p."""
    if index == 1:
        return -grid_dx(fiber, c * p)
    if index == 2:
        if p == 0:
            return -grid_dy(fiber)
        x = np.arange(fiber.shape[0]) / fiber.shape[0]
        return 2j * np.pi * c * p * x[:, None] * fiber - grid_dy(fiber)
    if index == 3:
        return 2j * np.pi * p * fiber
    raise DomainError(f"Derivation index must be 1, 2 or 3, got {index}")


def apply_grid_derivation_adjoint(index: int, values: np.ndarray, p: int, c: int) -> np.ndarray:
    """Conjugate transpose of :func:`apply_grid_derivation` for fiber p."""
    if index == 1:
        return -grid_dx_adjoint(values, c * p)
    if index == 2:
        x = np.arange(values.shape[0]) / values.shape[0]
        return -2j * np.pi * c * p * x[:, None] * values - grid_dy_adjoint(values)
    if index == 3:
        return -2j * np.pi * p * values
    raise DomainError(f"Derivation index must be 1, 2 or 3, got {index}")


def _grid_derivation(index: int, a: Element) -> Element:
    P = a.trunc.P
    data = np.zeros_like(a.data)
    for p in range(-a.band, a.band + 1):
        data[p + P] = apply_grid_derivation(index, a.data[p + P], p, a.params.c)
    return Element.from_grid(a.params, a.trunc, data)


def _closed(a: Element, func: FiberFunc, dx=None, dy=None) -> Element:
    return Element.closed_form(a.params, a.trunc, a.band, func, dx=dx, dy=dy)


def derivation_1(a: Element) -> Element:
    """delta_1(phi) = -d phi/dx."""
    if a.data is not None:
        return _grid_derivation(1, a)
    if a.dx is None:
        raise CapabilityError("delta_1 needs the analytic x-partial of a closed-form element")

    def func(x0, y0, p):
        return -a._call(a.dx, x0, y0, p)

    return _closed(a, func)


def derivation_2(a: Element) -> Element:
    """delta_2(phi) = 2 pi i c p x phi - d phi/dy, on the fundamental domain."""
    if a.data is not None:
        return _grid_derivation(2, a)
    if a.dy is None:
        raise CapabilityError("delta_2 needs the analytic y-partial of a closed-form element")
    c = a.params.c

    def func(x0, y0, p):
        values = -a._call(a.dy, x0, y0, p)
        if p != 0:
            values = values + 2j * np.pi * c * p * np.asarray(x0) * a._call(a.func, x0, y0, p)
        return values

    return _closed(a, func)


def derivation_3(a: Element) -> Element:
    """delta_3(phi) = 2 pi i p phi."""
    if a.data is not None:
        return _grid_derivation(3, a)

    def scaled(fn):
        def out(x0, y0, p):
            return 2j * np.pi * p * a._call(fn, x0, y0, p)

        return out

    return _closed(
        a,
        scaled(a.func),
        dx=scaled(a.dx) if a.dx is not None else None,
        dy=scaled(a.dy) if a.dy is not None else None,
    )


DERIVATIONS: Tuple[Callable[[Element], Element], ...] = (derivation_1, derivation_2, derivation_3)


def derivation(index: int, a: Element) -> Element:
    if index not in (1, 2, 3):
        raise DomainError(f"Derivation index must be 1, 2 or 3, got {index}")
    return DERIVATIONS[index - 1](a)


def derivation_norms(a: Element, polish=None) -> Tuple[NormReport, NormReport, NormReport]:
    """Sup-sum reports of delta_1(a), delta_2(a), delta_3(a)."""
    if not a.is_selfadjoint():
        logger.warning("Lip seminorm evaluated on an element that is not self-adjoint")
    reports = tuple(sup_sum_norm(d(a), polish=polish) for d in DERIVATIONS)
    return reports  # type: ignore[return-value]


def lip_seminorm(a: Element, polish=None) -> float:
    """L(a) = max_i ||delta_i(a)||."""
    reports = derivation_norms(a, polish=polish)
    value = max(report.sup_sum for report in reports)
    norms = ", ".join(f"{r.sup_sum:.4g}" for r in reports)
    logger.debug(f"Lip seminorm {value:.6g} (derivation norms {norms})")
    return value
