"""
Windowed trigonometric elements: a dense, explicitly smooth family of elements.

The p = 0 fiber is a plain trigonometric polynomial in (x, y). Every other fiber
is w(x) * g_p(x, y) where g_p is a trigonometric polynomial and the window

    w(x) = sin(pi * (x - margin) / (1 - 2 * margin)) ** (2 * order)

on [margin, 1 - margin] (zero outside) vanishes at x = 0 and x = 1 together with
its first 2*order - 1 derivatives, so the twisted extension is smooth.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .element import Element, ModelParams, Truncation
from .errors import DomainError
from .interpolation import unit_phase


logger = logging.getLogger(__name__)

DEFAULT_MODES = (3, 3)
DEFAULT_ORDER = 3


@dataclass(frozen=True, eq=False)
class WindowedElement:
    """
    Coefficients c[p + band, m + Mx, n + My] of sum_{m,n} c e(m x + n y) per fiber,
    with the window applied to p != 0.
    """

    params: ModelParams
    trunc: Truncation
    coefficients: np.ndarray
    margin: float = 0.0
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=complex)
        if coeffs.ndim != 3 or any(n % 2 == 0 for n in coeffs.shape):
            raise DomainError(f"Coefficient array must have odd shape, got {coeffs.shape}")
        if not 0.0 <= self.margin < 0.5:
            raise DomainError(f"Window margin must lie in [0, 0.5), got {self.margin}")
        if self.order < 2:
            raise DomainError(f"Window order must be at least 2, got {self.order}")
        if (coeffs.shape[0] - 1) // 2 > self.trunc.P:
            raise DomainError("Coefficient band exceeds the truncation band")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def band(self) -> int:
        return (self.coefficients.shape[0] - 1) // 2

    @property
    def modes(self) -> Tuple[int, int]:
        return (self.coefficients.shape[1] - 1) // 2, (self.coefficients.shape[2] - 1) // 2

    def window(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        width = 1.0 - 2.0 * self.margin
        u = (x - self.margin) / width
        inside = (u >= 0.0) & (u <= 1.0)
        return np.where(inside, np.sin(np.pi * u) ** (2 * self.order), 0.0)

    def window_derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        width = 1.0 - 2.0 * self.margin
        u = (x - self.margin) / width
        inside = (u >= 0.0) & (u <= 1.0)
        s = np.sin(np.pi * u)
        slope = 2 * self.order * s ** (2 * self.order - 1) * np.cos(np.pi * u) * np.pi / width
        return np.where(inside, slope, 0.0)

    def _trig(self, x0, y0, p: int, dx: int = 0, dy: int = 0) -> np.ndarray:
        x0, y0 = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(y0, dtype=float))
        Mx, My = self.modes
        m = np.arange(-Mx, Mx + 1)
        n = np.arange(-My, My + 1)
        coeffs = self.coefficients[p + self.band]
        if dx:
            coeffs = coeffs * (2j * np.pi * m)[:, None] ** dx
        if dy:
            coeffs = coeffs * (2j * np.pi * n)[None, :] ** dy
        ex = unit_phase(x0.ravel()[:, None] * m[None, :])
        ey = unit_phase(y0.ravel()[:, None] * n[None, :])
        values = np.einsum("km,mn,kn->k", ex, coeffs, ey)
        return values.reshape(x0.shape)

    def value(self, x0, y0, p: int) -> np.ndarray:
        if abs(p) > self.band:
            return np.zeros(np.broadcast(np.asarray(x0), np.asarray(y0)).shape, dtype=complex)
        g = self._trig(x0, y0, p)
        if p == 0:
            return g
        return self.window(x0) * g

    def value_dx(self, x0, y0, p: int) -> np.ndarray:
        if abs(p) > self.band:
            return np.zeros(np.broadcast(np.asarray(x0), np.asarray(y0)).shape, dtype=complex)
        gx = self._trig(x0, y0, p, dx=1)
        if p == 0:
            return gx
        return self.window_derivative(x0) * self._trig(x0, y0, p) + self.window(x0) * gx

    def value_dy(self, x0, y0, p: int) -> np.ndarray:
        if abs(p) > self.band:
            return np.zeros(np.broadcast(np.asarray(x0), np.asarray(y0)).shape, dtype=complex)
        gy = self._trig(x0, y0, p, dy=1)
        if p == 0:
            return gy
        return self.window(x0) * gy

    def to_element(self) -> Element:
        """The closed-form element with analytic partials."""
        return Element.closed_form(
            self.params,
            self.trunc,
            self.band,
            self.value,
            dx=self.value_dx,
            dy=self.value_dy,
        )


def random_windowed(
    seed: int,
    trunc: Truncation,
    params: ModelParams,
    decay: float,
    band: Optional[int] = None,
    modes: Tuple[int, int] = DEFAULT_MODES,
    margin: float = 0.0,
    order: int = DEFAULT_ORDER,
) -> WindowedElement:
    """Windowed element with coefficients (N(0,1) + i N(0,1)) * exp(-decay (m^2 + n^2 + p^2))."""
    if not decay > 0:
        raise DomainError(f"decay must be positive, got {decay}")
    band = trunc.P if band is None else band
    if not 0 <= band <= trunc.P:
        raise DomainError(f"band must lie in [0, {trunc.P}], got {band}")
    Mx, My = modes
    rng = np.random.default_rng(seed)
    shape = (2 * band + 1, 2 * Mx + 1, 2 * My + 1)
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    p = np.arange(-band, band + 1)[:, None, None]
    m = np.arange(-Mx, Mx + 1)[None, :, None]
    n = np.arange(-My, My + 1)[None, None, :]
    coeffs = coeffs * np.exp(-decay * (m ** 2 + n ** 2 + p ** 2))
    return WindowedElement(params, trunc, coeffs, margin=margin, order=order)


def random_element(
    seed: int,
    trunc: Truncation,
    params: ModelParams,
    decay: float,
    band: Optional[int] = None,
    **kwargs,
) -> Element:
    """Deterministic pseudo-random closed-form element for a seed."""
    el = random_windowed(seed, trunc, params, decay, band=band, **kwargs).to_element()
    logger.debug(f"Random element seed={seed} decay={decay} band={el.band}")
    return el
