"""
Elements of the twisted function algebra at finite truncation.

An element is a function phi(x, y, p) on R x T x Z with the twist
phi(x + k, y, p) = e(c*k*p*y) * phi(x, y, p). Only the fundamental domain
[0,1) x [0,1) is stored (grid flavour) or computed (closed-form flavour);
everything else is reached through the fold in :meth:`Element.evaluate`.
"""

import json
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CapabilityError, ConfigurationError, DomainError
from .interpolation import interpolate_fiber, shift_fiber, unit_phase


logger = logging.getLogger(__name__)

# Threshold for mu^2 + nu^2 != 0.
PARAMS_EPS = 1e-12

MIN_GRID = 8

FiberFunc = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """Deformation data (c, hbar, mu, nu)."""

    c: int = 1
    hbar: float = 0.3
    mu: float = 0.7
    nu: float = 0.5

    def __post_init__(self):
        if isinstance(self.c, bool) or int(self.c) != self.c or self.c < 1:
            raise DomainError(f"c must be a positive integer, got {self.c!r}")
        object.__setattr__(self, "c", int(self.c))
        for name in ("hbar", "mu", "nu"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.mu ** 2 + self.nu ** 2 <= PARAMS_EPS:
            raise DomainError(
                f"mu^2 + nu^2 must exceed {PARAMS_EPS}, got mu={self.mu}, nu={self.nu}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {"c": self.c, "hbar": self.hbar, "mu": self.mu, "nu": self.nu}


@dataclass(frozen=True)
class Truncation:
    """
    Finite truncation of the model.

    P bounds the element band, Nx x Ny is the grid on the fundamental domain and
    Q bounds the Hilbert-space index of the representation.
    """

    P: int = 6
    Nx: int = 48
    Ny: int = 48
    Q: int = 24

    def __post_init__(self):
        for name in ("P", "Nx", "Ny", "Q"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise DomainError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.P < 0:
            raise DomainError(f"P must be nonnegative, got {self.P}")
        if self.Q < 1:
            raise DomainError(f"Q must be positive, got {self.Q}")
        if self.Q < 2 * self.P:
            raise DomainError(f"Q must be at least 2P (Q={self.Q}, P={self.P})")
        if self.Nx < MIN_GRID or self.Ny < MIN_GRID:
            raise DomainError(f"Nx and Ny must be at least {MIN_GRID}, got {self.Nx}x{self.Ny}")

    @property
    def cell_weight(self) -> float:
        return 1.0 / (self.Nx * self.Ny)

    def x_nodes(self) -> np.ndarray:
        return np.arange(self.Nx) / self.Nx

    def y_nodes(self) -> np.ndarray:
        return np.arange(self.Ny) / self.Ny

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (Nx, Ny) with X[ix, iy] = ix/Nx, Y[ix, iy] = iy/Ny."""
        return np.meshgrid(self.x_nodes(), self.y_nodes(), indexing="ij")

    def with_band(self, P: int) -> "Truncation":
        """Same grid, band P (Q raised if needed)."""
        return replace(self, P=P, Q=max(self.Q, 2 * P))

    def to_dict(self) -> Dict[str, int]:
        return {"P": self.P, "Nx": self.Nx, "Ny": self.Ny, "Q": self.Q}


class Flavor(Enum):
    GRID = "grid"
    CLOSED_FORM = "closed_form"


def fold_point(x, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Split (x, y) into a fundamental-domain point and the integer period count.

    Returns:
        (x0, y0, k) with x = x0 + k, x0 in [0, 1), y0 = y mod 1 in [0, 1)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("Evaluation points must be finite")
    k = np.floor(x)
    x0 = x - k
    # x slightly below an integer can round up to x0 == 1.0
    wrap = x0 >= 1.0
    x0 = np.where(wrap, x0 - 1.0, x0)
    k = np.where(wrap, k + 1.0, k)
    y0 = np.mod(y, 1.0)
    y0 = np.where(y0 >= 1.0, 0.0, y0)
    return x0, y0, k.astype(np.int64)


@dataclass(frozen=True, eq=False)
class Element:
    """
    Truncated element of the algebra.

    Exactly one of ``data`` (grid flavour, shape (2P+1, Nx, Ny) indexed
    [p + P, ix, iy]) and ``func`` (closed-form flavour, called as
    func(x0, y0, p) on fundamental-domain arrays for |p| <= band) is set.
    ``dx`` and ``dy`` are optional analytic partials of ``func``.
    """

    params: ModelParams
    trunc: Truncation
    band: int
    data: Optional[np.ndarray] = None
    func: Optional[FiberFunc] = None
    dx: Optional[FiberFunc] = None
    dy: Optional[FiberFunc] = None
    hermitian: bool = False
    clamped: bool = False

    def __post_init__(self):
        if (self.data is None) == (self.func is None):
            raise ConfigurationError("An element needs exactly one of grid data or a callback")
        if self.band < 0 or self.band > self.trunc.P:
            raise ConfigurationError(
                f"Element band {self.band} outside truncation band {self.trunc.P}"
            )
        if self.data is not None:
            data = np.array(self.data, dtype=complex)
            expected = (2 * self.trunc.P + 1, self.trunc.Nx, self.trunc.Ny)
            if data.shape != expected:
                raise ConfigurationError(f"Grid data shape {data.shape}, expected {expected}")
            if not np.all(np.isfinite(data)):
                raise DomainError("Grid data contains NaN or Inf")
            data.setflags(write=False)
            object.__setattr__(self, "data", data)

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_grid(
        cls,
        params: ModelParams,
        trunc: Truncation,
        data: np.ndarray,
        hermitian: bool = False,
        clamped: bool = False,
    ) -> "Element":
        """Grid element; the band is the largest |p| with a nonzero fiber."""
        data = np.asarray(data, dtype=complex)
        P = trunc.P
        band = 0
        if data.ndim == 3 and data.shape[0] == 2 * P + 1:
            for p in range(P, 0, -1):
                if np.any(data[P + p] != 0) or np.any(data[P - p] != 0):
                    band = p
                    break
        return cls(params, trunc, band, data=data, hermitian=hermitian, clamped=clamped)

    @classmethod
    def closed_form(
        cls,
        params: ModelParams,
        trunc: Truncation,
        band: int,
        func: FiberFunc,
        dx: Optional[FiberFunc] = None,
        dy: Optional[FiberFunc] = None,
        hermitian: bool = False,
        clamped: bool = False,
    ) -> "Element":
        return cls(
            params, trunc, band, func=func, dx=dx, dy=dy, hermitian=hermitian, clamped=clamped
        )

    @property
    def flavor(self) -> Flavor:
        return Flavor.GRID if self.data is not None else Flavor.CLOSED_FORM

    @property
    def has_partials(self) -> bool:
        return self.dx is not None and self.dy is not None

    # -- evaluation -----------------------------------------------------------

    def _call(self, fn: FiberFunc, x0: np.ndarray, y0: np.ndarray, p: int) -> np.ndarray:
        shape = np.broadcast(x0, y0).shape
        return np.broadcast_to(np.asarray(fn(x0, y0, p), dtype=complex), shape)

    def fundamental(self, x0, y0, p: int) -> np.ndarray:
        """Values on the fundamental domain; zero outside the band."""
        x0 = np.asarray(x0, dtype=float)
        y0 = np.asarray(y0, dtype=float)
        if abs(p) > self.band:
            return np.zeros(np.broadcast(x0, y0).shape, dtype=complex)
        if self.data is not None:
            return interpolate_fiber(self.data[p + self.trunc.P], self.params.c * p, x0, y0)
        return self._call(self.func, x0, y0, p)

    def evaluate(self, x, y, p: int) -> np.ndarray:
        """Global value phi(x, y, p) via the twist fold."""
        x0, y0, k = fold_point(x, y)
        values = self.fundamental(x0, y0, p)
        if p == 0 or abs(p) > self.band:
            return values
        return unit_phase(self.params.c * p * k * y0) * values

    def partial_x(self, x, y, p: int) -> np.ndarray:
        """d/dx of the twisted extension."""
        if self.dx is None:
            raise CapabilityError("Element has no analytic x-partial")
        x0, y0, k = fold_point(x, y)
        if abs(p) > self.band:
            return np.zeros(np.broadcast(x0, y0).shape, dtype=complex)
        values = self._call(self.dx, x0, y0, p)
        if p == 0:
            return values
        return unit_phase(self.params.c * p * k * y0) * values

    def partial_y(self, x, y, p: int) -> np.ndarray:
        """d/dy of the twisted extension; the phase contributes 2*pi*i*c*k*p*phi."""
        if self.dy is None:
            raise CapabilityError("Element has no analytic y-partial")
        x0, y0, k = fold_point(x, y)
        if abs(p) > self.band:
            return np.zeros(np.broadcast(x0, y0).shape, dtype=complex)
        values = self._call(self.dy, x0, y0, p)
        if p == 0:
            return values
        twist = self.params.c * p * k
        values = values + 2j * np.pi * twist * self._call(self.func, x0, y0, p)
        return unit_phase(twist * y0) * values

    def fiber(self, p: int) -> np.ndarray:
        """The (Nx, Ny) samples of fiber p on the fundamental grid."""
        if abs(p) > self.trunc.P:
            raise ConfigurationError(f"Fiber {p} outside truncation band {self.trunc.P}")
        if self.data is not None:
            return self.data[p + self.trunc.P]
        X, Y = self.trunc.mesh()
        return self.fundamental(X, Y, p)

    def shifted_fiber(self, p: int, sx: float, sy: float) -> np.ndarray:
        """Samples of fiber p at (ix/Nx + sx, iy/Ny + sy), twist included."""
        if abs(p) > self.band:
            return np.zeros((self.trunc.Nx, self.trunc.Ny), dtype=complex)
        if self.data is not None:
            return shift_fiber(self.data[p + self.trunc.P], self.params.c * p, sx, sy)
        X, Y = self.trunc.mesh()
        return self.evaluate(X + sx, Y + sy, p)

    def samples(self) -> np.ndarray:
        """All fibers as a (2P+1, Nx, Ny) array."""
        if self.data is not None:
            return np.array(self.data)
        P = self.trunc.P
        out = np.zeros((2 * P + 1, self.trunc.Nx, self.trunc.Ny), dtype=complex)
        X, Y = self.trunc.mesh()
        for p in range(-self.band, self.band + 1):
            out[p + P] = self.fundamental(X, Y, p)
        return out

    def is_selfadjoint(self) -> bool:
        """True when phi(x, y, -p) = conj(phi(x, y, p)) holds exactly."""
        if self.hermitian:
            return True
        if self.data is not None:
            return bool(np.array_equal(self.data, np.conj(self.data[::-1])))
        return False

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "Element") -> "Element":
        return combine([1.0, 1.0], [self, other])

    def __sub__(self, other: "Element") -> "Element":
        return combine([1.0, -1.0], [self, other])

    def __neg__(self) -> "Element":
        return combine([-1.0], [self])

    def __mul__(self, scalar: complex) -> "Element":
        if isinstance(scalar, Element):
            raise TypeError("Use algebra.star for the product of two elements")
        return combine([scalar], [self])

    __rmul__ = __mul__


def fold_evaluate(el: Element, x, y, p: int):
    """
    Evaluate an element anywhere on R x T x Z.

    Scalar input gives a Python complex, array input a complex array.
    """
    values = el.evaluate(x, y, p)
    if np.ndim(values) == 0:
        return complex(values)
    return values


def check_compatible(a: Element, b: Element) -> None:
    """Elements combine only with equal params and equal grids."""
    if a.params != b.params:
        raise ConfigurationError(f"Parameter mismatch: {a.params} vs {b.params}")
    if (a.trunc.Nx, a.trunc.Ny) != (b.trunc.Nx, b.trunc.Ny):
        raise ConfigurationError(
            f"Grid mismatch: {a.trunc.Nx}x{a.trunc.Ny} vs {b.trunc.Nx}x{b.trunc.Ny}"
        )


def joint_truncation(elements: Sequence[Element]) -> Truncation:
    """The widest truncation among compatible elements."""
    return max((el.trunc for el in elements), key=lambda t: (t.P, t.Q))


def identity(params: ModelParams, trunc: Truncation) -> Element:
    """The unit I(x, y, p) = delta_{p0}."""

    def one(x0, y0, p):
        return np.ones(np.broadcast(x0, y0).shape, dtype=complex)

    def nothing(x0, y0, p):
        return np.zeros(np.broadcast(x0, y0).shape, dtype=complex)

    return Element.closed_form(params, trunc, 0, one, dx=nothing, dy=nothing, hermitian=True)


def zeros(params: ModelParams, trunc: Truncation) -> Element:
    """The zero element."""

    def nothing(x0, y0, p):
        return np.zeros(np.broadcast(x0, y0).shape, dtype=complex)

    return Element.closed_form(params, trunc, 0, nothing, dx=nothing, dy=nothing, hermitian=True)


def combine(coeffs: Sequence[complex], elements: Sequence[Element]) -> Element:
    """
    Linear combination sum_i coeffs[i] * elements[i].

    Closed-form inputs give a closed-form result (with partials when every input
    has them); any grid input makes the result a grid element.
    """
    if len(coeffs) != len(elements) or not elements:
        raise ConfigurationError("combine needs one coefficient per element")
    for other in elements[1:]:
        check_compatible(elements[0], other)
    trunc = joint_truncation(elements)
    params = elements[0].params
    band = max(el.band for el in elements)
    coeffs = [complex(c) for c in coeffs]
    hermitian = all(el.hermitian for el in elements) and all(c.imag == 0 for c in coeffs)
    clamped = any(el.clamped for el in elements)

    if any(el.data is not None for el in elements):
        data = np.zeros((2 * trunc.P + 1, trunc.Nx, trunc.Ny), dtype=complex)
        for coeff, el in zip(coeffs, elements):
            for p in range(-el.band, el.band + 1):
                data[p + trunc.P] += coeff * el.fiber(p)
        return Element.from_grid(params, trunc, data, hermitian=hermitian, clamped=clamped)

    def linear(attr: str) -> FiberFunc:
        def fn(x0, y0, p):
            total = np.zeros(np.broadcast(x0, y0).shape, dtype=complex)
            for coeff, el in zip(coeffs, elements):
                if abs(p) <= el.band:
                    total = total + coeff * el._call(getattr(el, attr), x0, y0, p)
            return total

        return fn

    with_partials = all(el.has_partials for el in elements)
    return Element.closed_form(
        params,
        trunc,
        band,
        linear("func"),
        dx=linear("dx") if with_partials else None,
        dy=linear("dy") if with_partials else None,
        hermitian=hermitian,
        clamped=clamped,
    )


def sample(el: Element, trunc: Optional[Truncation] = None) -> Element:
    """
    Grid element with values el(ix/Nx, iy/Ny, p).

    Fibers beyond the target band are dropped and flagged as clamped.
    """
    trunc = trunc or el.trunc
    band = min(el.band, trunc.P)
    clamped = el.clamped or el.band > trunc.P
    if el.band > trunc.P:
        logger.warning(f"Sampling drops fibers {trunc.P + 1}..{el.band}")
    X, Y = trunc.mesh()
    data = np.zeros((2 * trunc.P + 1, trunc.Nx, trunc.Ny), dtype=complex)
    for p in range(-band, band + 1):
        data[p + trunc.P] = el.fundamental(X, Y, p)
    return Element.from_grid(el.params, trunc, data, hermitian=el.hermitian, clamped=clamped)


def selfadjoint_part(el: Element) -> Element:
    """(el + el*) / 2; the result is exactly self-adjoint."""
    if el.hermitian:
        return el
    if el.data is not None:
        data = (el.data + np.conj(el.data[::-1])) / 2
        return Element.from_grid(el.params, el.trunc, data, hermitian=True, clamped=el.clamped)

    def symmetrize(fn: FiberFunc) -> FiberFunc:
        def out(x0, y0, p):
            return (el._call(fn, x0, y0, p) + np.conj(el._call(fn, x0, y0, -p))) / 2

        return out

    return Element.closed_form(
        el.params,
        el.trunc,
        el.band,
        symmetrize(el.func),
        dx=symmetrize(el.dx) if el.dx is not None else None,
        dy=symmetrize(el.dy) if el.dy is not None else None,
        hermitian=True,
        clamped=el.clamped,
    )


def truncate_band(el: Element, N: int) -> Element:
    """Keep only the fibers |p| <= N."""
    if N < 0:
        raise DomainError(f"Band cut must be nonnegative, got {N}")
    if N >= el.band:
        return el
    if el.data is not None:
        data = np.array(el.data)
        P = el.trunc.P
        data[: P - N] = 0
        data[P + N + 1:] = 0
        return Element.from_grid(el.params, el.trunc, data, hermitian=el.hermitian)
    return replace(el, band=N, clamped=False)


# -- serialization ------------------------------------------------------------


def element_to_dict(el: Element) -> Dict[str, Any]:
    """JSON-ready dict; closed-form elements are sampled first."""
    grid = el if el.data is not None else sample(el)
    payload: Dict[str, Any] = dict(grid.params.to_dict())
    payload.update(grid.trunc.to_dict())
    payload["data"] = np.stack([grid.data.real, grid.data.imag], axis=-1).tolist()
    return payload


def element_from_dict(payload: Dict[str, Any]) -> Element:
    """Inverse of :func:`element_to_dict`; Q defaults to max(2P, 1)."""
    required = ("c", "hbar", "mu", "nu", "P", "Nx", "Ny", "data")
    missing = [key for key in required if key not in payload]
    if missing:
        raise ConfigurationError(f"Element file lacks keys: {', '.join(missing)}")
    try:
        params = ModelParams(payload["c"], payload["hbar"], payload["mu"], payload["nu"])
        P = int(payload["P"])
        trunc = Truncation(P, payload["Nx"], payload["Ny"], payload.get("Q", max(2 * P, 1)))
        raw = np.asarray(payload["data"], dtype=float)
    except (TypeError, ValueError) as e:
        if isinstance(e, DomainError):
            raise
        raise ConfigurationError(f"Malformed element file: {e}") from e
    expected = (2 * trunc.P + 1, trunc.Nx, trunc.Ny, 2)
    if raw.shape != expected:
        raise ConfigurationError(f"Element data shape {raw.shape}, expected {expected}")
    data = raw[..., 0] + 1j * raw[..., 1]
    return Element.from_grid(params, trunc, data)


def save_element(el: Element, path: Union[str, Path]) -> Path:
    """Write an element as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(element_to_dict(el), f)
    logger.info(f"Wrote element to {path}")
    return path


def load_element(path: Union[str, Path]) -> Element:
    """Read an element written by :func:`save_element`."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Element file not found: {path}")
    try:
        with open(path) as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Element file {path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigurationError(f"Element file {path} must hold a JSON object")
    return element_from_dict(payload)
