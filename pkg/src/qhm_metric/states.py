"""
States: the trace and vector states of the regular representation.

Besides evaluation, every state has a representer: the grid array R of shape
(2B + 1, Nx, Ny) with mu(phi) = sum_p vdot(R[p + B], phi_p) for grid elements of
band B. The Lip-ball program uses it as the objective gradient.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .algebra import trace
from .element import Element, ModelParams, Truncation, selfadjoint_part
from .errors import ConfigurationError, DomainError
from .interpolation import shift_fiber_adjoint
from .representation import apply, vector_state


logger = logging.getLogger(__name__)

DEFAULT_WIDTH = 0.05


class StateKind(Enum):
    TRACE = "trace"
    VECTOR = "vector"


@dataclass(frozen=True, eq=False)
class State:
    """A trace state or a normalized vector state."""

    kind: StateKind
    params: Optional[ModelParams] = None
    trunc: Optional[Truncation] = None
    vector: Optional[np.ndarray] = None
    label: str = ""

    @property
    def band_q(self) -> int:
        if self.vector is None:
            return 0
        return (self.vector.shape[0] - 1) // 2

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind.value}
        if self.label:
            out["label"] = self.label
        return out


def trace_state(params: Optional[ModelParams] = None, trunc: Optional[Truncation] = None) -> State:
    return State(kind=StateKind.TRACE, params=params, trunc=trunc, label="trace")


def _check_state(s: State, a: Element) -> None:
    if s.kind is StateKind.TRACE:
        return
    if s.params != a.params:
        raise ConfigurationError(f"State params {s.params} do not match element {a.params}")
    if (s.trunc.Nx, s.trunc.Ny) != (a.trunc.Nx, a.trunc.Ny):
        raise ConfigurationError("State grid does not match element grid")


def expectation(s: State, a: Element) -> complex:
    """Complex value of the state on any element."""
    _check_state(s, a)
    if s.kind is StateKind.TRACE:
        return trace(a)
    xi = s.vector
    return complex(np.vdot(xi, apply(a, xi)) * s.trunc.cell_weight)


def state_eval(s: State, a: Element) -> float:
    """Value of a state on a self-adjoint element (the self-adjoint part is taken otherwise)."""
    if not a.is_selfadjoint():
        logger.warning("State evaluated on a non self-adjoint element; using its self-adjoint part")
        a = selfadjoint_part(a)
    return expectation(s, a).real


def localized_state(
    params: ModelParams,
    trunc: Truncation,
    x0: float,
    y0: float,
    width: float = DEFAULT_WIDTH,
    p: int = 0,
) -> State:
    """Vector state of a periodic Gaussian bump at (x0, y0) in fiber p."""
    if not width > 0:
        raise DomainError(f"Width must be positive, got {width}")
    q = trunc.Q
    if abs(p) > q:
        raise DomainError(f"Fiber {p} outside the Hilbert band {q}")
    X, Y = trunc.mesh()
    dx = np.mod(X - x0 + 0.5, 1.0) - 0.5
    dy = np.mod(Y - y0 + 0.5, 1.0) - 0.5
    xi = np.zeros((2 * q + 1, trunc.Nx, trunc.Ny), dtype=complex)
    xi[p + q] = np.exp(-(dx ** 2 + dy ** 2) / (2 * width ** 2))
    state = vector_state(xi, params, trunc)
    return State(state.kind, params, trunc, state.vector, label=f"localized({x0}, {y0})")


def random_vector_state(
    seed: int,
    params: ModelParams,
    trunc: Truncation,
    decay: float = 0.5,
    band: Optional[int] = None,
) -> State:
    """Vector state with random complex entries damped by exp(-decay p^2)."""
    q = trunc.Q
    band = min(q, trunc.P) if band is None else band
    rng = np.random.default_rng(seed)
    xi = np.zeros((2 * q + 1, trunc.Nx, trunc.Ny), dtype=complex)
    shape = (2 * band + 1, trunc.Nx, trunc.Ny)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    p = np.arange(-band, band + 1)[:, None, None]
    xi[q - band: q + band + 1] = noise * np.exp(-decay * p ** 2)
    state = vector_state(xi, params, trunc)
    return State(state.kind, params, trunc, state.vector, label=f"random({seed})")


def representer(s: State, params: ModelParams, trunc: Truncation, band: int) -> np.ndarray:
    """
    Grid array R with s(phi) = sum_p vdot(R[p + band], phi_p) for grid elements phi.

    For a vector state R collects the adjoint resamplings of w * xi_p * conj(xi_r)
    over all index pairs (p, r) with |p - r| <= band.
    """
    R = np.zeros((2 * band + 1, trunc.Nx, trunc.Ny), dtype=complex)
    if s.kind is StateKind.TRACE:
        R[band] = trunc.cell_weight
        return R
    if s.params != params or (s.trunc.Nx, s.trunc.Ny) != (trunc.Nx, trunc.Ny):
        raise ConfigurationError("State does not live on the requested grid")
    xi = s.vector
    q = s.band_q
    w = trunc.cell_weight
    hm = params.hbar * params.mu
    hn = params.hbar * params.nu
    for p in range(-q, q + 1):
        if not np.any(xi[p + q]):
            continue
        for r in range(max(-q, p - band), min(q, p + band) + 1):
            if not np.any(xi[r + q]):
                continue
            d, total = p - r, p + r
            weight = w * xi[p + q] * np.conj(xi[r + q])
            R[d + band] += shift_fiber_adjoint(weight, params.c * d, hm * total, hn * total)
    return R


# -- files --------------------------------------------------------------------


def state_to_dict(s: State) -> Dict[str, Any]:
    if s.kind is StateKind.TRACE:
        return {"kind": "trace"}
    payload: Dict[str, Any] = {"kind": "vector", "label": s.label}
    payload.update(s.params.to_dict())
    payload.update(s.trunc.to_dict())
    payload["xi"] = np.stack([s.vector.real, s.vector.imag], axis=-1).tolist()
    return payload


def state_from_dict(payload: Dict[str, Any], params: ModelParams, trunc: Truncation) -> State:
    """
    Build a state from its file form.

    Kinds: "trace", "vector" (explicit xi), "localized" (x, y, width, p) and
    "random" (seed, decay). The last two are built on the given params/truncation.
    """
    kind = payload.get("kind")
    try:
        if kind == "trace":
            return trace_state(params, trunc)
        if kind == "localized":
            return localized_state(
                params,
                trunc,
                float(payload["x"]),
                float(payload["y"]),
                width=float(payload.get("width", DEFAULT_WIDTH)),
                p=int(payload.get("p", 0)),
            )
        if kind == "random":
            return random_vector_state(
                int(payload["seed"]), params, trunc, decay=float(payload.get("decay", 0.5))
            )
        if kind == "vector":
            own_params = ModelParams(payload["c"], payload["hbar"], payload["mu"], payload["nu"])
            own_trunc = Truncation(payload["P"], payload["Nx"], payload["Ny"], payload["Q"])
            raw = np.asarray(payload["xi"], dtype=float)
            state = vector_state(raw[..., 0] + 1j * raw[..., 1], own_params, own_trunc)
            return State(state.kind, own_params, own_trunc, state.vector, payload.get("label", ""))
    except KeyError as e:
        raise ConfigurationError(f"State file lacks key {e}") from e
    except DomainError:
        raise
    except (TypeError, ValueError, IndexError) as e:
        raise ConfigurationError(f"Malformed state file: {e}") from e
    raise ConfigurationError(f"Unknown state kind: {kind!r}")


def load_state(path: Union[str, Path], params: ModelParams, trunc: Truncation) -> State:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"State file not found: {path}")
    try:
        with open(path) as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"State file {path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigurationError(f"State file {path} must hold a JSON object")
    state = state_from_dict(payload, params, trunc)
    if not state.label:
        state = State(state.kind, state.params, state.trunc, state.vector, label=path.stem)
    return state
