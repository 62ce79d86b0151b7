"""
The regular representation as a field of banded matrices over base points.

At a base point (x, y) the operator pi(phi) acts on l^2 of the index p in [-Q, Q]
through the matrix

    M[p, r] = phi(x + hbar (p + r) mu, y + hbar (p + r) nu, p - r)

which has bandwidth equal to the band of phi. Vectors xi are grid arrays of
shape (2Q + 1, Nx, Ny) indexed [p + Q, ix, iy].
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from .element import Element, ModelParams, Truncation
from .errors import ConfigurationError, DomainError, NumericalConvergenceError
from .interpolation import unit_phase


logger = logging.getLogger(__name__)

DENSE_LIMIT = 128
POWER_TOL = 1e-10
POWER_MAX_ITER = 10000
REFINE_TOL = 1e-4
START_SHAPE = (8, 8)
CHUNK = 256


@dataclass
class FiberMatrix:
    """The matrix of pi(phi) at one base point."""

    base: Tuple[float, float]
    band_q: int
    entries: np.ndarray
    bandwidth: int

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.band_q, self.band_q + 1)

    def norm(self) -> float:
        return float(np.linalg.svd(self.entries, compute_uv=False)[0])

    def to_dict(self) -> Dict[str, Any]:
        """Row-major [re, im] pairs."""
        return {
            "base": list(self.base),
            "Q": self.band_q,
            "bandwidth": self.bandwidth,
            "entries": np.stack([self.entries.real, self.entries.imag], axis=-1).tolist(),
        }

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)
        logger.info(f"Wrote fiber matrix at {self.base} to {path}")
        return path


@dataclass
class CStarEstimate:
    """Lower-bound estimate of the operator norm of pi(phi)."""

    lower: float
    value: float
    base_shape: Tuple[int, int]
    method: str
    argmax: Tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": self.lower,
            "value": self.value,
            "base_shape": list(self.base_shape),
            "method": self.method,
            "argmax": list(self.argmax),
        }


def fiber_matrices(a: Element, xs: np.ndarray, ys: np.ndarray, q: int) -> np.ndarray:
    """
    Stack of fiber matrices at base points (xs[b], ys[b]).

    Entries (p, r) and (r, p) share the same shifted point, so conjugate pairs
    are computed from identical coordinates.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    params = a.params
    hm = params.hbar * params.mu
    hn = params.hbar * params.nu
    n = 2 * q + 1
    idx = np.arange(-q, q + 1)
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    diff = idx[rows] - idx[cols]
    total = idx[rows] + idx[cols]
    out = np.zeros((xs.size, n, n), dtype=complex)
    for d in range(-a.band, a.band + 1):
        mask = diff == d
        if not np.any(mask):
            continue
        s = total[mask]
        X = xs[:, None] + hm * s[None, :]
        Y = ys[:, None] + hn * s[None, :]
        out[:, rows[mask], cols[mask]] = a.evaluate(X, Y, d)
    return out


def fiber_matrix(a: Element, x: float, y: float, q: Optional[int] = None) -> FiberMatrix:
    """The fiber matrix of a at base point (x, y), band Q (default: the truncation's)."""
    if not (np.isfinite(x) and np.isfinite(y)):
        raise DomainError(f"Base point must be finite, got ({x}, {y})")
    q = a.trunc.Q if q is None else q
    entries = fiber_matrices(a, np.array([x]), np.array([y]), q)[0]
    return FiberMatrix(base=(float(x), float(y)), band_q=q, entries=entries, bandwidth=a.band)


def twist_unitary(params: ModelParams, y: float, q: int) -> np.ndarray:
    """Diagonal D with M(x + 1, y) = D M(x, y) D^H."""
    p = np.arange(-q, q + 1)
    return unit_phase(params.c * (p * y + params.hbar * params.nu * p ** 2))


def _check_vector(a: Element, xi: np.ndarray) -> int:
    xi = np.asarray(xi)
    if xi.ndim != 3 or xi.shape[0] % 2 == 0:
        raise ConfigurationError(f"Vector must have shape (2Q+1, Nx, Ny), got {xi.shape}")
    if xi.shape[1:] != (a.trunc.Nx, a.trunc.Ny):
        raise ConfigurationError(
            f"Vector grid {xi.shape[1:]} does not match element grid {(a.trunc.Nx, a.trunc.Ny)}"
        )
    return (xi.shape[0] - 1) // 2


def apply(a: Element, xi: np.ndarray) -> np.ndarray:
    """
    Apply pi(a) at every grid base point.

    (pi(a) xi)[p](x, y) = sum_r a(x + hbar(p+r)mu, y + hbar(p+r)nu, p-r) xi[r](x, y)
    """
    q = _check_vector(a, xi)
    xi = np.asarray(xi, dtype=complex)
    hm = a.params.hbar * a.params.mu
    hn = a.params.hbar * a.params.nu
    out = np.zeros(xi.shape, dtype=complex)
    for p in range(-q, q + 1):
        for r in range(max(-q, p - a.band), min(q, p + a.band) + 1):
            s = p + r
            out[p + q] += a.shifted_fiber(p - r, hm * s, hn * s) * xi[r + q]
    return out


def batched_power_iteration(
    matrices: np.ndarray,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
    seed: int = 0,
) -> np.ndarray:
    """
    Largest singular value of each matrix by power iteration on M^H M.

    Args:
        matrices: (B, n, n) stack
        tol: relative change of the estimate at which a matrix counts as converged
        max_iter: iteration cap
        seed: seed of the start vectors

    Returns:
        (B,) array of singular value estimates (each a lower bound)
    """
    batch, n, _ = matrices.shape
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((batch, n)) + 1j * rng.standard_normal((batch, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    adjoint = np.conj(np.swapaxes(matrices, 1, 2))
    sigma = np.zeros(batch)
    for iteration in range(1, max_iter + 1):
        w = np.einsum("bij,bj->bi", matrices, v)
        new_sigma = np.linalg.norm(w, axis=1)
        z = np.einsum("bij,bj->bi", adjoint, w)
        length = np.linalg.norm(z, axis=1)
        nonzero = length > 0
        v[nonzero] = z[nonzero] / length[nonzero, None]
        change = np.abs(new_sigma - sigma)
        sigma = new_sigma
        if iteration > 1 and np.all(change <= tol * np.maximum(sigma, 1e-300)):
            logger.debug(f"Power iteration converged after {iteration} iterations")
            return sigma
    raise NumericalConvergenceError("Power iteration did not converge", iterations=max_iter)


def _max_fiber_norm(
    a: Element, nx: int, ny: int, q: int, method: str, seed: int
) -> Tuple[float, Tuple[float, float]]:
    gx, gy = np.meshgrid(np.arange(nx) / nx, np.arange(ny) / ny, indexing="ij")
    xs, ys = gx.ravel(), gy.ravel()
    best, where = 0.0, (0.0, 0.0)
    for start in range(0, xs.size, CHUNK):
        stop = min(start + CHUNK, xs.size)
        mats = fiber_matrices(a, xs[start:stop], ys[start:stop], q)
        if method == "dense":
            norms = np.linalg.svd(mats, compute_uv=False)[:, 0]
        else:
            norms = batched_power_iteration(mats, seed=seed + start)
        k = int(np.argmax(norms))
        if norms[k] > best:
            best, where = float(norms[k]), (float(xs[start + k]), float(ys[start + k]))
    return best, where


def cstar_norm_estimate(
    a: Element,
    q: Optional[int] = None,
    base_shape: Optional[Tuple[int, int]] = None,
    method: str = "auto",
    refine_tol: float = REFINE_TOL,
    seed: int = 0,
) -> CStarEstimate:
    """
    Max over base points of the fiber-matrix spectral norm.

    The base grid starts at 8x8 and doubles, capped at the element grid, until the
    change drops below refine_tol or the element grid is reached. The running
    maximum over all grids visited is kept, so the estimate never decreases even
    when a capped step is not nested in the previous grid. Every fiber norm is a
    lower bound for the operator norm.
    """
    q = a.trunc.Q if q is None else q
    n = 2 * q + 1
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "power"
    if method not in ("dense", "power"):
        raise ConfigurationError(f"Unknown norm method: {method}")

    limit = (a.trunc.Nx, a.trunc.Ny)
    if base_shape is not None:
        shape, refine = base_shape, False
    else:
        shape, refine = (min(START_SHAPE[0], limit[0]), min(START_SHAPE[1], limit[1])), True

    value, where = _max_fiber_norm(a, shape[0], shape[1], q, method, seed)
    while refine and (shape[0] < limit[0] or shape[1] < limit[1]):
        nxt = (min(2 * shape[0], limit[0]), min(2 * shape[1], limit[1]))
        new_value, new_where = _max_fiber_norm(a, nxt[0], nxt[1], q, method, seed)
        change = new_value - value
        shape = nxt
        if new_value > value:
            value, where = new_value, new_where
        logger.debug(f"C*-norm estimate {value:.10g} on {shape[0]}x{shape[1]} base points")
        if abs(change) < refine_tol:
            break
    return CStarEstimate(lower=value, value=value, base_shape=shape, method=method, argmax=where)


def vector_state(xi: np.ndarray, params: ModelParams, trunc: Truncation):
    """
    Vector state a -> <pi(a) xi, xi> with cell weight 1/(Nx Ny); xi is normalized.
    """
    from .states import State, StateKind

    xi = np.array(xi, dtype=complex)
    if xi.ndim != 3 or xi.shape[0] % 2 == 0 or xi.shape[1:] != (trunc.Nx, trunc.Ny):
        raise ConfigurationError(f"Vector shape {xi.shape} does not fit {trunc.Nx}x{trunc.Ny}")
    if not np.all(np.isfinite(xi)):
        raise DomainError("Vector contains NaN or Inf")
    norm = np.sqrt(np.sum(np.abs(xi) ** 2) * trunc.cell_weight)
    if norm == 0:
        raise DomainError("Cannot build a vector state from the zero vector")
    xi = xi / norm
    xi.setflags(write=False)
    return State(kind=StateKind.VECTOR, params=params, trunc=trunc, vector=xi)
