"""
The sup-sum norm sum_p sup_{x,y} |phi(x, y, p)|.

The twist phase is unimodular, so each sup is taken over the fundamental domain.
Grid maxima are certified from below; closed-form elements additionally get a
Newton polish of |phi|^2 started from the best local maxima of the grid.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .element import Element, Flavor


logger = logging.getLogger(__name__)

POLISH_STEPS = 6
POLISH_STENCIL = 1e-4
POLISH_CANDIDATES = 3


@dataclass
class NormReport:
    """Container for a sup-sum norm evaluation."""

    sup_sum: float
    per_p_sups: np.ndarray
    grid_argmax: List[Tuple[float, float, int]] = field(default_factory=list)

    @property
    def band(self) -> int:
        return (len(self.per_p_sups) - 1) // 2

    def sup(self, p: int) -> float:
        """sup |phi(., ., p)|; zero outside the band."""
        if abs(p) > self.band:
            return 0.0
        return float(self.per_p_sups[p + self.band])

    def tail(self, n: int) -> float:
        """sum over |p| >= n of the per-fiber sups."""
        p = np.arange(-self.band, self.band + 1)
        return float(np.sum(self.per_p_sups[np.abs(p) >= n]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sup_sum": self.sup_sum,
            "per_p_sups": {str(p): self.sup(p) for p in range(-self.band, self.band + 1)},
            "grid_argmax": [list(point) for point in self.grid_argmax],
        }


def _local_maxima(mod: np.ndarray) -> np.ndarray:
    """Mask of points not smaller than their 8 neighbours; |phi| is doubly periodic."""
    mask = np.ones(mod.shape, dtype=bool)
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            if sx or sy:
                mask &= mod >= np.roll(np.roll(mod, sx, axis=0), sy, axis=1)
    return mask


def _polish(el: Element, p: int, xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, ...]:
    """
    Newton ascent on g = |phi|^2 with a finite-difference gradient and Hessian.

    A step is taken only when it increases g, so the returned values are actual
    function values at least as large as the starting ones.
    """
    h = POLISH_STENCIL
    max_step = 1.0 / min(el.trunc.Nx, el.trunc.Ny)
    offsets = np.array([-h, 0.0, h])

    def g(x, y):
        return np.abs(el.evaluate(x, y, p)) ** 2

    values = g(xs, ys)
    for _ in range(POLISH_STEPS):
        ox = xs[None, None, :] + offsets[:, None, None]
        oy = ys[None, None, :] + offsets[None, :, None]
        G = g(*np.broadcast_arrays(ox, oy))
        gx = (G[2, 1] - G[0, 1]) / (2 * h)
        gy = (G[1, 2] - G[1, 0]) / (2 * h)
        gxx = (G[2, 1] - 2 * G[1, 1] + G[0, 1]) / h ** 2
        gyy = (G[1, 2] - 2 * G[1, 1] + G[1, 0]) / h ** 2
        gxy = (G[2, 2] - G[2, 0] - G[0, 2] + G[0, 0]) / (4 * h ** 2)
        det = gxx * gyy - gxy ** 2
        concave = (gxx < 0) & (det > 0)
        safe = np.where(concave, det, 1.0)
        step_x = np.where(concave, -(gyy * gx - gxy * gy) / safe, 0.0)
        step_y = np.where(concave, -(gxx * gy - gxy * gx) / safe, 0.0)
        length = np.hypot(step_x, step_y)
        scale = np.where(length > max_step, max_step / np.maximum(length, 1e-300), 1.0)
        nx, ny = xs + scale * step_x, ys + scale * step_y
        trial = g(nx, ny)
        accept = concave & (trial > values)
        if not np.any(accept):
            break
        xs = np.where(accept, nx, xs)
        ys = np.where(accept, ny, ys)
        values = np.where(accept, trial, values)
    return np.sqrt(values), xs, ys


def sup_sum_norm(
    a: Element, polish: Optional[bool] = None, candidates: int = POLISH_CANDIDATES
) -> NormReport:
    """
    Compute the sup-sum norm of an element.

    Args:
        a: Element to measure
        polish: refine grid maxima by Newton steps (default: closed-form elements only)
        candidates: number of local grid maxima polished per fiber

    Returns:
        NormReport with per-fiber sups indexed p + band
    """
    if polish is None:
        polish = a.flavor is Flavor.CLOSED_FORM
    X, Y = a.trunc.mesh()
    sups = np.zeros(2 * a.band + 1)
    argmax: List[Tuple[float, float, int]] = []

    for p in range(-a.band, a.band + 1):
        mod = np.abs(a.fiber(p))
        flat = int(np.argmax(mod))
        best = float(mod.flat[flat])
        point = (float(X.flat[flat]), float(Y.flat[flat]), p)

        if polish and best > 0:
            peaks = np.flatnonzero(_local_maxima(mod))
            peaks = peaks[np.argsort(mod.flat[peaks])[::-1][:candidates]]
            refined, xs, ys = _polish(a, p, X.flat[peaks], Y.flat[peaks])
            k = int(np.argmax(refined))
            if refined[k] > best:
                best = float(refined[k])
                point = (float(np.mod(xs[k], 1.0)), float(np.mod(ys[k], 1.0)), p)

        sups[p + a.band] = best
        argmax.append(point)
        logger.debug(f"fiber {p}: sup {best:.6g} at ({point[0]:.4f}, {point[1]:.4f})")

    return NormReport(sup_sum=float(np.sum(sups)), per_p_sups=sups, grid_argmax=argmax)
