"""
Brute-force oracles for checking the main code paths.

Everything here is written from the defining formulas with scalar loops and its
own twist fold (math.floor / cmath.exp, no reduced phases, no shared helpers).
Only the raw fundamental-domain callbacks of closed-form elements are used.
"""

import cmath
import math
from typing import Iterable, Sequence, Tuple

import numpy as np

from .element import Element
from .errors import PreconditionError


MAX_ORACLE_Q = 32


def _require_closed_form(*elements: Element) -> None:
    for el in elements:
        if el.func is None:
            raise PreconditionError("Oracles take closed-form elements only")


def twisted_value(el: Element, x: float, y: float, p: int) -> complex:
    """phi(x, y, p) from the fundamental-domain callback and the twist rule."""
    if abs(p) > el.band:
        return 0j
    k = math.floor(x)
    xf = x - k
    if xf >= 1.0:
        xf -= 1.0
        k += 1
    yf = y - math.floor(y)
    if yf >= 1.0:
        yf = 0.0
    raw = complex(np.asarray(el.func(np.array(xf), np.array(yf), p)).item())
    return cmath.exp(2j * math.pi * el.params.c * k * p * yf) * raw


def brute_star(a: Element, b: Element, x: float, y: float, p: int) -> complex:
    """The star product at one point as a literal loop over q."""
    _require_closed_form(a, b)
    hbar, mu, nu = a.params.hbar, a.params.mu, a.params.nu
    total = 0j
    for q in range(-a.band, a.band + 1):
        if abs(p - q) > b.band:
            continue
        left = twisted_value(a, x - hbar * (q - p) * mu, y - hbar * (q - p) * nu, q)
        right = twisted_value(b, x - hbar * q * mu, y - hbar * q * nu, p - q)
        total += left * right
    return total


def dense_operator_oracle(
    a: Element, small_q: int, base_points: Iterable[Tuple[float, float]]
) -> np.ndarray:
    """
    Dense matrices of pi(a) at the given base points, indexed by (p, p - q):

        M[p, p - q] = a(x - hbar (q - 2p) mu, y - hbar (q - 2p) nu, q)

    for |p|, |p - q| <= small_q.
    """
    _require_closed_form(a)
    if small_q > MAX_ORACLE_Q:
        raise PreconditionError(f"Oracle band {small_q} exceeds {MAX_ORACLE_Q}")
    hbar, mu, nu = a.params.hbar, a.params.mu, a.params.nu
    n = 2 * small_q + 1
    points = list(base_points)
    out = np.zeros((len(points), n, n), dtype=complex)
    for b_index, (x, y) in enumerate(points):
        for p in range(-small_q, small_q + 1):
            for q in range(-a.band, a.band + 1):
                col = p - q
                if abs(col) > small_q:
                    continue
                shift = q - 2 * p
                out[b_index, p + small_q, col + small_q] = twisted_value(
                    a, x - hbar * shift * mu, y - hbar * shift * nu, q
                )
    return out


def oracle_norm(matrices: Sequence[np.ndarray]) -> float:
    """Largest singular value over a stack of matrices, by full SVD."""
    return max(float(np.linalg.svd(m, compute_uv=True)[1][0]) for m in matrices)
