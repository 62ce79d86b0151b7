"""
Algebraic structure: star product, involution, trace, Heisenberg group action and
the averaging operators built from it.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .element import (
    Element,
    ModelParams,
    Truncation,
    check_compatible,
    combine,
    joint_truncation,
)
from .errors import DomainError, PreconditionError
from .interpolation import unit_phase
from .norms import sup_sum_norm


logger = logging.getLogger(__name__)

PROBE_POINTS = (0.0, 0.25, 0.5, 0.75)


@dataclass(frozen=True)
class GroupPoint:
    """A point (r, s, t) of the Heisenberg group."""

    r: float = 0.0
    s: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("r", "s", "t"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"Group coordinate {name} must be finite, got {value}")
            object.__setattr__(self, name, value)


def compose(g: GroupPoint, h: GroupPoint, params: ModelParams) -> GroupPoint:
    """
    Group law (r,s,t)(r',s',t') = (r+r', s+s', t+t'+c*s*r').

    With this cocycle L_g L_h = L_(gh).
    """
    return GroupPoint(g.r + h.r, g.s + h.s, g.t + h.t + params.c * g.s * h.r)


def inverse(g: GroupPoint, params: ModelParams) -> GroupPoint:
    return GroupPoint(-g.r, -g.s, params.c * g.s * g.r - g.t)


def exp_generator(index: int, h: float) -> GroupPoint:
    """exp(h X_i) for the basis generators X_1, X_2, X_3."""
    if index == 1:
        return GroupPoint(h, 0.0, 0.0)
    if index == 2:
        return GroupPoint(0.0, h, 0.0)
    if index == 3:
        return GroupPoint(0.0, 0.0, h)
    raise DomainError(f"Generator index must be 1, 2 or 3, got {index}")


def _q_range(p: int, band_a: int, band_b: int) -> range:
    return range(max(-band_a, p - band_b), min(band_a, p + band_b) + 1)


def _output_truncation(a: Element, b: Element, trunc: Optional[Truncation]) -> Truncation:
    if trunc is not None:
        return trunc
    return joint_truncation([a, b])


def star(a: Element, b: Element, trunc: Optional[Truncation] = None) -> Element:
    """
    Deformed product

        (a*b)(x,y,p) = sum_q a(x - h(q-p)mu, y - h(q-p)nu, q) * b(x - h q mu, y - h q nu, p-q)

    with h = hbar. The full band a.band + b.band is clamped to the output
    truncation, in which case the result is flagged ``clamped``.
    """
    check_compatible(a, b)
    out = _output_truncation(a, b, trunc)
    params = a.params
    full_band = a.band + b.band
    band = min(full_band, out.P)
    clamped = full_band > out.P or a.clamped or b.clamped
    if full_band > out.P:
        logger.warning(
            f"Star product band {full_band} clamped to truncation band {out.P}"
        )
    hm = params.hbar * params.mu
    hn = params.hbar * params.nu

    if a.data is None and b.data is None:

        def summed(product):
            def fn(x0, y0, p):
                parts = []
                for q in _q_range(p, a.band, b.band):
                    xa, ya = x0 - hm * (q - p), y0 - hn * (q - p)
                    parts.append(product(xa, ya, q, x0 - hm * q, y0 - hn * q, p - q))
                if not parts:
                    return np.zeros(np.broadcast(x0, y0).shape, dtype=complex)
                return np.sum(np.stack(np.broadcast_arrays(*parts)), axis=0)

            return fn

        func = summed(
            lambda xa, ya, q, xb, yb, r: a.evaluate(xa, ya, q) * b.evaluate(xb, yb, r)
        )
        dx = dy = None
        if a.has_partials and b.has_partials:
            dx = summed(
                lambda xa, ya, q, xb, yb, r: a.partial_x(xa, ya, q) * b.evaluate(xb, yb, r)
                + a.evaluate(xa, ya, q) * b.partial_x(xb, yb, r)
            )
            dy = summed(
                lambda xa, ya, q, xb, yb, r: a.partial_y(xa, ya, q) * b.evaluate(xb, yb, r)
                + a.evaluate(xa, ya, q) * b.partial_y(xb, yb, r)
            )
        return Element.closed_form(params, out, band, func, dx=dx, dy=dy, clamped=clamped)

    data = np.zeros((2 * out.P + 1, out.Nx, out.Ny), dtype=complex)
    for p in range(-band, band + 1):
        parts = [
            a.shifted_fiber(q, -hm * (q - p), -hn * (q - p))
            * b.shifted_fiber(p - q, -hm * q, -hn * q)
            for q in _q_range(p, a.band, b.band)
        ]
        if parts:
            data[p + out.P] = np.sum(np.stack(parts), axis=0)
    return Element.from_grid(params, out, data, clamped=clamped)


def involution(a: Element) -> Element:
    """a*(x, y, p) = conj(a(x, y, -p))."""
    if a.hermitian:
        return a
    if a.data is not None:
        return Element.from_grid(a.params, a.trunc, np.conj(a.data[::-1]), clamped=a.clamped)

    def flip(fn):
        def out(x0, y0, p):
            return np.conj(a._call(fn, x0, y0, -p))

        return out

    return Element.closed_form(
        a.params,
        a.trunc,
        a.band,
        flip(a.func),
        dx=flip(a.dx) if a.dx is not None else None,
        dy=flip(a.dy) if a.dy is not None else None,
        clamped=a.clamped,
    )


def trace(a: Element) -> complex:
    """Uniform product-rule quadrature of the p = 0 fiber over [0,1) x [0,1)."""
    return complex(np.mean(a.fiber(0)))


def group_action(g: GroupPoint, a: Element) -> Element:
    """
    L_g a (x, y, p) = e(p (t + c s (x - r))) a(x - r, y - s, p).

    Grid elements are resampled on their own grid.
    """
    params = a.params
    c = params.c

    def phase(x0, p):
        return unit_phase(p * g.t + p * c * g.s * (np.asarray(x0) - g.r))

    if a.data is not None:
        trunc = a.trunc
        X, _ = trunc.mesh()
        data = np.zeros((2 * trunc.P + 1, trunc.Nx, trunc.Ny), dtype=complex)
        exact_mirror = a.is_selfadjoint()
        for p in range(-a.band, a.band + 1):
            if exact_mirror and p < 0:
                continue
            data[p + trunc.P] = phase(X, p) * a.shifted_fiber(p, -g.r, -g.s)
            if exact_mirror and p > 0:
                data[trunc.P - p] = np.conj(data[p + trunc.P])
        if exact_mirror:
            data[trunc.P] = data[trunc.P].real
        return Element.from_grid(params, trunc, data, hermitian=exact_mirror, clamped=a.clamped)

    def func(x0, y0, p):
        return phase(x0, p) * a.evaluate(x0 - g.r, y0 - g.s, p)

    dx = dy = None
    if a.has_partials:

        def dx(x0, y0, p):
            xs, ys = x0 - g.r, y0 - g.s
            twist = 2j * np.pi * p * c * g.s
            return phase(x0, p) * (twist * a.evaluate(xs, ys, p) + a.partial_x(xs, ys, p))

        def dy(x0, y0, p):
            return phase(x0, p) * a.partial_y(x0 - g.r, y0 - g.s, p)

    return Element.closed_form(
        params, a.trunc, a.band, func, dx=dx, dy=dy, hermitian=a.hermitian, clamped=a.clamped
    )


def zero_mode(a: Element) -> Element:
    """Keep only the p = 0 fiber."""
    if a.data is not None:
        data = np.zeros_like(a.data)
        P = a.trunc.P
        data[P] = a.data[P]
        return Element.from_grid(a.params, a.trunc, data, hermitian=a.is_selfadjoint())

    def keep(fn):
        def out(x0, y0, p):
            return a._call(fn, x0, y0, 0)

        return out

    return Element.closed_form(
        a.params,
        a.trunc,
        0,
        keep(a.func),
        dx=keep(a.dx) if a.dx is not None else None,
        dy=keep(a.dy) if a.dy is not None else None,
        hermitian=a.hermitian,
    )


def central_average(a: Element, nodes: Optional[int] = None) -> Element:
    """
    Uniform quadrature of the integral over t in [0, 1) of L_(0,0,t)(a).

    With n nodes the rule is exact for |p| < n, so the default 2*band + 2 nodes
    reproduces zero_mode(a).
    """
    n = nodes if nodes is not None else 2 * a.band + 2
    if n < 1:
        raise DomainError(f"Need at least one quadrature node, got {n}")
    actions = [group_action(GroupPoint(0.0, 0.0, k / n), a) for k in range(n)]
    return combine([1.0 / n] * n, actions)


def average_over_torus(a0: Element, nodes: Optional[Tuple[int, int]] = None) -> complex:
    """
    Average L_(r,s,0)(a0) over a uniform (r, s) grid and return the resulting constant.

    For a p = 0 element the average is tau(a0) times the identity; the constant is
    read off as the mean over a few probe points.
    """
    if a0.band != 0:
        raise PreconditionError(
            f"average_over_torus needs an element supported at p=0 (band {a0.band})"
        )
    nr, ns = nodes if nodes is not None else (a0.trunc.Nx, a0.trunc.Ny)
    px, py = np.meshgrid(PROBE_POINTS, PROBE_POINTS, indexing="ij")
    total = np.zeros(px.shape, dtype=complex)
    for i in range(nr):
        for j in range(ns):
            moved = group_action(GroupPoint(i / nr, j / ns, 0.0), a0)
            total += moved.evaluate(px, py, 0)
    averaged = total / (nr * ns)
    spread = float(np.max(np.abs(averaged - averaged.mean())))
    logger.debug(f"Torus average over {nr}x{ns} nodes, probe spread {spread:.2e}")
    return complex(averaged.mean())


def translation_gap(a: Element, points: Sequence[GroupPoint]) -> List[float]:
    """Sup-sum distance between zero_mode(a) and its translates L_(r,s,0) zero_mode(a)."""
    base = zero_mode(a)
    return [
        sup_sum_norm(base - group_action(GroupPoint(g.r, g.s, 0.0), base)).sup_sum
        for g in points
    ]
