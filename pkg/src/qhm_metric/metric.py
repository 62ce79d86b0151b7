"""
Lower bounds for the state distance sup { |mu(a) - nu(a)| : L(a) <= 1 }.

The Lip ball is discretized on the grid of a truncation. Free variables are the
fibers u_p, p = 0..B, of a self-adjoint grid element (u_0 real, phi_{-p} = conj(u_p)),
and the discrete Lip seminorm is

    L(u) = max_i [ h_i(0) + 2 * sum_{p >= 1} h_i(p) ],   h_i(p) = max |D_i u_p|

with D_i the grid derivations. Constants and, on even grids, the checkerboard
modes of u_0 are annihilated by every D_i; they are projected out, which does not
change the objective on constants and keeps the program bounded.

Two solvers are provided: projected supergradient ascent on the ratio
objective / L (the default) and a polyhedral linear program that replaces each
modulus constraint by 16 half-planes (small truncations only). On small grids the
LP witness seeds the first restart of the ascent.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .algebra import trace, zero_mode
from .derivations import apply_grid_derivation, apply_grid_derivation_adjoint, lip_seminorm
from .element import Element, ModelParams, Truncation
from .errors import ConfigurationError, NumericalConvergenceError
from .states import State, StateKind, representer, state_eval


logger = logging.getLogger(__name__)

RADIUS_LIMIT = 6.0
GAP_LIMIT = 3.0
LP_MAX_POINTS = 1024
WARM_START_POINTS = 256
POLYHEDRAL_SIDES = 16

Observer = Callable[[int, int, float, np.ndarray], None]


def kernel_modes(nx: int, ny: int) -> np.ndarray:
    """Orthonormal real grid modes annihilated by all discrete derivations at p = 0."""
    i = np.arange(nx)[:, None]
    j = np.arange(ny)[None, :]
    modes = [np.ones((nx, ny))]
    if nx % 2 == 0:
        modes.append(np.broadcast_to((-1.0) ** i, (nx, ny)))
    if ny % 2 == 0:
        modes.append(np.broadcast_to((-1.0) ** j, (nx, ny)))
    if nx % 2 == 0 and ny % 2 == 0:
        modes.append((-1.0) ** (i + j))
    return np.stack(modes) / math.sqrt(nx * ny)


def _common_setting(
    mu: State, nu: State, params: Optional[ModelParams], trunc: Optional[Truncation]
) -> Tuple[ModelParams, Truncation]:
    for s in (mu, nu):
        if s.kind is StateKind.VECTOR:
            if params is not None and s.params != params:
                raise ConfigurationError("States are defined over different parameters")
            if trunc is not None and (s.trunc.Nx, s.trunc.Ny) != (trunc.Nx, trunc.Ny):
                raise ConfigurationError("States are defined over different grids")
            params = params or s.params
            trunc = trunc or s.trunc
    if params is None or trunc is None:
        raise ConfigurationError("Two trace states need explicit params and truncation")
    return params, trunc


@dataclass(frozen=True, eq=False)
class LipBallProgram:
    """
    maximize sum_p Re vdot(G_p, u_p)  subject to  L(u) <= radius.

    ``gradients`` holds the objective gradients of the two states separately, so
    G = gradients[0] - gradients[1].
    """

    params: ModelParams
    trunc: Truncation
    band: int
    gradients: Tuple[np.ndarray, np.ndarray]
    radius: float = 1.0

    @classmethod
    def from_states(
        cls,
        mu: State,
        nu: State,
        params: Optional[ModelParams] = None,
        trunc: Optional[Truncation] = None,
        band: Optional[int] = None,
        radius: float = 1.0,
    ) -> "LipBallProgram":
        params, trunc = _common_setting(mu, nu, params, trunc)
        band = trunc.P if band is None else band
        if not 0 <= band <= trunc.P:
            raise ConfigurationError(f"Program band must lie in [0, {trunc.P}], got {band}")
        if not radius > 0:
            raise ConfigurationError(f"Radius must be positive, got {radius}")
        grads = tuple(cls._fold(representer(s, params, trunc, band), band) for s in (mu, nu))
        return cls(params, trunc, band, grads, radius)  # type: ignore[arg-type]

    @staticmethod
    def _fold(R: np.ndarray, band: int) -> np.ndarray:
        """Gradient with respect to the free fibers: G_0 = Re R_0, G_p = R_p + conj(R_-p)."""
        G = np.zeros((band + 1,) + R.shape[1:], dtype=complex)
        G[0] = R[band].real
        for p in range(1, band + 1):
            G[p] = R[band + p] + np.conj(R[band - p])
        return G

    @property
    def gradient(self) -> np.ndarray:
        return self.gradients[0] - self.gradients[1]

    @property
    def kernel(self) -> np.ndarray:
        return kernel_modes(self.trunc.Nx, self.trunc.Ny)

    def _weight(self, p: int) -> float:
        return 1.0 if p == 0 else 2.0

    def _pairs(self):
        for index in (1, 2, 3):
            for p in range(self.band + 1):
                if index == 3 and p == 0:
                    continue
                yield index, p

    def objective(self, u: np.ndarray, gradient: Optional[np.ndarray] = None) -> float:
        G = self.gradient if gradient is None else gradient
        return float(np.sum((np.conj(G) * u).real))

    def project(self, u: np.ndarray) -> np.ndarray:
        """Make u_0 real and remove the kernel modes from it."""
        out = np.array(u, dtype=complex)
        base = out[0].real
        for mode in self.kernel:
            base = base - np.sum(mode * base) * mode
        out[0] = base
        return out

    def derivatives(self, u: np.ndarray) -> Dict[Tuple[int, int], np.ndarray]:
        c = self.params.c
        return {(i, p): apply_grid_derivation(i, u[p], p, c) for i, p in self._pairs()}

    def lip(self, u: np.ndarray, derivs=None) -> Tuple[float, int, np.ndarray]:
        """(L(u), active derivation index, per-derivation totals)."""
        derivs = self.derivatives(u) if derivs is None else derivs
        totals = np.zeros(3)
        for (i, p), z in derivs.items():
            totals[i - 1] += self._weight(p) * float(np.max(np.abs(z)))
        active = int(np.argmax(totals)) + 1
        return float(totals[active - 1]), active, totals

    def subgradient(self, derivs, active: int, eta: float) -> np.ndarray:
        """Averaged subgradient of the active derivation's weighted max-modulus sum."""
        c = self.params.c
        S = np.zeros((self.band + 1, self.trunc.Nx, self.trunc.Ny), dtype=complex)
        for (i, p), z in derivs.items():
            if i != active:
                continue
            mod = np.abs(z)
            top = float(np.max(mod))
            if top == 0:
                continue
            near = mod >= (1.0 - eta) * top
            W = np.where(near, z / np.where(near, mod, 1.0), 0.0) / np.count_nonzero(near)
            S[p] = self._weight(p) * apply_grid_derivation_adjoint(i, W, p, c)
        return S

    def to_element(self, u: np.ndarray, scale: float = 1.0) -> Element:
        """The self-adjoint grid element with free fibers scale * u."""
        P = self.trunc.P
        data = np.zeros((2 * P + 1, self.trunc.Nx, self.trunc.Ny), dtype=complex)
        data[P] = scale * u[0].real
        for p in range(1, self.band + 1):
            data[P + p] = scale * u[p]
            data[P - p] = np.conj(data[P + p])
        return Element.from_grid(self.params, self.trunc, data, hermitian=True)

    def start_point(self, seed: int, index: int) -> np.ndarray:
        """
        Restart 0 starts from the gradient. Other restarts draw a smooth random field
        and orient it along the gradient, so that swapping the states flips every
        iterate exactly.
        """
        G = self.project(self.gradient)
        if index == 0:
            return G
        rng = np.random.default_rng([seed, index])
        shape = G.shape
        spectrum = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        kx = np.fft.fftfreq(shape[1]) * shape[1]
        ky = np.fft.fftfreq(shape[2]) * shape[2]
        damping = np.exp(-0.25 * (kx[:, None] ** 2 + ky[None, :] ** 2))
        v = self.project(np.fft.ifft2(spectrum * damping[None], axes=(1, 2)))
        sign = 1.0 if self.objective(v) >= 0 else -1.0
        scale = np.linalg.norm(v) / max(np.linalg.norm(G), 1e-300)
        return sign * v + 0.5 * scale * G


@dataclass
class RestartResult:
    index: int
    value: float
    point: np.ndarray
    iterations: int
    stagnated: bool
    max_gap: float = 0.0


@dataclass
class DistanceResult:
    """Outcome of :func:`distance_lower_bound`."""

    bound: float
    witness: Element
    iterations: int
    stagnated: bool
    restart_index: int = 0
    restart_bounds: List[float] = field(default_factory=list)
    max_gap: float = 0.0
    warm_started: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bound": self.bound,
            "iterations": self.iterations,
            "stagnated": self.stagnated,
            "restart_index": self.restart_index,
            "restart_bounds": self.restart_bounds,
            "max_gap": self.max_gap,
            "warm_started": self.warm_started,
        }


def _gap(program: LipBallProgram, u: np.ndarray) -> float:
    """max over both states of |s(phi) - tau(phi^(0))| for phi = radius * u."""
    zero = program.radius * float(np.mean(u[0].real))
    return max(
        abs(program.radius * program.objective(u, gradient=g) - zero) for g in program.gradients
    )


def _run_restart(
    program: LipBallProgram,
    index: int,
    seed: int,
    iterations: int,
    step0: float,
    eta: float,
    patience: int,
    progress_tol: float,
    observer: Optional[Observer],
    start: Optional[np.ndarray] = None,
) -> RestartResult:
    G = program.project(program.gradient)
    u = program.project(program.start_point(seed, index) if start is None else start)
    derivs = program.derivatives(u)
    L, active, _ = program.lip(u, derivs)
    if L == 0:
        return RestartResult(index, 0.0, np.zeros_like(u), 0, False)
    u = u / L
    derivs = {key: z / L for key, z in derivs.items()}
    best_value = program.objective(u)
    best_u = u.copy()
    max_gap = _gap(program, u)
    since_progress = 0
    stagnated = False
    k = 0

    for k in range(1, iterations + 1):
        F = program.objective(u)
        s = program.subgradient(derivs, active, eta)
        d = program.project(G - F * s)
        d_norm = np.linalg.norm(d)
        if d_norm == 0:
            break
        u = program.project(u + (step0 / math.sqrt(k)) * np.linalg.norm(u) * d / d_norm)
        derivs = program.derivatives(u)
        L, active, _ = program.lip(u, derivs)
        if L == 0:
            break
        u = u / L
        derivs = {key: z / L for key, z in derivs.items()}
        value = program.objective(u)
        max_gap = max(max_gap, _gap(program, u))
        if observer is not None:
            observer(index, k, program.radius * value, program.radius * u)

        if value > best_value + progress_tol * max(abs(best_value), 1e-12):
            since_progress = 0
        else:
            since_progress += 1
        if value > best_value:
            best_value, best_u = value, u.copy()
        if since_progress >= patience:
            stagnated = True
            break

    logger.debug(f"restart {index}: bound {best_value:.6g} after {k} iterations")
    return RestartResult(index, best_value, best_u, k, stagnated, max_gap)


def solve_program(
    program: LipBallProgram,
    restarts: int = 20,
    iterations: int = 2000,
    seed: int = 0,
    workers: int = 1,
    step0: float = 0.5,
    eta: float = 0.05,
    patience: Optional[int] = None,
    progress_tol: float = 1e-9,
    observer: Optional[Observer] = None,
    warm_start: Optional[bool] = None,
) -> DistanceResult:
    """
    Projected supergradient ascent with restarts; the best restart wins, lowest index on ties.

    With ``warm_start`` restart 0 begins at the rescaled witness of the polyhedral LP
    instead of the gradient, so the bound is never below the LP's feasible value.
    The default warm-starts grids of at most WARM_START_POINTS points.
    """
    if restarts < 1 or iterations < 0:
        raise ConfigurationError("Need at least one restart and a nonnegative iteration count")
    patience = max(100, iterations // 4) if patience is None else patience

    if not np.any(program.project(program.gradient)):
        zero = np.zeros((program.band + 1, program.trunc.Nx, program.trunc.Ny), dtype=complex)
        return DistanceResult(0.0, program.to_element(zero), 0, False, 0, [0.0] * restarts)

    n = program.trunc.Nx * program.trunc.Ny
    if warm_start is None:
        warm_start = n <= WARM_START_POINTS
    lp_start = _lp_start(program) if warm_start else None

    def run(index: int) -> RestartResult:
        start = lp_start if index == 0 else None
        return _run_restart(
            program, index, seed, iterations, step0, eta, patience, progress_tol, observer,
            start=start,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(index) for index in range(restarts)]

    best = results[0]
    for result in results[1:]:
        if result.value > best.value:
            best = result
    if best.stagnated:
        logger.warning(
            f"Best restart {best.index} stopped after {best.iterations} iterations without progress"
        )
    bound = program.radius * max(best.value, 0.0)
    return DistanceResult(
        bound=bound,
        witness=program.to_element(best.point, scale=program.radius),
        iterations=best.iterations,
        stagnated=best.stagnated,
        restart_index=best.index,
        restart_bounds=[program.radius * r.value for r in results],
        max_gap=max(r.max_gap for r in results),
        warm_started=lp_start is not None,
    )


def _lp_start(program: LipBallProgram) -> Optional[np.ndarray]:
    """Unit-radius LP witness, or None when the grid is too large or the LP fails."""
    try:
        _, witness = _solve_polyhedral(program, POLYHEDRAL_SIDES)
    except (ConfigurationError, NumericalConvergenceError) as e:
        logger.warning(f"No LP warm start, restart 0 starts from the gradient: {e}")
        return None
    return witness


def distance_lower_bound(
    mu: State,
    nu: State,
    params: Optional[ModelParams] = None,
    trunc: Optional[Truncation] = None,
    band: Optional[int] = None,
    radius: float = 1.0,
    **opts,
) -> DistanceResult:
    """
    Certified lower bound on the discretized distance between two states.

    Args:
        mu, nu: states (vector states fix params and truncation)
        params, trunc: required when both states are trace states
        band: number of free fibers beyond p = 0 (default: trunc.P)
        radius: Lip-ball radius
        **opts: passed to :func:`solve_program` (restarts, iterations, seed, workers, ...)

    Returns:
        DistanceResult whose witness has L(witness) <= radius
    """
    program = LipBallProgram.from_states(mu, nu, params, trunc, band, radius)
    result = solve_program(program, **opts)
    logger.info(f"Distance lower bound {result.bound:.6g} (restart {result.restart_index})")
    return result


@dataclass
class PolyhedralResult:
    """
    LP relaxation value (upper) and the value of its rescaled feasible witness (lower).

    ``witness`` holds the free fibers of the unit-radius LP solution.
    """

    upper: float
    lower: float
    witness: np.ndarray
    sides: int


def _derivation_matrix(index: int, p: int, nx: int, ny: int, c: int) -> sparse.coo_matrix:
    n = nx * ny
    basis = np.eye(n, dtype=complex).reshape(n, nx, ny)
    columns = np.stack([apply_grid_derivation(index, e, p, c).ravel() for e in basis], axis=1)
    scale = float(np.max(np.abs(columns))) if columns.size else 0.0
    columns[np.abs(columns) < 1e-13 * max(scale, 1.0)] = 0.0
    return sparse.coo_matrix(columns)


def _orientation(G: np.ndarray) -> float:
    """Sign of the first significant entry of G; G and -G share one canonical LP."""
    flat = np.concatenate([G.real.ravel(), G.imag.ravel()])
    scale = float(np.max(np.abs(flat))) if flat.size else 0.0
    significant = np.flatnonzero(np.abs(flat) > 1e-12 * scale)
    if scale == 0 or significant.size == 0:
        return 1.0
    return 1.0 if flat[significant[0]] > 0 else -1.0


def _solve_polyhedral(program: LipBallProgram, sides: int) -> Tuple[float, np.ndarray]:
    """
    Unit-radius polygonal LP in the canonical orientation of the gradient.

    Returns the LP value and the projected witness, oriented back to the program's own
    gradient. The constraint set is symmetric under u -> -u, so swapping the states
    negates the witness exactly.
    """
    nx, ny = program.trunc.Nx, program.trunc.Ny
    n = nx * ny
    if n > LP_MAX_POINTS:
        raise ConfigurationError(f"Polyhedral check takes at most {LP_MAX_POINTS} points, got {n}")
    B = program.band
    c = program.params.c
    G = program.project(program.gradient)
    sign = _orientation(G)
    G = sign * G

    n_u = n + 2 * n * B
    t_index = {(i, p): n_u + 3 * p + (i - 1) for i in (1, 2, 3) for p in range(B + 1)}
    n_vars = n_u + 3 * (B + 1)

    def u_start(p: int, part: int) -> int:
        return 0 if p == 0 else n + 2 * n * (p - 1) + part * n

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    row = 0
    for i, p in program._pairs():
        D = _derivation_matrix(i, p, nx, ny, c)
        for k in range(sides):
            E = D.data * np.exp(-2j * np.pi * k / sides)
            rows.append(row + D.row)
            cols.append(u_start(p, 0) + D.col)
            vals.append(E.real)
            if p > 0:
                rows.append(row + D.row)
                cols.append(u_start(p, 1) + D.col)
                vals.append(-E.imag)
            rows.append(row + np.arange(n))
            cols.append(np.full(n, t_index[(i, p)]))
            vals.append(-np.ones(n))
            row += n
    for i in (1, 2, 3):
        for p in range(B + 1):
            rows.append(np.array([row + i - 1]))
            cols.append(np.array([t_index[(i, p)]]))
            vals.append(np.array([1.0 if p == 0 else 2.0]))
    A_ub = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(row + 3, n_vars),
    ).tocsr()
    b_ub = np.concatenate([np.zeros(row), np.ones(3)])

    kernel = program.kernel.reshape(len(program.kernel), n)
    A_eq = sparse.hstack([sparse.csr_matrix(kernel), sparse.csr_matrix((len(kernel), n_vars - n))])
    b_eq = np.zeros(len(kernel))

    cost = np.zeros(n_vars)
    cost[:n] = -G[0].real.ravel()
    for p in range(1, B + 1):
        cost[u_start(p, 0):u_start(p, 0) + n] = -G[p].real.ravel()
        cost[u_start(p, 1):u_start(p, 1) + n] = -G[p].imag.ravel()
    bounds = [(None, None)] * n_u + [(0, None)] * (3 * (B + 1))

    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise NumericalConvergenceError(f"Polyhedral LP failed: {res.message}", iterations=res.nit)

    x = res.x
    u = np.zeros((B + 1, nx, ny), dtype=complex)
    u[0] = x[:n].reshape(nx, ny)
    for p in range(1, B + 1):
        re = x[u_start(p, 0):u_start(p, 0) + n]
        im = x[u_start(p, 1):u_start(p, 1) + n]
        u[p] = (re + 1j * im).reshape(nx, ny)
    return float(-res.fun), program.project(sign * u)


def polyhedral_distance(
    program: LipBallProgram, sides: int = POLYHEDRAL_SIDES
) -> PolyhedralResult:
    """
    Solve the Lip-ball program with |z| <= t replaced by the circumscribed polygon
    Re(exp(-i theta_k) z) <= t, k = 0..sides-1, using HiGHS.
    """
    unit_upper, u = _solve_polyhedral(program, sides)
    upper = program.radius * unit_upper
    L = program.lip(u)[0]
    lower = program.radius * program.objective(u) / L if L > 0 else 0.0
    logger.info(f"Polyhedral LP: upper {upper:.6g}, feasible lower {lower:.6g}")
    return PolyhedralResult(upper=upper, lower=max(lower, 0.0), witness=u, sides=sides)


@dataclass
class RadiusReport:
    """Distances for a list of state pairs checked against the radius bound."""

    bounds: List[float]
    max_bound: float
    max_gap: float
    passed: bool
    limit: float = RADIUS_LIMIT
    gap_limit: float = GAP_LIMIT
    results: List[DistanceResult] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bounds": self.bounds,
            "max_bound": self.max_bound,
            "max_gap": self.max_gap,
            "passed": self.passed,
            "limit": self.limit,
            "gap_limit": self.gap_limit,
        }


def radius_check(
    pairs: Sequence[Tuple[State, State]],
    params: Optional[ModelParams] = None,
    trunc: Optional[Truncation] = None,
    slack: float = 1e-6,
    **opts,
) -> RadiusReport:
    """
    Distance lower bounds for each pair, all of which must stay below 6.

    Along the way every iterate phi is checked against |s(phi) - tau(phi^(0))| <= 3
    for both states of the pair.
    """
    results = [
        distance_lower_bound(mu, nu, params=params, trunc=trunc, **opts) for mu, nu in pairs
    ]
    bounds = [r.bound for r in results]
    max_gap = max((r.max_gap for r in results), default=0.0)
    max_bound = max(bounds) if bounds else 0.0
    passed = max_bound <= RADIUS_LIMIT + slack and max_gap <= GAP_LIMIT + slack
    if not passed:
        logger.error(f"Radius check failed: max bound {max_bound:.6g}, max gap {max_gap:.6g}")
    return RadiusReport(bounds, max_bound, max_gap, passed, results=results)


def zero_mode_gap(mu: State, a: Element) -> float:
    """
    |mu(a) - tau(a^(0))| for a brought into the unit Lip ball.

    Elements with L(a) > 1 are rescaled to L(a) = 1; elements already inside the
    ball, scalars included, are compared as given.
    """
    L = lip_seminorm(a)
    if L > 1:
        a = a * (1.0 / L)
    return abs(state_eval(mu, a) - trace(zero_mode(a)).real)
