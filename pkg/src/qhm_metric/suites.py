"""
Executable property suites behind ``qhm-metric verify``.

Each check draws its own deterministic random inputs from the configured seeds
and returns one or more PropertyResult rows. Suites: algebra, representation,
metric (or all of them).
"""

import csv
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from .algebra import (
    GroupPoint,
    average_over_torus,
    central_average,
    exp_generator,
    group_action,
    involution,
    star,
    trace,
    translation_gap,
    zero_mode,
)
from .config import RunConfig
from .derivations import derivation, lip_seminorm
from .element import (
    Element,
    Truncation,
    fold_evaluate,
    identity,
    sample,
    selfadjoint_part,
)
from .errors import ConfigurationError, QHMError
from .interpolation import interpolate, unit_phase
from .metric import (
    GAP_LIMIT,
    RADIUS_LIMIT,
    LipBallProgram,
    distance_lower_bound,
    polyhedral_distance,
    radius_check,
    solve_program,
    zero_mode_gap,
)
from .norms import sup_sum_norm
from .representation import cstar_norm_estimate, fiber_matrices, twist_unitary
from .states import localized_state, random_vector_state, trace_state
from .testkit import MAX_ORACLE_Q, brute_star, dense_operator_oracle, oracle_norm
from .windowed import random_element


logger = logging.getLogger(__name__)

SUITE_NAMES = ("algebra", "representation", "metric")
CSV_FIELDS = ["suite", "name", "passed", "measured", "threshold", "relation", "trials", "detail"]
GENERATOR_STEPS = (0.01, 0.005, 0.0025)
TAIL_CUTS = (2, 4, 8)


@dataclass
class PropertyResult:
    """Outcome of one checked property."""

    name: str
    suite: str
    passed: bool
    measured: float
    threshold: float
    relation: str = "<="
    trials: int = 1
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class VerifyReport:
    """All property results of a verify run."""

    suite: str
    results: List[PropertyResult]
    config: Dict[str, Any] = field(default_factory=dict)
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[PropertyResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self, timestamp: bool = True) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "suite": self.suite,
            "passed": self.passed,
            "properties": [r.to_dict() for r in self.results],
            "config": self.config,
        }
        if timestamp:
            out["created"] = self.created
        return out

    def save(self, path: Union[str, Path], fmt: str = "json") -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            with open(path, "w") as f:
                json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        elif fmt == "csv":
            write_csv([r.to_dict() for r in self.results], path)
        else:
            raise ConfigurationError(f"Unknown report format: {fmt}")
        logger.info(f"Report written to {path}")
        return path


def write_csv(rows: Sequence[Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def export_report(report_path: Union[str, Path], out_path: Union[str, Path]) -> Path:
    """Flatten a JSON verify report into CSV rows, one per property."""
    report_path = Path(report_path)
    if not report_path.exists():
        raise ConfigurationError(f"Report not found: {report_path}")
    try:
        with open(report_path) as f:
            payload = json.load(f)
        rows = payload["properties"]
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Report {report_path} is not valid JSON: {e}") from e
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"Report {report_path} has no property list") from e
    write_csv(rows, out_path)
    logger.info(f"Exported {len(rows)} properties to {out_path}")
    return Path(out_path)


# -- shared inputs -------------------------------------------------------------


class SuiteContext:
    """Deterministic random inputs derived from the run config."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.params = config.params
        self.trunc = config.truncation
        self.solver_trunc = config.solver.truncation

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng([*self.config.seeds, *key])

    def seed(self, *key: int) -> int:
        return int(self.rng(*key).integers(2 ** 31))

    def element(self, *key: int, band=None, hermitian: bool = False) -> Element:
        el = random_element(self.seed(*key), self.trunc, self.params, decay=1.0, band=band)
        return selfadjoint_part(el) if hermitian else el

    def probes(self, n: int, band: int, *key: int, x_range=(-2.0, 3.0)):
        rng = self.rng(*key)
        xs = rng.uniform(x_range[0], x_range[1], n)
        ys = rng.uniform(0.0, 1.0, n)
        ps = rng.integers(-band, band + 1, n)
        return list(zip(xs.tolist(), ys.tolist(), ps.tolist()))

    def group_point(self, *key: int) -> GroupPoint:
        r, s, t = self.rng(*key).uniform(-1.0, 1.0, 3)
        return GroupPoint(r, s, t)

    def solver_opts(self, *key: int) -> Dict[str, Any]:
        solver = self.config.solver
        return {
            "restarts": solver.restarts,
            "iterations": solver.iterations,
            "workers": solver.workers,
            "seed": self.seed(*key),
        }


def _values(el: Element, probes) -> np.ndarray:
    return np.array([complex(fold_evaluate(el, x, y, p)) for x, y, p in probes])


def _max_diff(a: Element, b: Element, probes) -> float:
    return float(np.max(np.abs(_values(a, probes) - _values(b, probes))))


def _upper(name, suite, measured, threshold, trials, detail="") -> PropertyResult:
    passed = bool(measured <= threshold)
    return PropertyResult(name, suite, passed, measured, threshold, "<=", trials, detail)


def _lower(name, suite, measured, threshold, trials, detail="") -> PropertyResult:
    passed = bool(measured >= threshold)
    return PropertyResult(name, suite, passed, measured, threshold, ">=", trials, detail)


Check = Callable[[SuiteContext], List[PropertyResult]]
SUITES: Dict[str, List[Tuple[str, Check]]] = {name: [] for name in SUITE_NAMES}


def check(suite: str, name: str):
    def register(fn: Check) -> Check:
        SUITES[suite].append((name, fn))
        return fn

    return register


# -- algebra -------------------------------------------------------------------


@check("algebra", "twist_coherence")
def check_twist(ctx: SuiteContext) -> List[PropertyResult]:
    n = ctx.config.count("probes")
    P, c = ctx.trunc.P, ctx.params.c
    worst = 0.0
    for k in range(3):
        closed = ctx.element(1, k)
        for el in (closed, sample(closed)):
            for x, y, p in ctx.probes(n, P, 1, k, x_range=(0.0, 1.0)):
                base = complex(fold_evaluate(el, x, y, p))
                for shift in (-2, -1, 1, 2):
                    moved = complex(fold_evaluate(el, x + shift, y, p))
                    worst = max(worst, abs(moved - complex(unit_phase(c * shift * p * y)) * base))
    return [_upper("twist_coherence", "algebra", worst, ctx.config.tol("twist"), 3 * n)]


@check("algebra", "interpolation_convergence")
def check_interpolation(ctx: SuiteContext) -> List[PropertyResult]:
    P, Ny, Q = ctx.trunc.P, ctx.trunc.Ny, ctx.trunc.Q
    el = ctx.element(2, band=min(P, 2))
    rng = ctx.rng(2, 1)
    xs, ys = rng.uniform(0.0, 1.0, 100), rng.uniform(0.0, 1.0, 100)
    errors = []
    for nx in (32, 64):
        grid = sample(el, Truncation(P=P, Nx=nx, Ny=Ny, Q=Q))
        err = max(
            float(np.max(np.abs(interpolate(grid, xs, ys, p) - el.fundamental(xs, ys, p))))
            for p in range(-el.band, el.band + 1)
        )
        errors.append(err)
    ratio = errors[0] / errors[1] if errors[1] > 0 else math.inf
    return [_lower("interpolation_convergence", "algebra", ratio, 6.0, 100, f"errors {errors}")]


@check("algebra", "identity_laws")
def check_identity(ctx: SuiteContext) -> List[PropertyResult]:
    n = ctx.config.count("probes")
    one = identity(ctx.params, ctx.trunc)
    a = ctx.element(3)
    probes = ctx.probes(n, a.band, 3)
    worst = max(_max_diff(star(one, a), a, probes), _max_diff(star(a, one), a, probes))
    oracle = max(
        abs(brute_star(one, a, x, y, p) - complex(fold_evaluate(a, x, y, p))) for x, y, p in probes
    )
    worst = max(worst, oracle)
    return [_upper("identity_laws", "algebra", worst, ctx.config.tol("identity"), n)]


@check("algebra", "star_oracle")
def check_star_oracle(ctx: SuiteContext) -> List[PropertyResult]:
    n, pairs = ctx.config.count("probes"), ctx.config.count("star_pairs")
    band = ctx.trunc.P // 2
    worst = 0.0
    for k in range(pairs):
        a, b = ctx.element(4, k, 0, band=band), ctx.element(4, k, 1, band=band)
        ab = star(a, b)
        for x, y, p in ctx.probes(n, ab.band, 4, k, 2):
            worst = max(worst, abs(complex(fold_evaluate(ab, x, y, p)) - brute_star(a, b, x, y, p)))
    return [_upper("star_oracle", "algebra", worst, ctx.config.tol("star_oracle"), n * pairs)]


@check("algebra", "associativity")
def check_associativity(ctx: SuiteContext) -> List[PropertyResult]:
    n, trials = ctx.config.count("probes"), ctx.config.count("associativity")
    band = ctx.trunc.P // 3
    worst = 0.0
    for k in range(trials):
        a, b, c = (ctx.element(5, k, i, band=band) for i in range(3))
        left, right = star(star(a, b), c), star(a, star(b, c))
        worst = max(worst, _max_diff(left, right, ctx.probes(n, left.band, 5, k, 3)))
    return [_upper("associativity", "algebra", worst, ctx.config.tol("associativity"), trials)]


@check("algebra", "involution")
def check_involution(ctx: SuiteContext) -> List[PropertyResult]:
    n, pairs = ctx.config.count("probes"), ctx.config.count("star_pairs")
    band = ctx.trunc.P // 2
    worst, double = 0.0, 0.0
    tol = ctx.config.tol("star_oracle")
    for k in range(pairs):
        a, b = ctx.element(6, k, 0, band=band), ctx.element(6, k, 1, band=band)
        left = involution(star(a, b))
        right = star(involution(b), involution(a))
        probes = ctx.probes(n, left.band, 6, k, 2)
        worst = max(worst, _max_diff(left, right, probes))
        double = max(double, _max_diff(involution(involution(a)), a, probes))
    return [
        _upper("involution_antihomomorphism", "algebra", worst, tol, pairs),
        _upper("involution_involutive", "algebra", double, ctx.config.tol("identity"), pairs),
    ]


@check("algebra", "trace")
def check_trace(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    band = ctx.trunc.P // 2
    tracial = 0.0
    for k in range(cfg.count("trace")):
        a, b = ctx.element(7, k, 0, band=band), ctx.element(7, k, 1, band=band)
        tracial = max(tracial, abs(trace(star(a, b)) - trace(star(b, a))))
    lowest = math.inf
    for k in range(cfg.count("positivity")):
        a = ctx.element(8, k, band=band)
        lowest = min(lowest, trace(star(involution(a), a)).real)
    invariance = 0.0
    for k in range(cfg.count("action")):
        a = ctx.element(9, k)
        moved = group_action(ctx.group_point(9, k, 1), a)
        invariance = max(invariance, abs(trace(moved) - trace(a)))
    return [
        _upper("trace_tracial", "algebra", tracial, cfg.tol("trace"), cfg.count("trace")),
        _lower(
            "trace_positivity", "algebra", lowest, -cfg.tol("positivity"), cfg.count("positivity")
        ),
        _upper(
            "trace_action_invariance", "algebra", invariance, cfg.tol("action"), cfg.count("action")
        ),
    ]


@check("algebra", "action_morphism")
def check_action_morphism(ctx: SuiteContext) -> List[PropertyResult]:
    n, trials = ctx.config.count("probes"), ctx.config.count("action")
    band = ctx.trunc.P // 2
    worst = 0.0
    for k in range(trials):
        a, b = ctx.element(10, k, 0, band=band), ctx.element(10, k, 1, band=band)
        g = ctx.group_point(10, k, 2)
        left = group_action(g, star(a, b))
        right = star(group_action(g, a), group_action(g, b))
        worst = max(worst, _max_diff(left, right, ctx.probes(n, left.band, 10, k, 3)))
    return [_upper("action_morphism", "algebra", worst, ctx.config.tol("action"), trials)]


@check("algebra", "norm_axioms")
def check_norms(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    band = ctx.trunc.P // 2
    pairs = cfg.count("submultiplicative")
    excess, axioms = -math.inf, 0.0
    for k in range(pairs):
        a, b = ctx.element(11, k, 0, band=band), ctx.element(11, k, 1, band=band)
        na, nb = sup_sum_norm(a).sup_sum, sup_sum_norm(b).sup_sum
        excess = max(excess, sup_sum_norm(star(a, b)).sup_sum - na * nb)

        ga, gb = sample(a), sample(b)
        ga_norm, gb_norm = sup_sum_norm(ga).sup_sum, sup_sum_norm(gb).sup_sum
        scale = ga_norm + gb_norm
        axioms = max(
            axioms,
            abs(sup_sum_norm(involution(ga)).sup_sum - ga_norm) / scale,
            abs(sup_sum_norm(ga * 2.0).sup_sum - 2.0 * ga_norm) / scale,
            max(0.0, sup_sum_norm(ga + gb).sup_sum - scale) / scale,
        )
    return [
        _upper("submultiplicativity", "algebra", excess, cfg.tol("submultiplicative"), pairs),
        _upper("norm_axioms", "algebra", axioms, cfg.tol("identity"), pairs),
    ]


@check("algebra", "derivations")
def check_derivations(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    n = cfg.count("probes")
    band = ctx.trunc.P // 2
    leibniz = 0.0
    for k in range(cfg.count("leibniz")):
        a, b = ctx.element(12, k, 0, band=band), ctx.element(12, k, 1, band=band)
        ab = star(a, b)
        probes = ctx.probes(n, ab.band, 12, k, 2)
        for i in (1, 2, 3):
            lhs = _values(derivation(i, ab), probes)
            rhs = _values(star(derivation(i, a), b), probes)
            rhs = rhs + _values(star(a, derivation(i, b)), probes)
            scale = max(float(np.max(np.abs(lhs))), 1e-300)
            leibniz = max(leibniz, float(np.max(np.abs(lhs - rhs))) / scale)

    a = ctx.element(13, band=min(ctx.trunc.P, 2))
    probes = ctx.probes(n, a.band, 13, 1, x_range=(0.0, 1.0))
    slopes = []
    for i in (1, 2, 3):
        exact = _values(derivation(i, a), probes)
        errors = []
        for h in GENERATOR_STEPS:
            plus = _values(group_action(exp_generator(i, h), a), probes)
            minus = _values(group_action(exp_generator(i, -h), a), probes)
            errors.append(float(np.max(np.abs((plus - minus) / (2 * h) - exact))))
        slopes.append(float(np.polyfit(np.log(GENERATOR_STEPS), np.log(errors), 1)[0]))
    order_error = max(abs(s - 2.0) for s in slopes)

    # delta_2 at unfolded x against 2 pi i c p x a - d_y a, both twisted
    c = ctx.params.c
    d2 = derivation(2, a)
    twist = 0.0
    for x, y, p in ctx.probes(n, a.band, 13, 2):
        direct = 2j * np.pi * c * p * x * complex(fold_evaluate(a, x, y, p)) - complex(
            a.partial_y(x, y, p)
        )
        twist = max(twist, abs(complex(fold_evaluate(d2, x, y, p)) - direct))
    return [
        _upper("leibniz", "algebra", leibniz, cfg.tol("leibniz"), cfg.count("leibniz")),
        _upper(
            "generator_order", "algebra", order_error, cfg.tol("generator_order"), 3,
            f"slopes {[round(s, 3) for s in slopes]}",
        ),
        _upper("derivation_twist", "algebra", twist, cfg.tol("twist"), n),
    ]


@check("algebra", "lip_estimates")
def check_lip_estimates(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    tail_excess, weak_excess = -math.inf, -math.inf
    for k in range(cfg.count("tail")):
        a = ctx.element(14, k, hermitian=True)
        a = a * (1.0 / lip_seminorm(a))
        report = sup_sum_norm(a)
        for N in TAIL_CUTS:
            tail = report.tail(N)
            tail_excess = max(tail_excess, tail - 1.0 / (2 * math.pi * N))
            weak_excess = max(weak_excess, tail - 1.0 / N)

    step_i, step_ii = 0.0, 0.0
    for k in range(cfg.count("proof_steps")):
        a = ctx.element(15, k, hermitian=True)
        a = a * (1.0 / lip_seminorm(a))
        step_i = max(step_i, sup_sum_norm(a - zero_mode(a)).sup_sum)
        base = zero_mode(a)
        base = base * (1.0 / sup_sum_norm(base).sup_sum)
        points = [ctx.group_point(15, k, j) for j in range(3)]
        step_ii = max(step_ii, max(translation_gap(base, points)))
    trials = cfg.count("tail") * len(TAIL_CUTS)
    return [
        _upper("tail_estimate", "algebra", tail_excess, cfg.tol("tail"), trials),
        _upper("tail_estimate_weak", "algebra", weak_excess, cfg.tol("tail"), trials),
        _upper("zero_mode_distance", "algebra", step_i, 1.0, cfg.count("proof_steps")),
        _upper("translation_bound", "algebra", step_ii, 2.0, cfg.count("proof_steps")),
    ]


@check("algebra", "averaging")
def check_averaging(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    n = cfg.count("probes")
    a = ctx.element(16)
    nodes = max(16, 2 * a.band + 2)
    central = _max_diff(central_average(a, nodes), zero_mode(a), ctx.probes(n, a.band, 16, 1))
    torus = 0.0
    for k in range(3):
        a0 = zero_mode(ctx.element(17, k))
        torus = max(torus, abs(average_over_torus(a0) - trace(a0)))
    return [
        _upper("central_average", "algebra", central, cfg.tol("averaging"), n),
        _upper("torus_average", "algebra", torus, cfg.tol("torus_average"), 3),
    ]


@check("algebra", "cqms")
def check_cqms(ctx: SuiteContext) -> List[PropertyResult]:
    one = identity(ctx.params, ctx.trunc)
    scalar = max(lip_seminorm(one * s) for s in (1.0, -2.5))
    trials = ctx.config.count("cqms")
    smallest = min(lip_seminorm(ctx.element(18, k, hermitian=True)) for k in range(trials))
    passed = scalar == 0.0 and smallest > 0.0
    return [
        PropertyResult(
            "cqms_lip_kernel", "algebra", passed, smallest, 0.0, ">", trials,
            f"L on scalars {scalar}",
        )
    ]


# -- representation ------------------------------------------------------------


@check("representation", "fiber_matrices")
def check_fiber_matrices(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    q = ctx.trunc.Q
    band = ctx.trunc.P // 2
    rng = ctx.rng(20)
    xs, ys = rng.uniform(0.0, 1.0, 8), rng.uniform(0.0, 1.0, 8)

    adjoint, homomorphism, twist = 0.0, 0.0, 0.0
    for k in range(cfg.count("homomorphism")):
        a, b = ctx.element(21, k, 0, band=band), ctx.element(21, k, 1, band=band)
        Ma = fiber_matrices(a, xs, ys, q)
        Mb = fiber_matrices(b, xs, ys, q)
        Mstar = fiber_matrices(involution(a), xs, ys, q)
        adjoint = max(adjoint, float(np.max(np.abs(Mstar - np.conj(np.swapaxes(Ma, 1, 2))))))

        inner = q - 2 * ctx.trunc.P
        rows = slice(q - inner, q + inner + 1)
        product = fiber_matrices(star(a, b), xs, ys, q)
        homomorphism = max(
            homomorphism, float(np.max(np.abs((product - Ma @ Mb)[:, rows, :])))
        )

        shifted = fiber_matrices(a, xs + 1.0, ys, q)
        for j, y in enumerate(ys):
            D = twist_unitary(ctx.params, y, q)
            expected = D[:, None] * Ma[j] * np.conj(D)[None, :]
            twist = max(twist, float(np.max(np.abs(shifted[j] - expected))))
    trials = cfg.count("homomorphism")
    return [
        _upper("adjoint_identity", "representation", adjoint, cfg.tol("identity"), trials),
        _upper(
            "interior_homomorphism", "representation", homomorphism, cfg.tol("homomorphism"), trials
        ),
        _upper("twist_equivalence", "representation", twist, cfg.tol("twist_equivalence"), trials),
    ]


@check("representation", "dense_oracle")
def check_dense_oracle(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    small_q = min(ctx.trunc.Q, MAX_ORACLE_Q)
    shape = (4, 4)
    points = [(i / shape[0], j / shape[1]) for i in range(shape[0]) for j in range(shape[1])]
    xs = np.array([x for x, _ in points])
    ys = np.array([y for _, y in points])
    worst, monotone = 0.0, 0.0
    for k in range(cfg.count("dense_oracle")):
        a = ctx.element(22, k)
        oracle = dense_operator_oracle(a, small_q, points)
        entries = float(np.max(np.abs(oracle - fiber_matrices(a, xs, ys, small_q))))
        estimate = cstar_norm_estimate(a, q=small_q, base_shape=shape, method="dense")
        worst = max(worst, entries, abs(oracle_norm(oracle) - estimate.value))

        coarse = cstar_norm_estimate(a, q=ctx.trunc.Q, base_shape=(8, 8), method="dense")
        fine = cstar_norm_estimate(a, q=2 * ctx.trunc.Q, base_shape=(8, 8), method="dense")
        monotone = max(monotone, coarse.value - fine.value)
    trials = cfg.count("dense_oracle")
    return [
        _upper("dense_oracle_agreement", "representation", worst, cfg.tol("dense_oracle"), trials),
        _upper("q_monotonicity", "representation", monotone, cfg.tol("monotone"), trials),
    ]


@check("representation", "norm_domination")
def check_norm_domination(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    trials = cfg.count("norm_domination")
    excess = -math.inf
    for k in range(trials):
        a = ctx.element(23, k)
        excess = max(excess, cstar_norm_estimate(a).value - sup_sum_norm(a).sup_sum)
    return [_upper("norm_domination", "representation", excess, cfg.tol("norm_domination"), trials)]


# -- metric --------------------------------------------------------------------


@check("metric", "zero_mode_gap")
def check_zero_mode_gap(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    trials = cfg.count("gap")
    worst, worst_p0 = 0.0, 0.0
    for k in range(trials):
        a = ctx.element(30, k, hermitian=True)
        mu = random_vector_state(ctx.seed(30, k, 1), ctx.params, ctx.trunc)
        worst = max(worst, zero_mode_gap(mu, a))
        worst_p0 = max(worst_p0, zero_mode_gap(mu, zero_mode(a)))
    return [
        _upper("zero_mode_gap", "metric", worst, GAP_LIMIT + cfg.tol("gap"), trials),
        _upper("zero_mode_gap_p0", "metric", worst_p0, 2.0 + cfg.tol("gap"), trials),
    ]


@check("metric", "radius")
def check_radius(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    trunc = ctx.solver_trunc
    m = max(cfg.count("radius_states"), 3)
    states = [random_vector_state(ctx.seed(31, k), ctx.params, trunc) for k in range(m)]
    forward = list(itertools.combinations(range(m), 2))
    backward = [(j, i) for i, j in forward[: cfg.count("symmetry_pairs")]]
    index_pairs = forward + backward
    report = radius_check(
        [(states[i], states[j]) for i, j in index_pairs],
        slack=cfg.tol("radius"),
        **ctx.solver_opts(31, 100),
    )
    d = {pair: result.bound for pair, result in zip(index_pairs, report.results)}

    def dist(i: int, j: int) -> float:
        return d[(i, j)] if i < j else d[(j, i)]

    symmetry = max((abs(d[(j, i)] - d[(i, j)]) for j, i in backward), default=0.0)
    triangle = max(
        dist(i, k) - dist(i, j) - dist(j, k)
        for i, j, k in itertools.permutations(range(m), 3)
    )
    witness = max(lip_seminorm(r.witness) for r in report.results) - 1.0
    exact = all(r.witness.is_selfadjoint() for r in report.results)
    same = distance_lower_bound(
        trace_state(), trace_state(), ctx.params, trunc, **ctx.solver_opts(31, 101)
    ).bound
    n_pairs = len(index_pairs)
    return [
        _upper("radius", "metric", report.max_bound, RADIUS_LIMIT + cfg.tol("radius"), n_pairs),
        _upper("iterate_gap", "metric", report.max_gap, GAP_LIMIT + cfg.tol("radius"), n_pairs),
        _lower("nonnegative", "metric", min(report.bounds), 0.0, n_pairs),
        _upper("symmetry", "metric", symmetry, cfg.tol("symmetry"), len(backward)),
        _upper("triangle", "metric", triangle, cfg.tol("triangle"), m * (m - 1) * (m - 2)),
        PropertyResult(
            "witness_validity", "metric", bool(exact and witness <= cfg.tol("witness")),
            witness, cfg.tol("witness"), "<=", n_pairs, "" if exact else "non self-adjoint witness",
        ),
        _upper("trace_self_distance", "metric", same, 0.0, 1),
    ]


def _localized_pair(ctx: SuiteContext, trunc: Truncation, width: float = 0.05):
    return (
        localized_state(ctx.params, trunc, 0.2, 0.5, width),
        localized_state(ctx.params, trunc, 0.4, 0.5, width),
    )


@check("metric", "program_scaling")
def check_program_scaling(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    trunc = ctx.solver_trunc
    mu, nu = _localized_pair(ctx, trunc)
    opts = ctx.solver_opts(32)
    full = distance_lower_bound(mu, nu, radius=1.0, **opts).bound
    half = distance_lower_bound(mu, nu, radius=0.5, **opts).bound
    results = [_upper("homogeneity", "metric", abs(half - 0.5 * full), cfg.tol("homogeneity"), 1)]

    if trunc.P > 0:
        # states spread over p = -P..P, so the wider program sees fibers beyond P
        wider = Truncation(P=trunc.P + 2, Nx=trunc.Nx, Ny=trunc.Ny, Q=max(trunc.Q, 2 * trunc.P + 4))
        limit = 2.0 / (2 * math.pi * trunc.P)
        drift = 0.0
        for k in range(2):
            a = random_vector_state(ctx.seed(32, k), ctx.params, trunc)
            b = random_vector_state(ctx.seed(32, k, 1), ctx.params, trunc)
            base = distance_lower_bound(a, b, trunc=trunc, **opts).bound
            more = distance_lower_bound(a, b, trunc=wider, **opts).bound
            drift = max(drift, abs(more - base))
        results.append(
            _upper("truncation_consistency", "metric", drift, limit, 2, f"P={trunc.P}")
        )
    return results


@check("metric", "polyhedral_sandwich")
def check_polyhedral(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    small = Truncation(P=1, Nx=8, Ny=8, Q=2)
    mu, nu = _localized_pair(ctx, small, width=0.1)
    program = LipBallProgram.from_states(mu, nu)
    solved = solve_program(program, **ctx.solver_opts(33))
    lp = polyhedral_distance(program)
    gap = max(solved.bound - lp.upper, math.cos(math.pi / lp.sides) * lp.upper - lp.lower)
    detail = f"solver {solved.bound:.6g}, lp [{lp.lower:.6g}, {lp.upper:.6g}]"
    return [
        _upper("polyhedral_sandwich", "metric", gap, cfg.tol("lp"), 1, detail),
        _lower("lp_lower_attained", "metric", solved.bound - lp.lower, -cfg.tol("lp"), 1, detail),
    ]


@check("metric", "faithfulness")
def check_faithfulness(ctx: SuiteContext) -> List[PropertyResult]:
    cfg = ctx.config
    trunc = ctx.solver_trunc
    mu, nu = _localized_pair(ctx, trunc)
    a = random_vector_state(ctx.seed(34, 0), ctx.params, trunc)
    b = random_vector_state(ctx.seed(34, 1), ctx.params, trunc)
    opts = ctx.solver_opts(34)
    same = max(distance_lower_bound(s, s, **opts).bound for s in (mu, a))
    apart = min(
        distance_lower_bound(mu, nu, **opts).bound, distance_lower_bound(a, b, **opts).bound
    )
    return [
        _upper("self_distance", "metric", same, 0.0, 2),
        _lower("faithfulness", "metric", apart, cfg.tol("faithfulness"), 2),
    ]


# -- running -------------------------------------------------------------------


def _run_check(ctx: SuiteContext, suite: str, name: str, fn: Check) -> List[PropertyResult]:
    logger.info(f"[{suite}] {name}")
    try:
        results = fn(ctx)
    except QHMError as e:
        logger.error(f"[{suite}] {name} raised {type(e).__name__}: {e}")
        return [PropertyResult(name, suite, False, math.nan, math.nan, "", 0, str(e))]
    for r in results:
        status = "ok" if r.passed else "FAILED"
        logger.info(f"  {r.name}: {r.measured:.3e} {r.relation} {r.threshold:.3e} {status}")
    return results


def run_suites(config: RunConfig, suite: str = "all", workers: int = 1) -> VerifyReport:
    """
    Run one suite (or all of them) and collect the results in registration order.

    Args:
        config: validated run configuration
        suite: "all" or one of SUITE_NAMES
        workers: number of checks run concurrently

    Returns:
        VerifyReport
    """
    if suite != "all" and suite not in SUITES:
        raise ConfigurationError(f"Unknown suite: {suite}")
    config.validate()
    names = SUITE_NAMES if suite == "all" else (suite,)
    jobs = [(name, check_name, fn) for name in names for check_name, fn in SUITES[name]]
    ctx = SuiteContext(config)
    logger.info(f"Running {len(jobs)} checks from suite '{suite}'")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda job: _run_check(ctx, *job), jobs))
    else:
        batches = [_run_check(ctx, *job) for job in jobs]
    results = [r for batch in batches for r in batch]
    return VerifyReport(suite=suite, results=results, config=config.to_dict())
