"""
Command-line interface for qhm-metric.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from . import __version__
from .algebra import star
from .config import RunConfig
from .derivations import derivation_norms
from .element import ModelParams, Truncation, load_element, save_element
from .errors import ConfigurationError, QHMError
from .metric import distance_lower_bound
from .norms import sup_sum_norm
from .representation import cstar_norm_estimate, fiber_matrix
from .states import load_state
from .suites import SUITE_NAMES, export_report, run_suites
from .windowed import random_element


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1


def setup_logging(verbose: bool = False):
    """Configure logging for the application; logs go to stderr."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(levelname)s: %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)]
    )


def emit(payload: Dict[str, Any]):
    """Print a JSON result on stdout."""
    print(json.dumps(payload, indent=2, sort_keys=True))


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig.default()
    return RunConfig.load(path)


def cmd_verify(args):
    """Handle the 'verify' command."""
    config = load_config(args.config)
    if args.format:
        config.output.format = args.format
    if args.out:
        config.output.path = args.out
    config.validate()

    report = run_suites(config, suite=args.suite, workers=args.workers)
    report.save(config.output.path, config.output.format)

    for failure in report.failures:
        logger.error(
            f"{failure.suite}/{failure.name}: measured {failure.measured:.6g} "
            f"{failure.relation} {failure.threshold:.6g} does not hold"
        )
    emit({
        "suite": report.suite,
        "passed": report.passed,
        "properties": len(report.results),
        "failed": [f"{r.suite}/{r.name}" for r in report.failures],
        "report": config.output.path,
    })
    return EXIT_OK if report.passed else EXIT_PROPERTY_FAILURE


def cmd_norm(args):
    """Handle the 'norm' command."""
    el = load_element(args.element)
    if args.kind == "supsum":
        emit(sup_sum_norm(el).to_dict())
    elif args.kind == "cstar":
        emit(cstar_norm_estimate(el, q=args.q).to_dict())
    else:
        reports = derivation_norms(el)
        emit({
            "lip": max(r.sup_sum for r in reports),
            "derivations": [r.sup_sum for r in reports],
        })
    return EXIT_OK


def cmd_star(args):
    """Handle the 'star' command."""
    a = load_element(args.a)
    b = load_element(args.b)
    product = star(a, b)
    save_element(product, args.out)
    emit({"out": args.out, "band": product.band, "clamped": product.clamped})
    return EXIT_OK


def cmd_gen(args):
    """Handle the 'gen' command."""
    config = load_config(args.config)
    trunc = config.truncation
    if args.P is not None or args.N is not None:
        P = trunc.P if args.P is None else args.P
        N = trunc.Nx if args.N is None else args.N
        trunc = Truncation(P=P, Nx=N, Ny=N, Q=max(trunc.Q, 2 * P))
    el = random_element(args.seed, trunc, config.params, args.decay, band=args.band)
    save_element(el, args.out)
    emit({"out": args.out, "seed": args.seed, "decay": args.decay, "band": el.band})
    return EXIT_OK


def cmd_distance(args):
    """Handle the 'distance' command."""
    config = load_config(args.config)
    params: ModelParams = config.params
    trunc = config.solver.truncation
    mu = load_state(args.mu, params, trunc)
    nu = load_state(args.nu, params, trunc)

    result = distance_lower_bound(
        mu,
        nu,
        params=params,
        trunc=trunc,
        radius=args.radius,
        restarts=args.restarts or config.solver.restarts,
        iterations=args.iterations or config.solver.iterations,
        workers=args.workers or config.solver.workers,
        seed=args.seed,
    )
    witness_file = None
    if args.witness:
        witness_file = str(save_element(result.witness, args.witness))

    payload = {
        "states": [mu.label or mu.kind.value, nu.label or nu.kind.value],
        "bound": result.bound,
        "iterations": result.iterations,
        "stagnated": result.stagnated,
        "witness_file": witness_file,
    }
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as f:
            json.dump({**payload, **result.to_dict()}, f, indent=2, sort_keys=True)
        logger.info(f"Distance result written to {out}")
    emit(payload)
    return EXIT_OK


def cmd_fiber(args):
    """Handle the 'fiber' command."""
    el = load_element(args.element)
    matrix = fiber_matrix(el, args.x, args.y, q=args.q)
    matrix.save(args.out)
    emit({"out": args.out, "base": list(matrix.base), "norm": matrix.norm()})
    return EXIT_OK


def cmd_export(args):
    """Handle the 'export' command."""
    if args.format != "csv":
        raise ConfigurationError(f"Unsupported export format: {args.format}")
    out = args.out or str(Path(args.report).with_suffix(".csv"))
    export_report(args.report, out)
    emit({"out": out})
    return EXIT_OK


def main(argv=None):
    """Main entry point for the CLI."""
    parser = argparse.ArgumentParser(
        description="qhm-metric - quantum Heisenberg manifold algebra and state distances",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run every property suite on the shipped configuration
  qhm-metric verify --config configs/default.json

  # Sup-sum norm of an element file
  qhm-metric norm --element fixtures/identity.json --kind supsum

  # Random element, then its star square
  qhm-metric gen --seed 42 --decay 1.0 --out a.json
  qhm-metric star --a a.json --b a.json --out aa.json

  # Lower bound on the distance between two states
  qhm-metric distance --mu fixtures/state_near.json --nu fixtures/state_far.json

  # Flatten a verify report
  qhm-metric export --report report.json --format csv
        """
    )

    parser.add_argument(
        '--version',
        action='version',
        version=f'%(prog)s {__version__}'
    )

    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Enable verbose output'
    )

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # Verify command
    verify_parser = subparsers.add_parser('verify', help='Run the property suites')
    verify_parser.add_argument('--config', type=str, help='RunConfig JSON file (default: built-in)')
    verify_parser.add_argument(
        '--suite',
        choices=('all',) + SUITE_NAMES,
        default='all',
        help='Suite to run (default: all)'
    )
    verify_parser.add_argument('--out', type=str, help='Report path (overrides the config)')
    verify_parser.add_argument('--format', choices=('json', 'csv'), help='Report format')
    verify_parser.add_argument(
        '--workers',
        type=int,
        default=1,
        help='Checks run concurrently (default: 1)'
    )
    verify_parser.set_defaults(func=cmd_verify)

    # Norm command
    norm_parser = subparsers.add_parser('norm', help='Norms of an element')
    norm_parser.add_argument('--element', type=str, required=True, help='Element JSON file')
    norm_parser.add_argument(
        '--kind',
        choices=('supsum', 'cstar', 'lip'),
        default='supsum',
        help='Which norm to compute (default: supsum)'
    )
    norm_parser.add_argument('--q', type=int, help='Hilbert band for the C*-norm estimate')
    norm_parser.set_defaults(func=cmd_norm)

    # Star command
    star_parser = subparsers.add_parser('star', help='Star product of two elements')
    star_parser.add_argument('--a', type=str, required=True, help='Left factor')
    star_parser.add_argument('--b', type=str, required=True, help='Right factor')
    star_parser.add_argument('--out', type=str, required=True, help='Output element file')
    star_parser.set_defaults(func=cmd_star)

    # Gen command
    gen_parser = subparsers.add_parser('gen', help='Random windowed element')
    gen_parser.add_argument('--seed', type=int, required=True, help='Random seed')
    gen_parser.add_argument('--decay', type=float, default=1.0, help='Coefficient decay rate')
    gen_parser.add_argument('--band', type=int, help='Band of the element (default: P)')
    gen_parser.add_argument('--P', type=int, help='Truncation band P')
    gen_parser.add_argument('--N', type=int, help='Grid size Nx = Ny')
    gen_parser.add_argument('--config', type=str, help='Take params and truncation from a config')
    gen_parser.add_argument('--out', type=str, required=True, help='Output element file')
    gen_parser.set_defaults(func=cmd_gen)

    # Distance command
    distance_parser = subparsers.add_parser('distance', help='Lower bound on a state distance')
    distance_parser.add_argument('--mu', type=str, required=True, help='First state file')
    distance_parser.add_argument('--nu', type=str, required=True, help='Second state file')
    distance_parser.add_argument('--config', type=str, help='Take params and solver settings')
    distance_parser.add_argument('--restarts', type=int, help='Solver restarts')
    distance_parser.add_argument('--iterations', type=int, help='Iterations per restart')
    distance_parser.add_argument('--workers', type=int, help='Restarts run concurrently')
    distance_parser.add_argument('--seed', type=int, default=0, help='Solver seed (default: 0)')
    distance_parser.add_argument('--radius', type=float, default=1.0, help='Lip-ball radius')
    distance_parser.add_argument('--witness', type=str, help='Write the witness element here')
    distance_parser.add_argument('--out', type=str, help='Write the full result JSON here')
    distance_parser.set_defaults(func=cmd_distance)

    # Fiber command
    fiber_parser = subparsers.add_parser('fiber', help='Dump one fiber matrix as JSON')
    fiber_parser.add_argument('--element', type=str, required=True, help='Element JSON file')
    fiber_parser.add_argument('--x', type=float, required=True, help='Base point x')
    fiber_parser.add_argument('--y', type=float, required=True, help='Base point y')
    fiber_parser.add_argument('--q', type=int, help='Hilbert band (default: element Q)')
    fiber_parser.add_argument('--out', type=str, required=True, help='Output JSON file')
    fiber_parser.set_defaults(func=cmd_fiber)

    # Export command
    export_parser = subparsers.add_parser('export', help='Flatten a verify report')
    export_parser.add_argument('--report', type=str, required=True, help='JSON report')
    export_parser.add_argument('--format', choices=('csv',), default='csv', help='Output format')
    export_parser.add_argument('--out', type=str, help='Output path (default: report.csv)')
    export_parser.set_defaults(func=cmd_export)

    # Parse arguments
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(0)

    # Setup logging
    setup_logging(args.verbose)

    # Execute command
    try:
        code = args.func(args)
    except QHMError as e:
        logger.error(str(e))
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        sys.exit(e.exit_code)
    sys.exit(code)


if __name__ == '__main__':
    main()
