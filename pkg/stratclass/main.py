"""Command-line entry point

    stratclass run --config exp.json [--seed N] [--out DIR] [--no-round-log]
    stratclass sweep --config exp.json --n-grid 1000,10000 --theta-grid 0,1 [--replicates K]
    stratclass validate --config exp.json
    stratclass oracle {best-response,conjugate,hindsight,grid-hindsight} ...

Results go to stdout as JSON, logs to stderr. Any package error exits with 1.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from stratclass import __version__
from stratclass.core.config import settings
from stratclass.core.exceptions import StratClassError
from stratclass.core.logging import setup_logging
from stratclass.schemas.experiment import load_config
from stratclass.services.baseline import (
    grid_conjugate_value,
    grid_hindsight_optimum,
    hindsight_optimum,
    numeric_best_response,
)
from stratclass.services.bounds import (
    dimension_exponent,
    predicted_rate_exponent,
    regret_bound,
    relaxed_regret_bound,
    restriction_gap,
    simplified_regret_bound,
    smoothing_gap,
)
from stratclass.services.costs import best_response, conjugate_subgradient, conjugate_value, make_cost_spec
from stratclass.services.harness import cost_family, prepare, run_experiment, sweep
from stratclass.services.storage import emit

logger = logging.getLogger(__name__)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _matrix(text: str) -> list[list[float]]:
    """Rows separated by ';', entries by ','."""
    return [_floats(row) for row in text.split(";") if row.strip()]


def _print(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = args.out or config.output_dir or settings.OUTPUT_DIR
    records, report = run_experiment(config, seed=args.seed, output_dir=out)
    emit(records, report, out, config, round_log=config.round_log and not args.no_round_log)
    _print(report.model_dump(mode="json"))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = args.out or config.output_dir or settings.OUTPUT_DIR
    _, summary = sweep(
        config,
        n_values=args.n_grid,
        theta_values=args.theta_grid,
        replicates=args.replicates,
        workers=args.workers,
        output_dir=out,
    )
    _print(summary.model_dump(mode="json"))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    setup = prepare(config)
    schedule = setup.schedule
    payload = {
        "n": schedule.n,
        "d": schedule.d,
        "theta_realized": setup.realized.theta_realized,
        "theta_hat": schedule.theta_hat,
        "delta": schedule.delta,
        "eta": schedule.eta,
        "M": setup.constants.M,
        "L": setup.constants.L,
        "C": setup.constants.C,
        "regret_bound": regret_bound(schedule, setup.realized.theta_realized),
        "simplified_regret_bound": simplified_regret_bound(
            schedule.n, schedule.d, schedule.M, schedule.L, schedule.R, setup.realized.theta_realized
        ),
        "relaxed_regret_bound": relaxed_regret_bound(
            schedule.n, schedule.d, schedule.M, schedule.L, schedule.R, schedule.theta_hat
        ),
        "smoothing_gap": smoothing_gap(schedule.L, schedule.delta),
        "restriction_gap": restriction_gap(schedule.n, schedule.L, schedule.R, schedule.delta),
        "predicted_rate_exponent": predicted_rate_exponent(setup.realized.theta_realized, schedule.n),
    }
    if config.cost.r > 1.0:
        payload["dimension_exponent"] = dimension_exponent(cost_family(config).base_spec())
    _print(payload)
    return 0


def cmd_best_response(args: argparse.Namespace) -> int:
    spec = make_cost_spec(args.p, args.r, args.A, args.eps)
    response = best_response(spec, args.x, args.beta)
    payload = {"xhat": response.xhat.tolist(), "inner": response.inner}
    if args.numeric:
        payload["numeric_xhat"] = numeric_best_response(spec, args.x, args.beta).tolist()
    _print(payload)
    return 0


def cmd_conjugate(args: argparse.Namespace) -> int:
    spec = make_cost_spec(args.p, args.r, args.A, args.eps)
    payload = {
        "value": float(conjugate_value(spec, args.beta)),
        "subgradient": conjugate_subgradient(spec, args.beta).tolist(),
    }
    if args.grid:
        payload["grid_value"] = grid_conjugate_value(spec, args.beta)
    _print(payload)
    return 0


def _solution_payload(solution) -> dict:
    return {
        "beta_star": np.asarray(solution.beta_star).tolist(),
        "total_loss": solution.total_loss,
        "certified_gap": solution.certified_gap,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "rounds": solution.rounds,
    }


def cmd_hindsight(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    setup = prepare(config)
    solution = hindsight_optimum(
        setup.realized.profiles,
        config.loss,
        config.R2,
        iterations=args.iterations or config.baseline.iterations,
        tol=args.tol or config.baseline.tol,
        d=config.d,
    )
    _print(_solution_payload(solution))
    return 0


def cmd_grid_hindsight(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    setup = prepare(config)
    solution = grid_hindsight_optimum(
        setup.realized.profiles, config.loss, config.R2, args.resolution, d=config.d
    )
    _print(_solution_payload(solution))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.PROJECT_NAME, description="Online classification against strategic agents"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides STRATCLASS_LOG_LEVEL")
    parser.add_argument("--json-logs", action="store_true", default=None, help="JSON log lines")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one seeded experiment")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--no-round-log", action="store_true", help="skip rounds.csv")
    run.set_defaults(handler=cmd_run)

    grid = commands.add_parser("sweep", help="replicated runs over a theta x n grid")
    grid.add_argument("--config", required=True, type=Path)
    grid.add_argument("--n-grid", required=True, type=_ints)
    grid.add_argument("--theta-grid", required=True, type=_floats)
    grid.add_argument("--replicates", type=int, default=None)
    grid.add_argument("--workers", type=int, default=None)
    grid.add_argument("--out", type=Path, default=None)
    grid.set_defaults(handler=cmd_sweep)

    validate = commands.add_parser("validate", help="check a config and print the derived schedule")
    validate.add_argument("--config", required=True, type=Path)
    validate.set_defaults(handler=cmd_validate)

    oracle = commands.add_parser("oracle", help="closed-form and brute-force oracles")
    oracles = oracle.add_subparsers(dest="oracle", required=True)

    for name, handler in (("best-response", cmd_best_response), ("conjugate", cmd_conjugate)):
        sub = oracles.add_parser(name)
        sub.add_argument("--p", type=float, required=True)
        sub.add_argument("--r", type=float, required=True)
        sub.add_argument("--A", type=_matrix, required=True, help="rows separated by ';'")
        sub.add_argument("--eps", type=float, default=1e-6)
        sub.add_argument("--beta", type=_floats, required=True)
        sub.set_defaults(handler=handler)
        if name == "best-response":
            sub.add_argument("--x", type=_floats, required=True)
            sub.add_argument("--numeric", action="store_true", help="also run gradient ascent")
        else:
            sub.add_argument("--grid", action="store_true", help="also compute the grid supremum")

    hindsight = oracles.add_parser("hindsight")
    hindsight.add_argument("--config", required=True, type=Path)
    hindsight.add_argument("--iterations", type=int, default=None)
    hindsight.add_argument("--tol", type=float, default=None)
    hindsight.set_defaults(handler=cmd_hindsight)

    grid_hindsight = oracles.add_parser("grid-hindsight")
    grid_hindsight.add_argument("--config", required=True, type=Path)
    grid_hindsight.add_argument("--resolution", type=float, required=True)
    grid_hindsight.set_defaults(handler=cmd_grid_hindsight)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.json_logs)
    try:
        return args.handler(args)
    except StratClassError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
