"""Experiment orchestration

``run_experiment`` plays the leader-follower protocol round by round:

1. the learner commits to β⁺_t,
2. the agent reports x̂_t (truthful for +1, best response for −1),
3. the learner suffers c(x̂_t, y_t, β⁺_t) and takes its step,

then solves the hindsight baseline on the realized agents and reports the
Stackelberg regret. ``sweep`` repeats this over a (θ, n) grid with replicates.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from stratclass.core.config import settings
from stratclass.core.exceptions import ConfigError, LengthMismatch, StratClassError, UnboundedResponse
from stratclass.schemas.experiment import ExperimentConfig
from stratclass.schemas.report import Checkpoint, RegretReport, SweepCell, SweepRow, SweepSummary, ThetaFit
from stratclass.services.baseline import HindsightSolution, hindsight_optimum
from stratclass.services.bounds import predicted_rate_exponent, regret_bound, simplified_regret_bound
from stratclass.services.environment import (
    CostFamily,
    RealizedStream,
    StochasticStream,
    realize_stream,
    respond,
)
from stratclass.services.losses import LossConstants, experiment_constants
from stratclass.services.optimizer import Learner, Schedule, make_schedule
from stratclass.services.storage import emit_sweep, load_scripted_stream, write_rounds
from stratclass.utils.rng import learner_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundRecord:
    t: int
    y: int
    loss: float
    cum_loss: float
    feedback_kind: str
    beta_plus: np.ndarray
    xhat: np.ndarray


@dataclass(frozen=True)
class Setup:
    """Everything a run derives before its first round."""

    realized: RealizedStream
    constants: LossConstants
    schedule: Schedule


def cost_family(config: ExperimentConfig) -> CostFamily:
    return CostFamily(
        p=config.cost.p,
        r=config.cost.r,
        A=np.array(config.transform(), dtype=float),
        eps=config.cost.eps,
        randomize_transform=config.cost.randomize_transform,
        condition=config.cost.condition,
    )


def build_stream(config: ExperimentConfig, seed: int | None = None, cell: int = 0):
    if config.stream.scripted is not None:
        return load_scripted_stream(
            config.stream.scripted, d=config.d, R1=config.R1, eps_floor=config.min_eps()
        )

    stochastic = config.stream.stochastic
    return StochasticStream(
        n=config.n,
        d=config.d,
        R1=config.R1,
        theta=stochastic.theta,
        cost_family=cost_family(config),
        seed=config.seed if seed is None else seed,
        cell=cell,
        sampler=stochastic.sampler,
        separation=stochastic.separation,
        spread=stochastic.spread,
        clip=stochastic.clip,
    )


def prepare(
    config: ExperimentConfig,
    seed: int | None = None,
    cell: int = 0,
    realized: RealizedStream | None = None,
) -> Setup:
    """Realize the stream and derive the loss constants and the schedule."""
    if realized is None:
        realized = realize_stream(build_stream(config, seed, cell))
    if config.stream.scripted is not None and config.n is not None and config.n != len(realized):
        raise ConfigError(f"config says n={config.n} but the scripted stream has {len(realized)} rounds")
    if len(realized) == 0:
        raise ConfigError("the agent stream is empty")

    specs = realized.distinct_costs()
    stochastic = config.stream.stochastic
    if stochastic is not None and stochastic.theta > 0.0:
        specs.append(cost_family(config).base_spec())
    constants = experiment_constants(specs, config.loss, config.R1, config.R2)

    theta_hat = config.resolve_theta_hat(realized.theta_realized)
    if theta_hat < realized.theta_realized:
        logger.warning(
            "theta_hat %.4f is below the realized strategic fraction %.4f",
            theta_hat,
            realized.theta_realized,
        )
    schedule = make_schedule(len(realized), config.d, config.R2, constants.M, constants.L, theta_hat)
    logger.info(
        "schedule: n=%d d=%d theta_hat=%.4f delta=%.6g eta=%.6g M=%.6g L=%.6g",
        schedule.n,
        schedule.d,
        theta_hat,
        schedule.delta,
        schedule.eta,
        constants.M,
        constants.L,
    )
    return Setup(realized=realized, constants=constants, schedule=schedule)


def play_rounds(agents: Sequence, learner: Learner, records: list[RoundRecord]) -> list[RoundRecord]:
    """Run the protocol over ``agents``, appending to ``records`` as rounds finish.

    The learner only receives the environment's ``Observation``.
    """
    cum_loss = records[-1].cum_loss if records else 0.0
    for t, agent in enumerate(agents, start=len(records) + 1):
        beta_plus = learner.play()
        observation = respond(agent, beta_plus)
        outcome = learner.observe(observation)
        cum_loss += outcome.loss
        records.append(
            RoundRecord(
                t=t,
                y=observation.y,
                loss=outcome.loss,
                cum_loss=cum_loss,
                feedback_kind=outcome.feedback_kind,
                beta_plus=beta_plus,
                xhat=observation.xhat,
            )
        )
    return records


def checkpoint_rounds(n: int) -> list[int]:
    """Powers of two up to n, then n itself."""
    rounds = [1 << k for k in range(n.bit_length()) if (1 << k) <= n]
    if not rounds or rounds[-1] != n:
        rounds.append(n)
    return rounds


def prefix_baselines(
    config: ExperimentConfig, realized: RealizedStream, rounds: Sequence[int]
) -> dict[int, HindsightSolution]:
    """Hindsight optimum over the first t agents for each t in ``rounds``."""
    return {
        t: hindsight_optimum(
            realized.profiles[:t],
            config.loss,
            config.R2,
            iterations=config.baseline.iterations,
            tol=config.baseline.tol,
            d=config.d,
        )
        for t in rounds
    }


def stackelberg_regret(records: Sequence[RoundRecord], baseline: HindsightSolution) -> float:
    """Σ suffered loss − min_β Σ c_t(β), agents re-responding to the comparator."""
    if len(records) != baseline.rounds:
        raise LengthMismatch(f"{len(records)} round records but the baseline covers {baseline.rounds} rounds")
    return float(math.fsum(record.loss for record in records)) - baseline.total_loss


def fit_slope(horizons: Sequence[float], regrets: Sequence[float | None]) -> float | None:
    """Slope of log regret against log n over the points with positive regret."""
    points = [(h, r) for h, r in zip(horizons, regrets) if r is not None and r > 0.0 and h > 0]
    if len({h for h, _ in points}) < 2:
        return None
    x = np.log([h for h, _ in points])
    y = np.log([r for _, r in points])
    return float(linregress(x, y).slope)


def build_report(
    records: Sequence[RoundRecord],
    setup: Setup,
    baselines: dict[int, HindsightSolution],
    seed: int,
    d: int,
) -> RegretReport:
    n = len(records)
    cumulative = [record.cum_loss for record in records]
    checkpoints = [
        Checkpoint(
            t=t,
            cum_loss=cumulative[t - 1],
            baseline_loss=solution.total_loss,
            baseline_gap=solution.certified_gap,
            regret=stackelberg_regret(records[:t], solution),
        )
        for t, solution in sorted(baselines.items())
    ]
    final = baselines[n]
    schedule = setup.schedule
    return RegretReport(
        n=n,
        d=d,
        theta_realized=setup.realized.theta_realized,
        theta_hat=schedule.theta_hat,
        delta=schedule.delta,
        eta=schedule.eta,
        M=setup.constants.M,
        L=setup.constants.L,
        C=setup.constants.C,
        cum_loss=cumulative[-1] if cumulative else 0.0,
        baseline_loss=final.total_loss,
        baseline_gap=final.certified_gap,
        regret=stackelberg_regret(records, final),
        checkpoints=checkpoints,
        gamma_fit=fit_slope([c.t for c in checkpoints], [c.regret for c in checkpoints]),
        seed=seed,
    )


def run_experiment(
    config: ExperimentConfig,
    seed: int | None = None,
    output_dir: str | Path | None = None,
    *,
    cell: int = 0,
    replicate: int = 0,
    realized: RealizedStream | None = None,
    baselines: dict[int, HindsightSolution] | None = None,
) -> tuple[list[RoundRecord], RegretReport]:
    """One seeded run; returns the round records and the regret report.

    ``realized`` and ``baselines`` let replicates reuse a stream and its
    hindsight optima. If an agent's response is unbounded the rounds played
    so far are written to ``output_dir`` before the error propagates.
    """
    seed = config.seed if seed is None else seed
    setup = prepare(config, seed, cell, realized)
    n = setup.schedule.n
    logger.info("run started: n=%d seed=%d cell=%d replicate=%d", n, seed, cell, replicate)

    learner = Learner(config.loss, setup.schedule, learner_generator(seed, cell, replicate))
    records: list[RoundRecord] = []
    try:
        play_rounds(setup.realized.profiles, learner, records)
    except UnboundedResponse:
        logger.error("run aborted in round %d: unbounded agent response", len(records) + 1)
        if output_dir is not None:
            write_rounds(records, config.d, output_dir)
        raise

    if baselines is None:
        rounds = checkpoint_rounds(n) if config.baseline.checkpoints else [n]
        try:
            baselines = prefix_baselines(config, setup.realized, rounds)
        except StratClassError:
            logger.error("hindsight baseline failed after all %d rounds were played", len(records))
            if output_dir is not None:
                write_rounds(records, config.d, output_dir)
            raise
    report = build_report(records, setup, baselines, seed, config.d)
    logger.info("run finished: cum_loss=%.10g regret=%.10g", report.cum_loss, report.regret)
    return records, report


def report_schedule(report: RegretReport, R: float) -> Schedule:
    return Schedule(
        n=report.n,
        d=report.d,
        R=R,
        M=report.M,
        L=report.L,
        theta_hat=report.theta_hat,
        delta=report.delta,
        eta=report.eta,
    )


def run_cell(config: ExperimentConfig, cell: int, replicates: int) -> list[SweepRow]:
    """All replicates of one (θ, n) cell, sharing the realized stream and baseline."""
    theta = config.stream.stochastic.theta
    try:
        setup = prepare(config, cell=cell)
        n = setup.schedule.n
        baselines = prefix_baselines(config, setup.realized, [n])
    except StratClassError as exc:
        logger.warning("sweep cell %d (theta=%g, n=%d) failed: %s", cell, theta, config.n, exc)
        return [SweepRow(cell=cell, replicate=0, n=config.n, theta=theta, error=str(exc))]

    rows = []
    for replicate in range(replicates):
        try:
            _, report = run_experiment(
                config, cell=cell, replicate=replicate, realized=setup.realized, baselines=baselines
            )
        except StratClassError as exc:
            logger.warning("sweep cell %d replicate %d failed: %s", cell, replicate, exc)
            rows.append(SweepRow(cell=cell, replicate=replicate, n=config.n, theta=theta, error=str(exc)))
            continue
        rows.append(
            SweepRow(
                cell=cell,
                replicate=replicate,
                n=report.n,
                theta=theta,
                theta_realized=report.theta_realized,
                theta_hat=report.theta_hat,
                cum_loss=report.cum_loss,
                baseline_loss=report.baseline_loss,
                baseline_gap=report.baseline_gap,
                regret=report.regret,
                regret_bound=regret_bound(report_schedule(report, config.R2), report.theta_realized),
                simplified_bound=simplified_regret_bound(
                    report.n, report.d, report.M, report.L, config.R2, report.theta_realized
                ),
            )
        )
    return rows


def _run_cell_job(job: tuple[ExperimentConfig, int, int]) -> list[SweepRow]:
    return run_cell(*job)


def summarize(rows: Sequence[SweepRow], theta_values: Sequence[float], n_values: Sequence[int], seed: int) -> SweepSummary:
    cells = []
    for theta in theta_values:
        for n in n_values:
            group = [row for row in rows if row.theta == theta and row.n == n]
            regrets = np.array([row.regret for row in group if row.regret is not None])
            bounds = [row.regret_bound for row in group if row.regret_bound is not None]
            simplified = [row.simplified_bound for row in group if row.simplified_bound is not None]
            gaps = [row.baseline_gap for row in group if row.baseline_gap is not None]
            cells.append(
                SweepCell(
                    theta=theta,
                    n=n,
                    replicates=len(regrets),
                    mean_regret=float(regrets.mean()) if len(regrets) else None,
                    std_regret=float(regrets.std(ddof=1)) if len(regrets) > 1 else None,
                    regret_bound=max(bounds) if bounds else None,
                    simplified_bound=max(simplified) if simplified else None,
                    baseline_gap=max(gaps) if gaps else None,
                )
            )

    fits = []
    for theta in theta_values:
        group = [cell for cell in cells if cell.theta == theta]
        fits.append(
            ThetaFit(
                theta=theta,
                gamma_fit=fit_slope([c.n for c in group], [c.mean_regret for c in group]),
                predicted_exponent=predicted_rate_exponent(theta),
            )
        )
    return SweepSummary(seed=seed, cells=cells, fits=fits)


def sweep(
    config: ExperimentConfig,
    n_values: Sequence[int],
    theta_values: Sequence[float],
    replicates: int | None = None,
    workers: int | None = None,
    output_dir: str | Path | None = None,
) -> tuple[list[SweepRow], SweepSummary]:
    """Seeded runs over the θ × n grid; failed cells are recorded, not fatal.

    Cells are numbered θ-major and each cell draws its own stream. Results
    are reduced in cell order whatever the number of workers.
    """
    if not n_values or not theta_values:
        raise ConfigError("sweep needs at least one n and one theta")
    replicates = config.replicates if replicates is None else replicates
    workers = settings.SWEEP_WORKERS if workers is None else workers

    jobs = []
    for theta in theta_values:
        for n in n_values:
            jobs.append((config.with_cell(n, theta), len(jobs), replicates))
    logger.info("sweep started: %d cells x %d replicates, %d workers", len(jobs), replicates, workers)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_job, jobs))
    else:
        results = [_run_cell_job(job) for job in jobs]
    rows = [row for cell_rows in results for row in cell_rows]

    summary = summarize(rows, theta_values, n_values, config.seed)
    if output_dir is not None:
        emit_sweep(rows, summary, output_dir)
    logger.info("sweep finished: %d rows", len(rows))
    return rows, summary
