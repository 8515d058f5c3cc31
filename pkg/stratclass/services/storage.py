"""Run artifacts and scripted stream files

Per run: ``rounds.csv`` (one row per round), ``report.json`` and
``config-echo.json``. Per sweep: ``sweep.csv`` and ``sweep.json``. Floats are
written with 17 significant digits so every value reads back exactly.
"""

import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np
import pandas as pd

from stratclass.core.exceptions import ConfigError, EmitError, StratClassError
from stratclass.schemas.experiment import ExperimentConfig
from stratclass.schemas.report import RegretReport, SweepRow, SweepSummary
from stratclass.services.costs import CostSpec, make_cost_spec
from stratclass.services.environment import AgentProfile, ScriptedStream

if TYPE_CHECKING:
    from stratclass.services.harness import RoundRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
ROUNDS_FILE = "rounds.csv"
REPORT_FILE = "report.json"
CONFIG_ECHO_FILE = "config-echo.json"
SWEEP_CSV_FILE = "sweep.csv"
SWEEP_JSON_FILE = "sweep.json"


def round_columns(d: int) -> list[str]:
    return (
        ["t", "y", "loss", "cum_loss", "feedback_kind"]
        + [f"beta_plus_{j}" for j in range(1, d + 1)]
        + [f"xhat_{j}" for j in range(1, d + 1)]
    )


def records_frame(records: Sequence["RoundRecord"], d: int) -> pd.DataFrame:
    columns = round_columns(d)
    if not records:
        return pd.DataFrame(columns=columns)
    rows = [
        [r.t, r.y, r.loss, r.cum_loss, r.feedback_kind, *r.beta_plus.tolist(), *r.xhat.tolist()]
        for r in records
    ]
    return pd.DataFrame(rows, columns=columns)


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise EmitError(f"{path}: {exc}") from exc


def _prepare(directory: str | Path) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise EmitError(f"{directory}: cannot create output directory ({exc})") from exc
    return directory


def write_rounds(records: Sequence["RoundRecord"], d: int, directory: str | Path) -> Path:
    path = _prepare(directory) / ROUNDS_FILE
    frame = records_frame(records, d)
    _write_text(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
    return path


def emit(
    records: Sequence["RoundRecord"],
    report: RegretReport,
    directory: str | Path,
    config: ExperimentConfig,
    round_log: bool = True,
) -> list[Path]:
    """Write a run's artifacts, overwriting earlier ones.

    With ``round_log`` off the per-round CSV is skipped; the report and the
    config echo are always written.
    """
    directory = _prepare(directory)
    written = []
    if round_log:
        written.append(write_rounds(records, report.d, directory))

    report_path = directory / REPORT_FILE
    _write_text(report_path, report.model_dump_json(indent=2))
    written.append(report_path)

    echo_path = directory / CONFIG_ECHO_FILE
    echo = config.model_dump(mode="json", by_alias=True)
    _write_text(echo_path, json.dumps(echo, indent=2))
    written.append(echo_path)

    logger.info("artifacts written to %s", directory)
    return written


def read_rounds(path: str | Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except OSError as exc:
        raise EmitError(f"{path}: {exc}") from exc


def emit_sweep(rows: Sequence[SweepRow], summary: SweepSummary, directory: str | Path) -> list[Path]:
    directory = _prepare(directory)
    csv_path = directory / SWEEP_CSV_FILE
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=list(SweepRow.model_fields))
    _write_text(csv_path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))

    json_path = directory / SWEEP_JSON_FILE
    _write_text(json_path, summary.model_dump_json(indent=2))
    logger.info("sweep artifacts written to %s", directory)
    return [csv_path, json_path]


def load_scripted_stream(
    path: str | Path,
    d: int | None = None,
    R1: float | None = None,
    eps_floor: float | None = None,
) -> ScriptedStream:
    """Read an agent sequence from CSV.

    Columns: ``y``, ``x_1..x_d``, and for label −1 rows ``p``, ``r``, ``eps``
    and ``A_1..A_{d²}`` (row-major). Identical costs share one ``CostSpec``.
    Rows declaring ``eps`` below ``eps_floor`` are refused.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigError(f"{path}: cannot read scripted stream ({exc})") from exc

    feature_columns = [c for c in frame.columns if c.startswith("x_")]
    width = len(feature_columns)
    if d is None:
        d = width
    expected = [f"x_{j}" for j in range(1, d + 1)]
    if feature_columns != expected:
        raise ConfigError(f"{path}: expected feature columns x_1..x_{d}, got {feature_columns}")
    if "y" not in frame.columns:
        raise ConfigError(f"{path}: missing label column y")

    cost_columns = ["p", "r", "eps"] + [f"A_{k}" for k in range(1, d * d + 1)]
    X = frame[expected].to_numpy(dtype=float)
    labels = frame["y"].to_numpy()
    specs: dict[tuple, CostSpec] = {}

    profiles = []
    for i, (x, y) in enumerate(zip(X, labels), start=1):
        if y == -1:
            missing = [c for c in cost_columns if c not in frame.columns]
            if missing:
                raise ConfigError(f"{path}: label -1 rows need columns {missing}")
            values = frame.loc[frame.index[i - 1], cost_columns].to_numpy(dtype=float)
            if np.isnan(values).any():
                raise ConfigError(f"{path}, row {i}: incomplete cost for a label -1 agent")
            if eps_floor is not None and values[2] < eps_floor:
                raise ConfigError(f"{path}, row {i}: eps {values[2]:g} is below the experiment floor {eps_floor:g}")
            key = tuple(values.tolist())
            if key not in specs:
                try:
                    specs[key] = make_cost_spec(values[0], values[1], values[3:].reshape(d, d), values[2])
                except StratClassError as exc:
                    raise type(exc)(f"{path}, row {i}: {exc}") from exc
            profiles.append(AgentProfile(x=x, y=-1, cost=specs[key]))
        elif y == 1:
            profiles.append(AgentProfile(x=x, y=1))
        else:
            raise ConfigError(f"{path}, row {i}: label must be +1 or -1, got {y}")

    logger.info("scripted stream loaded from %s: %d agents", path, len(profiles))
    return ScriptedStream(profiles=tuple(profiles), d=d, R1=R1)
