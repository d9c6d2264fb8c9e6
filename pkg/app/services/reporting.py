"""CSV writers. Headers are fixed and always written, even for empty runs."""

import logging
from pathlib import Path
from typing import Sequence

import pandas as pd
from pydantic import BaseModel

from app.schemas.reports import CheckResult, TradeoffRow
from app.schemas.training import TraceRow

logger = logging.getLogger(__name__)

TRADEOFF_COLUMNS = list(TradeoffRow.model_fields)
TRAINING_COLUMNS = list(TraceRow.model_fields)
VALIDATION_COLUMNS = list(CheckResult.model_fields)


def rows_frame(rows: Sequence[BaseModel], columns: list[str]) -> pd.DataFrame:
    """DataFrame with exactly ``columns``, enums as their string values."""
    return pd.DataFrame.from_records([row.model_dump(mode="json") for row in rows], columns=columns)


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """Write ``frame`` without index, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_tradeoff_csv(rows: Sequence[TradeoffRow], path: str | Path) -> Path:
    return write_csv(rows_frame(rows, TRADEOFF_COLUMNS), path)


def write_training_csv(rows: Sequence[TraceRow], path: str | Path) -> Path:
    return write_csv(rows_frame(rows, TRAINING_COLUMNS), path)


def write_validation_csv(results: Sequence[CheckResult], path: str | Path) -> Path:
    return write_csv(rows_frame(results, VALIDATION_COLUMNS), path)


def format_validation(results: Sequence[CheckResult]) -> str:
    """Human-readable summary, one line per check."""
    lines = []
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        line = f"[{status}] {result.check}"
        if result.value is not None:
            line += f": value={result.value:.6g}"
            if result.threshold is not None:
                line += f" threshold={result.threshold:.6g}"
        if result.detail:
            line += f" ({result.detail})"
        lines.append(line)
    failed = sum(not result.passed for result in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)
