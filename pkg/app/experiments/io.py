"""CSV and JSON artifacts of the experiment commands."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
from app.core.constants import OUTCOME_COLUMN, TREATMENT_COLUMN
from app.core.exceptions import ValidationError
from app.core.links import LinkFunction
from app.core.models import (
    ObservationFrame,
    StreamSchema,
    validate_stream_header,
)
from app.sequential.engine import BatchLogRow

logger = logging.getLogger(__name__)

# Enough digits for a float to survive a write-then-read unchanged
FLOAT_FORMAT = "%.17g"


def _first_bad_row(mask: pd.Series) -> int:
    """1-based data row number of the first True entry."""
    return int(np.argmax(mask.to_numpy())) + 1


def read_stream_csv(
    path: str | Path,
    link: LinkFunction = LinkFunction.LOGIT,
    require_treatment: bool = True,
) -> tuple[ObservationFrame, StreamSchema]:
    """Reads a `y,a,x1,...,xp` file in row order and validates every row.

    Row numbers in errors count data rows from 1, header excluded. With
    `require_treatment=False` the `a` column may be missing and is read as
    all-control."""
    try:
        # header row read raw so that duplicate names are not mangled
        header = pd.read_csv(
            path, header=None, nrows=1, dtype=str, keep_default_na=False
        )
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ValidationError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise ValidationError(f"{path} is not a well-formed CSV file: {e}")
    columns = [str(c).strip() for c in header.iloc[0]]
    df.columns = columns
    if not columns or columns[0] != OUTCOME_COLUMN:
        raise ValidationError(
            f"header must start with '{OUTCOME_COLUMN}', got {columns[:1]}"
        )
    has_treatment = len(columns) > 1 and columns[1] == TREATMENT_COLUMN
    if not has_treatment:
        if require_treatment:
            raise ValidationError(
                f"second header field must be '{TREATMENT_COLUMN}'"
            )
        df.insert(1, TREATMENT_COLUMN, "0")
        columns = list(df.columns)
    if df.empty:
        raise ValidationError(f"{path} has a header but no data rows")
    schema = validate_stream_header(len(columns) - 2, link, columns[2:])

    values = df.apply(lambda column: pd.to_numeric(column, errors="coerce"))
    unparsable = values.isna().any(axis=1)
    if unparsable.any():
        row = _first_bad_row(unparsable)
        bad = [c for c in columns if pd.isna(values[c].iloc[row - 1])]
        raise ValidationError(f"non-numeric value in {', '.join(bad)}", row=row)
    treatment = values[TREATMENT_COLUMN]
    bad_treatment = ~treatment.isin([0, 1])
    if bad_treatment.any():
        row = _first_bad_row(bad_treatment)
        raise ValidationError(
            "treatment indicator must be 0 or 1, got "
            f"{treatment.iloc[row - 1]:g}",
            row=row,
        )
    frame = ObservationFrame.from_arrays(
        values[OUTCOME_COLUMN].to_numpy(),
        treatment.to_numpy(),
        values[list(schema.covariate_names)].to_numpy(),
    )
    schema.check_frame(frame, first_row=1)
    logger.info(f"read {frame.n} rows with {schema.p} covariates from {path}")
    return frame, schema


def write_stream_csv(
    path: str | Path, frame: ObservationFrame, names=None
) -> Path:
    names = names or [f"x{j + 1}" for j in range(frame.p)]
    df = pd.DataFrame(frame.X, columns=list(names))
    df.insert(0, TREATMENT_COLUMN, frame.a)
    df.insert(0, OUTCOME_COLUMN, frame.y)
    return _write_csv(df, path)


def _write_csv(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_batch_log(path: str | Path, rows) -> Path:
    columns = list(BatchLogRow.__dataclass_fields__)
    df = pd.DataFrame([row.as_dict() for row in rows], columns=columns)
    return _write_csv(df, path)


def read_batch_log(path: str | Path) -> list[BatchLogRow]:
    df = pd.read_csv(path, dtype={"verdict": str})
    return [
        BatchLogRow(
            k=int(record["k"]),
            n_consumed=int(record["n_consumed"]),
            d_bar=float(record["d_bar"]),
            sigma_hat=float(record["sigma_hat"]),
            r_k=float(record["r_k"]),
            lambda_k=float(record["lambda_k"]),
            delta_hat=float(record["delta_hat"]),
            verdict=record["verdict"],
            skipped=bool(record["skipped"]),
        )
        for record in df.to_dict(orient="records")
    ]


def write_replicate_rows(path: str | Path, rows) -> Path:
    return _write_csv(pd.DataFrame([row.as_dict() for row in rows]), path)


def write_histogram(path: str | Path, histogram) -> Path:
    df = pd.DataFrame(histogram, columns=["bin", "count"])
    return _write_csv(df, path)


def write_json(path: str | Path, data: dict) -> Path:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as report_file:
        json.dump(data, report_file, indent=2, sort_keys=True)
        report_file.write("\n")
    return path


def read_json(path: str | Path) -> dict:
    with open(path) as report_file:
        return json.load(report_file)
