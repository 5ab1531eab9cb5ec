"""
CSV ingestion for longitudinal datasets.

Expected header: ``id``, ``time``, the outcome column, then the declared
regression and clustering covariates (any order, extra columns ignored).
Row numbers in errors count data rows from 1 (the header is not counted).
"""

import logging
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from ..models.dataset import LongitudinalDataset
from ..models.errors import DataError
from ..models.model_spec import ModelSpec

ID_COLUMN = "id"
TIME_COLUMN = "time"

logger = logging.getLogger(__name__)


def _numeric(frame: pd.DataFrame, name: str) -> np.ndarray:
    raw = frame[name].str.strip()
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        cell = raw.iloc[row]
        problem = "missing value" if cell == "" else f"non-numeric value '{cell}'"
        raise DataError(f"{problem} in column '{name}'", row=row + 1)
    return values.to_numpy(dtype=float)


def _categorical(frame: pd.DataFrame, name: str):
    raw = frame[name].str.strip()
    empty = raw == ""
    if empty.any():
        raise DataError(f"missing value in column '{name}'", row=int(np.flatnonzero(empty.to_numpy())[0]) + 1)
    codes, levels = pd.factorize(raw, sort=False)
    return codes.astype(np.int64), [str(level) for level in levels]


def ingest_csv(path: Path, spec: ModelSpec) -> LongitudinalDataset:
    """
    Read and validate a longitudinal CSV file.

    Individuals are numbered in first-appearance order; categorical clustering
    covariates are label-encoded in first-appearance order with the level
    names kept on the dataset.

    Raises:
        DataError: Missing column, missing/non-numeric cell or duplicate (id, time) pair
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse {path}: {e}") from e
    frame.columns = [str(column).strip() for column in frame.columns]

    required: List[str] = [ID_COLUMN, TIME_COLUMN, spec.outcome, *spec.x_cols, *spec.u_cont_cols, *spec.u_cat_cols]
    missing = [name for name in required if name not in frame.columns]
    if missing:
        raise DataError(f"{path.name} is missing required columns: {', '.join(missing)}")
    if frame.empty:
        raise DataError(f"{path.name} has no data rows")

    ids = frame[ID_COLUMN].str.strip()
    if (ids == "").any():
        raise DataError("missing value in column 'id'", row=int(np.flatnonzero((ids == "").to_numpy())[0]) + 1)
    time = _numeric(frame, TIME_COLUMN)
    duplicated = pd.DataFrame({"id": ids, "time": time}).duplicated()
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0])
        raise DataError(f"duplicate (id, time) pair ({ids.iloc[row]}, {time[row]:g})", row=row + 1)

    individual, individual_ids = pd.factorize(ids, sort=False)
    y = _numeric(frame, spec.outcome)
    n = len(frame)
    X = np.column_stack([_numeric(frame, name) for name in spec.x_cols]) if spec.x_cols else np.zeros((n, 0))
    U_cont = (np.column_stack([_numeric(frame, name) for name in spec.u_cont_cols])
              if spec.u_cont_cols else np.zeros((n, 0)))
    encoded = [_categorical(frame, name) for name in spec.u_cat_cols]
    U_cat = np.column_stack([codes for codes, _ in encoded]) if encoded else np.zeros((n, 0), dtype=np.int64)

    data = LongitudinalDataset(
        y=y, time=time, individual=individual, X=X, x_names=list(spec.x_cols),
        U_cont=U_cont, u_cont_names=list(spec.u_cont_cols),
        U_cat=U_cat, u_cat_names=list(spec.u_cat_cols),
        n_categories=[len(levels) for _, levels in encoded],
        individual_ids=[str(value) for value in individual_ids],
        cat_levels=[levels for _, levels in encoded],
    )
    logger.info(f"Ingested {data.n} observations of {data.m} individuals from {path}")
    return data


def write_dataset_csv(data: LongitudinalDataset, path: Path, outcome: str = "y") -> Path:
    """Write a dataset in the ingestion schema (round-trips through :func:`ingest_csv`)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {
        ID_COLUMN: [data.individual_ids[j] for j in data.individual],
        TIME_COLUMN: data.time,
        outcome: data.y,
    }
    for k, name in enumerate(data.x_names):
        columns[name] = data.X[:, k]
    for k, name in enumerate(data.u_cont_names):
        columns[name] = data.U_cont[:, k]
    for k, name in enumerate(data.u_cat_names):
        levels = data.cat_levels[k]
        columns[name] = [levels[code] for code in data.U_cat[:, k]]
    pd.DataFrame(columns).to_csv(path, index=False, encoding="utf-8")
    return path
