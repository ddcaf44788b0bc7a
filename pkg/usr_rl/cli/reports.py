"""
CSV and JSON artifacts written by the commands.
"""

import csv
import json
from pathlib import Path
from typing import IO, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel

from usr_rl.core.constants import CURVE_CSV_HEADER, TRAIN_LOG_HEADER
from usr_rl.core.errors import ContractError
from usr_rl.core.models import RobustCurveReport

PathLike = Union[str, Path]


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class TrainLogWriter:
    """Appends training log rows as they are produced.

    Each row is flushed immediately so an aborted run keeps every row
    written before the failure.
    """

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self._handle: Optional[IO[str]] = None
        self._writer = None

    def __enter__(self) -> "TrainLogWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(TRAIN_LOG_HEADER)
        self._handle.flush()
        return self

    def write(self, row: Dict[str, float]) -> None:
        if self._writer is None:
            raise ContractError("TrainLogWriter used outside its context")
        self._writer.writerow([_cell(row[key]) for key in TRAIN_LOG_HEADER])
        self._handle.flush()

    def __exit__(self, *exc) -> None:
        if self._handle is not None:
            self._handle.close()
        self._handle = None
        self._writer = None


def write_curve_csv(report: RobustCurveReport, path: PathLike) -> Path:
    """One row per perturbation value with the 5/10/15% quantile returns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVE_CSV_HEADER)
        for point in report.curve:
            row = point.model_dump()
            writer.writerow([_cell(row[key]) for key in CURVE_CSV_HEADER])
    return path


def write_json(model: BaseModel, path: PathLike) -> Path:
    """Pretty-printed JSON with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.model_dump(mode="json"), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_csv(path: PathLike, header: Sequence[str]) -> List[Dict[str, str]]:
    """Read a CSV written by this module, checking its header.

    Raises:
        ContractError: The header differs from ``header``.
    """
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if list(reader.fieldnames or []) != list(header):
            raise ContractError(f"{path}: header {reader.fieldnames} != {list(header)}")
        return list(reader)
