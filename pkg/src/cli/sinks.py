"""Streaming CSV writer for run diagnostics."""

import logging
from pathlib import Path
from types import TracebackType
from typing import IO, List, Optional, Type, Union

from ..exceptions import OutputError
from ..models.records import SERIES_COLUMNS, EnergyRecord

logger = logging.getLogger(__name__)


def format_value(value: float) -> str:
    """Shortest round-trip decimal for a float."""
    return repr(float(value))


class CsvDiagnosticsSink:
    """
    Writes records to ``series.csv`` as they arrive.

    The header is written exactly once, when the file is opened. Records
    are also kept in memory when ``keep_records`` is set so the caller can
    plot or post-process the emitted rows.
    """

    def __init__(self, path: Union[str, Path], keep_records: bool = True) -> None:
        self.path = Path(path)
        self.keep_records = keep_records
        self.records: List[EnergyRecord] = []
        self._handle: Optional[IO[str]] = None
        self._last_t: Optional[float] = None

    def open(self) -> "CsvDiagnosticsSink":
        try:
            self._handle = self.path.open("w", encoding="utf-8", newline="")
            self._handle.write(",".join(SERIES_COLUMNS) + "\n")
        except OSError as e:
            raise OutputError(
                "Could not open series file",
                details={"path": str(self.path), "error": str(e)}
            ) from e
        return self

    def write(self, record: EnergyRecord) -> None:
        if self._handle is None:
            self.open()
        if self._last_t is not None and record.t < self._last_t:
            raise OutputError(
                "Records must arrive in time order",
                details={"previous_t": self._last_t, "t": record.t}
            )
        assert self._handle is not None
        try:
            self._handle.write(",".join(format_value(v) for v in record.as_row()) + "\n")
        except OSError as e:
            raise OutputError(
                "Could not write series row",
                details={"path": str(self.path), "error": str(e)}
            ) from e
        self._last_t = record.t
        if self.keep_records:
            self.records.append(record)

    def close(self) -> None:
        if self._handle is None:
            return
        try:
            self._handle.close()
        except OSError as e:
            raise OutputError(
                "Could not close series file",
                details={"path": str(self.path), "error": str(e)}
            ) from e
        finally:
            self._handle = None
        logger.debug("Series written", extra={"path": str(self.path), "rows": len(self.records)})

    def __enter__(self) -> "CsvDiagnosticsSink":
        return self.open()

    def __exit__(self, exc_type: Optional[Type[BaseException]], exc: Optional[BaseException],
                 tb: Optional[TracebackType]) -> None:
        self.close()
