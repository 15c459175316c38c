"""
Run Config File Adapter Pattern

Provides a common interface for reading and writing run configurations in
different file formats, plus the CSV writer used for result tables.
Currently supports JSON, with the structure ready to add more formats.
"""
import csv
import json
import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from app.core.exceptions import OutputError, UsageError
from app.models.schemas import RunConfig

logger = logging.getLogger(__name__)


class RunConfigFileAdapter(ABC):
    """
    Abstract base class for run configuration file adapters.

    Each adapter knows how to turn a specific file format into a validated
    RunConfig and back.
    """

    @abstractmethod
    def parse(self, content: bytes) -> RunConfig:
        """
        Parse file content into a run configuration.

        Raises:
            UsageError: If the content is malformed or fails validation
        """
        pass

    @abstractmethod
    def emit(self, config: RunConfig) -> str:
        pass

    @property
    @abstractmethod
    def supported_extension(self) -> str:
        """Return the file extension this adapter handles (e.g., '.json')."""
        pass


class JsonRunConfigAdapter(RunConfigFileAdapter):
    """
    Adapter for JSON run configurations.

    Expected layout (every section optional):
    {"protocol": {...}, "sweep": {...}, "mc": {...}, "output": {...}}
    """

    @property
    def supported_extension(self) -> str:
        return '.json'

    def parse(self, content: bytes) -> RunConfig:
        try:
            raw = json.loads(content.decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise UsageError(f"Invalid JSON run configuration: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("Run configuration must be a JSON object")
        try:
            return RunConfig.model_validate(raw)
        except ValidationError as exc:
            raise UsageError(f"Invalid run configuration: {exc}") from exc

    def emit(self, config: RunConfig) -> str:
        return config.model_dump_json(indent=2)


# Registry of available adapters
RUN_CONFIG_ADAPTERS: dict[str, RunConfigFileAdapter] = {
    '.json': JsonRunConfigAdapter(),
}


def get_adapter_for_file(filename: str) -> RunConfigFileAdapter | None:
    """
    Get the appropriate adapter for a file based on its extension.

    Returns:
        Adapter instance or None if the format is not supported
    """
    return RUN_CONFIG_ADAPTERS.get(Path(filename).suffix.lower())


def get_supported_formats() -> list[str]:
    return list(RUN_CONFIG_ADAPTERS.keys())


def load_run_config(path: str) -> RunConfig:
    adapter = get_adapter_for_file(path)
    if adapter is None:
        raise UsageError(
            f"Unsupported run configuration format for {path!r}; "
            f"supported: {', '.join(get_supported_formats())}"
        )
    try:
        content = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"Cannot read run configuration {path!r}: {exc}") from exc
    logger.info("Loaded run configuration from %s", path)
    return adapter.parse(content)


# ============================================================================
# CSV RESULT TABLES
# ============================================================================

def _format_cell(value: object, float_format: str) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, float_format)
    return str(value)


def write_csv_table(
    path: str,
    header: Sequence[str],
    rows: Sequence[Sequence[object]],
    float_format: str = ".16e",
) -> None:
    """
    Write a header line and one line per row, floats in ``float_format``.

    Raises:
        OutputError: If the destination cannot be written
    """
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"Row of {len(row)} cells under a {len(header)}-column header")
                writer.writerow([_format_cell(cell, float_format) for cell in row])
    except OSError as exc:
        raise OutputError(f"Cannot write {path!r}: {exc}") from exc
    logger.info("Wrote %d rows to %s", len(rows), path)


def read_csv_table(path: str) -> tuple[list[str], list[dict[str, float]]]:
    """Read back a result table; cells that are not numbers raise ValueError."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = list(reader.fieldnames or [])
        rows = [{key: float(value) for key, value in row.items()} for row in reader]
    return header, rows
