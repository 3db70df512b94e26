"""CSV/JSON rendering of report rows and atomic output files."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from redlab.core.errors import OutputWriteError
from redlab.core.logging import get_logger

logger = get_logger(__name__)


def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (list, tuple)):
        return "".join(str(item) for item in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value


def render_csv(rows: Sequence[BaseModel], *, fieldnames: Sequence[str] | None = None) -> str:
    """Header row first, always; ``fieldnames`` is required when ``rows`` may be empty."""
    dumped = [row.model_dump(mode="json", by_alias=True) for row in rows]
    if fieldnames is None:
        if not dumped:
            raise ValueError("fieldnames are required to render an empty table")
        fieldnames = list(dumped[0])

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in dumped:
        writer.writerow({key: _csv_cell(row.get(key)) for key in fieldnames})
    return buffer.getvalue()


def render_json(payload: BaseModel | Sequence[BaseModel]) -> str:
    if isinstance(payload, BaseModel):
        data: Any = payload.model_dump(mode="json", by_alias=True)
    else:
        data = [row.model_dump(mode="json", by_alias=True) for row in payload]
    return json.dumps(data, indent=2) + "\n"


def csv_fields(model: type[BaseModel]) -> list[str]:
    return [field.alias or name for name, field in model.model_fields.items()]


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` next to ``path`` and rename it into place; no partial file on failure."""
    path = Path(path)
    tmp_name: str | None = None
    try:
        with tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", newline="", dir=path.parent, prefix=f".{path.name}.", delete=False
        ) as handle:
            tmp_name = handle.name
            handle.write(text)
        os.replace(tmp_name, path)
    except OSError as exc:
        if tmp_name is not None and os.path.exists(tmp_name):
            os.unlink(tmp_name)
        logger.error("reporting.write.failed", extra={"path": str(path), "error_type": type(exc).__name__})
        raise OutputWriteError(f"cannot write {path}: {exc.strerror or exc}", details={"path": str(path)}) from exc

    logger.info("reporting.write.completed", extra={"path": str(path), "bytes": len(text.encode("utf-8"))})
