"""JSONL trace files: one header object, then one row per tick.

Rows are dumped with sorted keys and no whitespace so a fixed seed yields
byte-identical files run to run.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any


class TraceError(ValueError):
    """Trace file is corrupt or truncated."""


def dumps_line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_trace(path: str | Path, header: dict[str, Any], rows: list[dict[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_line({"type": "header", **header}) + "\n")
        for row in rows:
            fh.write(dumps_line(row) + "\n")


def read_trace(path: str | Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    path = Path(path)
    rows: list[dict[str, Any]] = []
    header: dict[str, Any] | None = None
    last_valid_time: float | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                where = (
                    f"last valid tick t={last_valid_time}"
                    if last_valid_time is not None
                    else "no valid rows"
                )
                raise TraceError(f"{path}: corrupt line {lineno} ({where}): {exc.msg}") from exc
            if lineno == 1:
                if obj.get("type") != "header":
                    raise TraceError(f"{path}: first line is not a trace header")
                header = obj
            else:
                if "time" not in obj:
                    raise TraceError(
                        f"{path}: line {lineno} missing 'time' "
                        f"(last valid tick t={last_valid_time})"
                    )
                rows.append(obj)
                last_valid_time = obj["time"]
    if header is None:
        raise TraceError(f"{path}: empty trace")
    return header, rows
