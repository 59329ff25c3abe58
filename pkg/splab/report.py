from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from splab import __version__

# 不随线程数或输出位置变化的键才回显
_ECHO_EXCLUDED = ("threads", "output", "format")


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "nan"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


@dataclass
class ExperimentReport:
    experiment: str
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__
    violations: int = 0

    def add_row(self, **values: Any) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"未声明的列：{sorted(unknown)}")
        self.rows.append(values)

    def echo_config(self, config: dict[str, Any]) -> None:
        self.config = {key: value for key, value in config.items() if key not in _ECHO_EXCLUDED}

    def to_csv(self) -> str:
        """One row per grid point in the declared column order; wall time is left out."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_cell(row.get(column)) for column in self.columns])
        return buffer.getvalue()

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "version": self.version,
            "config": self.config,
            "columns": self.columns,
            "rows": [[row.get(column) for column in self.columns] for row in self.rows],
            "summary": self.summary,
            "wall_time": self.wall_time,
        }
        return json.dumps(_json_safe(payload), ensure_ascii=False, indent=2, sort_keys=False) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()

    def write(self, fmt: str, path: str | Path | None = None) -> str:
        text = self.render(fmt)
        if path:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text
