from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import chardet

from .errors import ConfigError
from .utils import default_threads

logger = logging.getLogger(__name__)

EXPERIMENTS = (
    "quantities",
    "perturbation-check",
    "clt-distance",
    "bootstrap-coverage",
    "model-relations",
    "delta-tail",
)
FORMATS = ("csv", "json")


def detect_encoding(file_path: str | Path) -> str:
    path = Path(file_path)
    with path.open("rb") as fh:
        sample = fh.read(1024 * 1024)
    if not sample:
        raise ConfigError(f"文件为空：{path}")

    result = chardet.detect(sample)
    encoding = (result.get("encoding") or "").lower()
    confidence = float(result.get("confidence") or 0.0)

    # 纯 ASCII 也按 UTF-8 处理
    if "utf" in encoding or encoding == "ascii":
        return "utf-8-sig"
    if "gb" in encoding or "cp936" in encoding:
        return "gbk"
    if confidence >= 0.5 and encoding:
        return encoding

    for fallback in ("utf-8-sig", "gbk"):
        try:
            sample.decode(fallback)
            return fallback
        except UnicodeDecodeError:
            continue
    raise ConfigError(f"无法识别文件编码（仅支持 UTF-8/GBK）：{path}")


def read_text_lines(file_path: str | Path) -> list[str]:
    """Decode a text file and normalise newlines, BOM and surrounding blank lines."""
    path = Path(file_path)
    if not path.exists():
        raise ConfigError(f"文件不存在：{path}")
    encoding = detect_encoding(path)
    logger.debug("%s: encoding %s", path, encoding)
    try:
        text = path.read_bytes().decode(encoding, errors="strict")
    except (UnicodeDecodeError, LookupError) as exc:
        raise ConfigError(f"文件解码失败（{encoding}）：{path}") from exc
    text = text.replace("\r\n", "\n").replace("\r", "\n").replace("\ufeff", "")
    lines = text.split("\n")

    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()

    if not lines:
        raise ConfigError(f"文件为空：{path}")
    return lines


def _to_list(kind: type):  # type: ignore[no-untyped-def]
    def convert(value: str) -> tuple:  # type: ignore[type-arg]
        items = [item.strip() for item in value.split(",") if item.strip()]
        if not items:
            raise ValueError("空列表")
        return tuple(kind(item) for item in items)

    return convert


def _to_bool(value: str) -> bool:
    text = value.strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"不是布尔值：{value}")


def _to_optional_int(value: str) -> int | None:
    text = value.strip().lower()
    if text in ("", "full", "none"):
        return None
    return int(text)


@dataclass
class ExperimentConfig:
    experiment: str = ""
    profile: str = "exp-decay"
    a: float = 1.0
    dim: int = 20
    spike_size: int = 4
    spike_gap: float = 0.5
    spike_spread: float = 1.0
    pervasive_c: float = 0.5
    pervasive_C: float = 2.0
    tail_power: float = 2.0
    law: str = "gaussian"
    law_p: float = 4.0
    student_nu: float | None = None
    scale_spread: float = 0.5
    multiplier: str = "gaussian"
    j1: int = 1
    j2: int | None = None
    truncation: int | None = None
    n_grid: tuple[int, ...] = (1000,)
    block_grid: tuple[int, ...] = ()
    dim_grid: tuple[int, ...] = ()
    a_grid: tuple[float, ...] = ()
    gap_grid: tuple[float, ...] = ()
    B: int = 499
    mc_runs: int = 400
    limit_draws: int = 100_000
    sigma_draws: int = 0
    alpha: float = 0.1
    p: float = 4.0
    s: float = 0.5
    q: float = 3.0
    instances: int = 1000
    standardized: bool = False
    use_min_delta: bool = False
    seed: int | None = None
    output: str = ""
    format: str = "csv"
    threads: int = field(default_factory=default_threads)

    def validate(self) -> ExperimentConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"未知的实验：{self.experiment!r}，可选 {', '.join(EXPERIMENTS)}")
        if self.seed is None:
            raise ConfigError("缺少 seed（不使用隐式熵源）")
        if self.seed < 0:
            raise ConfigError(f"seed 必须非负，得到 {self.seed}")
        if self.format not in FORMATS:
            raise ConfigError(f"未知的输出格式：{self.format}")
        if any(n < 2 for n in self.n_grid):
            raise ConfigError(f"n 必须 ≥ 2，得到 {self.n_grid}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha 必须在 (0,1) 内，得到 {self.alpha}")
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"s 必须在 (0,1) 内，得到 {self.s}")
        for name in ("B", "mc_runs", "limit_draws", "instances", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} 必须为正整数")
        return self


_CONVERTERS = {
    "experiment": str,
    "profile": str,
    "a": float,
    "dim": int,
    "spike_size": int,
    "spike_gap": float,
    "spike_spread": float,
    "pervasive_c": float,
    "pervasive_C": float,
    "tail_power": float,
    "law": str,
    "law_p": float,
    "student_nu": float,
    "scale_spread": float,
    "multiplier": str,
    "j1": int,
    "j2": int,
    "truncation": _to_optional_int,
    "n_grid": _to_list(int),
    "block_grid": _to_list(int),
    "dim_grid": _to_list(int),
    "a_grid": _to_list(float),
    "gap_grid": _to_list(float),
    "B": int,
    "mc_runs": int,
    "limit_draws": int,
    "sigma_draws": int,
    "alpha": float,
    "p": float,
    "s": float,
    "q": float,
    "instances": int,
    "standardized": _to_bool,
    "use_min_delta": _to_bool,
    "seed": int,
    "output": str,
    "format": str,
    "threads": int,
}


def _split_config_line(line: str) -> tuple[str, str]:
    text = line.split("#", 1)[0].strip()
    if "=" not in text:
        raise ValueError("缺少 '='")
    left, right = text.split("=", 1)
    key = left.strip()
    if not key:
        raise ValueError("键为空")
    return key, right.strip()


def parse_config_lines(lines: list[str], overrides: dict[str, object] | None = None) -> ExperimentConfig:
    values: dict[str, object] = {}
    for number, line in enumerate(lines, start=1):
        if not line.split("#", 1)[0].strip():
            continue
        try:
            key, raw = _split_config_line(line)
        except ValueError as exc:
            raise ConfigError(f"第 {number} 行格式错误（{exc}）：{line.strip()}") from exc
        converter = _CONVERTERS.get(key)
        if converter is None:
            raise ConfigError(f"第 {number} 行：未知的配置键 {key!r}")
        if key in values:
            raise ConfigError(f"第 {number} 行：重复的配置键 {key!r}")
        try:
            values[key] = converter(raw)
        except ValueError as exc:
            raise ConfigError(f"第 {number} 行：{key} 的值无效 {raw!r}") from exc

    for key, value in (overrides or {}).items():
        if key not in _CONVERTERS:
            raise ConfigError(f"未知的配置键 {key!r}")
        if value is not None:
            values[key] = value
    return ExperimentConfig(**values).validate()  # type: ignore[arg-type]


def load_config(file_path: str | Path, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    return parse_config_lines(read_text_lines(file_path), overrides)
