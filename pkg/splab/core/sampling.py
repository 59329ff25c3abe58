from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from .config_loader import read_text_lines
from .errors import ConfigError, InvalidInput
from .laws import KLLaw
from .models import Dataset, EigenProfile, IndexBlock, ProjectorEstimate, PsiSpectrum, SpectralModel, SymOperator
from .operators import coordinate_projector, eigh, hs_distance_sq, projector
from .streams import substream
from .utils import lambda_hash

logger = logging.getLogger(__name__)

PROFILE_KINDS = ("exp-decay", "poly-decay", "spiked", "pervasive")
STAGGER = 1e-9
LIMIT_BATCH = 10_000


def _spiked(profile: EigenProfile) -> np.ndarray:
    d, J, g, C = profile.dim, profile.spike_size, profile.gap, profile.spread
    if d < 6:
        raise InvalidInput(f"spiked 模型要求 d ≥ 6，得到 {d}")
    if not 1 <= J <= d - J:
        raise InvalidInput(f"spiked 模型要求 1 ≤ J ≤ d−J，得到 J={J}, d={d}")
    if not 0.0 < g <= 1.0:
        raise InvalidInput(f"spiked 模型要求 g_J ∈ (0,1]，得到 {g}")
    if C < 1.0:
        raise InvalidInput(f"spiked 模型要求 C ≥ 1，得到 {C}")
    top = np.arange(1, J + 1, dtype=float)
    offset = (J - top) / (J - 1) if J > 1 else np.zeros(J)
    block = 1.0 + g + (C - 1.0) * g * offset + STAGGER * (J - top)
    # 平坦尾部加微小阶梯，保证严格递减
    tail = 1.0 + STAGGER * (d - J - np.arange(1, d - J + 1, dtype=float))
    return np.concatenate([block, tail])


def _pervasive(profile: EigenProfile) -> np.ndarray:
    d, J = profile.dim, profile.spike_size
    c, C, power = profile.pervasive_c, profile.pervasive_C, profile.tail_power
    if not 1 <= J < d:
        raise InvalidInput(f"pervasive 模型要求 1 ≤ J < d，得到 J={J}, d={d}")
    if not 0.0 < c < 1.0:
        raise InvalidInput(f"pervasive 模型要求 c ∈ (0,1)，得到 {c}")
    if C < 1.0:
        raise InvalidInput(f"pervasive 模型要求 C ≥ 1，得到 {C}")
    if power <= 0.0:
        raise InvalidInput(f"tail_power 必须为正，得到 {power}")
    top = np.arange(1, J + 1, dtype=float)
    offset = (J - top) / (J - 1) if J > 1 else np.zeros(J)
    block = 1.0 + (C - 1.0) * offset + STAGGER * (J - top)
    base = np.arange(J + 1, d + 1, dtype=float) ** (-power)
    scale = min((1.0 - c) * (J + 1) ** power, C * block[0] / base.sum())
    return np.concatenate([block, scale * base])


def build_model(profile: EigenProfile) -> SpectralModel:
    if profile.kind not in PROFILE_KINDS:
        raise InvalidInput(f"未知的特征值模型：{profile.kind}，可选 {', '.join(PROFILE_KINDS)}")
    if profile.dim < 1:
        raise InvalidInput(f"维数必须为正，得到 {profile.dim}")
    j = np.arange(1, profile.dim + 1, dtype=float)
    if profile.kind == "exp-decay":
        if profile.a <= 0.0:
            raise InvalidInput(f"exp-decay 要求 a > 0，得到 {profile.a}")
        lambdas = np.exp(-profile.a * j)
    elif profile.kind == "poly-decay":
        if profile.a <= 1.0:
            raise InvalidInput(f"poly-decay 要求 a > 1，得到 {profile.a}")
        lambdas = j ** (-profile.a)
    elif profile.kind == "spiked":
        lambdas = _spiked(profile)
    else:
        lambdas = _pervasive(profile)
    return SpectralModel(lambdas)


def check_block(profile: EigenProfile, J: IndexBlock) -> IndexBlock:
    if J.dim != profile.dim:
        raise InvalidInput(f"J 的维数 {J.dim} 与模型维数 {profile.dim} 不一致")
    if J.is_full:
        raise InvalidInput("J 不能覆盖全部指标")
    if profile.kind == "spiked" and J.j2 > profile.spike_size:
        raise InvalidInput(f"spiked 模型的 J 不能伸入平坦尾部：J={J.label()}，尖峰数 {profile.spike_size}")
    if profile.kind in ("spiked", "pervasive"):
        spread = profile.spread if profile.kind == "spiked" else profile.pervasive_C
        splits = J.j1 <= profile.spike_size and (J.j1 > 1 or J.j2 < profile.spike_size)
        # 尖峰相等时块内只差阶梯 STAGGER
        if spread <= 1.0 and splits:
            raise InvalidInput(
                f"{profile.kind} 模型的尖峰特征值相同，J={J.label()} 不能拆开前 {profile.spike_size} 个指标"
            )
    return J


def sample_dataset(
    model: SpectralModel,
    law: KLLaw,
    n: int,
    seed: int,
    replicate: int = 0,
    cell: int = 0,
    role: str = "data",
) -> Dataset:
    """Draw X_i = sum_j sqrt(lambda_j) eta_ij e_j, i = 1..n, from the substream (seed, cell, replicate)."""
    if n < 1:
        raise InvalidInput(f"n 必须 ≥ 1，得到 {n}")
    rng = substream(seed, cell, replicate, role=role)
    rows = law.draw(rng, n, model.dim) * np.sqrt(model.lambdas)
    return Dataset(rows, seed=seed, law=law.name, lambda_hash=lambda_hash(model.lambdas))


def empirical_covariance(data: Dataset) -> SymOperator:
    # 不中心化：均值已知为 0
    rows = data.rows
    return SymOperator(rows.T @ rows / data.n)


def empirical_projector(data: Dataset, J: IndexBlock, model: SpectralModel) -> ProjectorEstimate:
    if data.dim != model.dim:
        raise InvalidInput(f"数据维数 {data.dim} 与模型维数 {model.dim} 不一致")
    covariance = empirical_covariance(data)
    estimate = projector(eigh(covariance), J)
    return ProjectorEstimate(estimate, covariance, covariance - model.covariance())


def projector_statistic(estimate: ProjectorEstimate, J: IndexBlock, n: int) -> float:
    return n * hs_distance_sq(estimate.projector, coordinate_projector(J))


def sample_statistic(
    model: SpectralModel,
    law: KLLaw,
    J: IndexBlock,
    n: int,
    seed: int,
    replicate: int,
    cell: int = 0,
) -> float:
    data = sample_dataset(model, law, n, seed, replicate, cell)
    return projector_statistic(empirical_projector(data, J, model), J, n)


def sample_limit_stat(ps: PsiSpectrum, draws: int, seed: int, replicate: int = 0, cell: int = 0) -> np.ndarray:
    """Draws of ||L_J Z||_2^2 = sum over pairs of value * g^2, g i.i.d. standard normal."""
    if len(ps) == 0:
        raise InvalidInput("Ψ 谱为空，无法抽样极限分布")
    if draws < 1:
        raise InvalidInput(f"draws 必须为正，得到 {draws}")
    values = ps.values
    rng = substream(seed, cell, replicate, role="limit")
    out = np.empty(draws)
    for start in range(0, draws, LIMIT_BATCH):
        stop = min(draws, start + LIMIT_BATCH)
        gauss = rng.standard_normal((stop - start, values.size))
        out[start:stop] = (gauss * gauss) @ values
    return out


def dataset_to_csv(data: Dataset, path: str | Path) -> None:
    header = ",".join(f"x{j}" for j in range(1, data.dim + 1))
    np.savetxt(Path(path), data.rows, fmt="%.17g", delimiter=",", header=header, comments="", encoding="utf-8")


def dataset_from_csv(path: str | Path) -> Dataset:
    try:
        lines = read_text_lines(path)
    except ConfigError as exc:
        raise InvalidInput(str(exc)) from exc
    header = [name.strip() for name in lines[0].split(",")]
    expected = [f"x{j}" for j in range(1, len(header) + 1)]
    if header != expected:
        raise InvalidInput(f"CSV 表头必须为 x1..xd，得到 {lines[0]!r}")
    rows: list[list[float]] = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise InvalidInput(f"第 {number} 行列数 {len(parts)} 与表头 {len(header)} 不一致")
        try:
            row = [float(part) for part in parts]
        except ValueError as exc:
            raise InvalidInput(f"第 {number} 行含非数值：{line.strip()}") from exc
        if not all(math.isfinite(value) for value in row):
            raise InvalidInput(f"第 {number} 行含非有限值")
        rows.append(row)
    if not rows:
        raise InvalidInput("CSV 没有数据行")
    logger.debug("loaded %d rows x %d columns from %s", len(rows), len(header), path)
    return Dataset(np.array(rows))
