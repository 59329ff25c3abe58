from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NoComplement


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class SymOperator:
    entries: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.entries, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 1:
            raise InvalidInput(f"算子必须是非空方阵，得到形状 {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("算子含非有限元素")
        if not np.allclose(values, values.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(values).max(initial=0.0))):
            raise InvalidInput("算子不对称")
        # 对称化后严格满足 a[i][j] == a[j][i]
        values = 0.5 * (values + values.T)
        object.__setattr__(self, "entries", _frozen(values))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def zeros(cls, dim: int) -> SymOperator:
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diag(cls, values) -> SymOperator:  # type: ignore[no-untyped-def]
        return cls(np.diag(np.asarray(values, dtype=float)))

    def __add__(self, other: SymOperator) -> SymOperator:
        return SymOperator(self.entries + other.entries)

    def __sub__(self, other: SymOperator) -> SymOperator:
        return SymOperator(self.entries - other.entries)

    def scaled(self, factor: float) -> SymOperator:
        return SymOperator(factor * self.entries)


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "eigenvalues", _frozen(np.array(self.eigenvalues, dtype=float)))
        object.__setattr__(self, "eigenvectors", _frozen(np.array(self.eigenvectors, dtype=float)))

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])


@dataclass(frozen=True)
class IndexBlock:
    """1-based inclusive interval J = {j1, ..., j2} inside {1, ..., dim}."""

    j1: int
    j2: int
    dim: int

    def __post_init__(self) -> None:
        if not (1 <= self.j1 <= self.j2 <= self.dim):
            raise InvalidInput(f"无效的指标区间 J={{{self.j1}..{self.j2}}}（维数 d={self.dim}）")

    @classmethod
    def leading(cls, size: int, dim: int) -> IndexBlock:
        return cls(1, size, dim)

    @property
    def size(self) -> int:
        return self.j2 - self.j1 + 1

    @property
    def complement_size(self) -> int:
        return self.dim - self.size

    @property
    def is_full(self) -> bool:
        return self.j1 == 1 and self.j2 == self.dim

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.j1 - 1, self.j2)

    @property
    def complement(self) -> np.ndarray:
        return np.concatenate([np.arange(0, self.j1 - 1), np.arange(self.j2, self.dim)])

    @property
    def min_size(self) -> int:
        return min(self.size, self.complement_size)

    def complement_block(self) -> IndexBlock:
        """J^c as an interval; only defined when J touches one end of the index range."""
        if self.is_full:
            raise NoComplement("J 覆盖全部指标，补集为空")
        if self.j1 == 1:
            return IndexBlock(self.j2 + 1, self.dim, self.dim)
        if self.j2 == self.dim:
            return IndexBlock(1, self.j1 - 1, self.dim)
        raise InvalidInput(f"J^c 不是区间：J={{{self.j1}..{self.j2}}}")

    def label(self) -> str:
        return f"{self.j1}..{self.j2}"


@dataclass(frozen=True)
class SpectralModel:
    lambdas: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.lambdas, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise InvalidInput("特征值序列为空")
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise InvalidInput("特征值必须为有限正数")
        if np.any(np.diff(values) >= 0.0):
            raise InvalidInput("特征值必须严格递减（不允许重复）")
        object.__setattr__(self, "lambdas", _frozen(values))

    @property
    def dim(self) -> int:
        return int(self.lambdas.size)

    def covariance(self) -> SymOperator:
        return SymOperator.diag(self.lambdas)

    def scaled(self, factor: float) -> SpectralModel:
        return SpectralModel(factor * self.lambdas)

    def block(self, j1: int, j2: int) -> IndexBlock:
        return IndexBlock(j1, j2, self.dim)


@dataclass(frozen=True)
class PsiSpectrum:
    pairs: tuple[tuple[int, int, float], ...]
    truncation: IndexBlock | None = None  # None 表示 "full"

    @property
    def values(self) -> np.ndarray:
        return np.array([value for _, _, value in self.pairs], dtype=float)

    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)[::-1]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class LimitLawSummary:
    A: float
    B: float
    C: float
    lambda_products: tuple[float, ...]

    def lambda_product(self, j: int) -> float:
        if j < 1 or j > len(self.lambda_products):
            raise InvalidInput(f"λ_{{1,{j}}}(Ψ) 不可用（仅有 {len(self.lambda_products)} 项）")
        return self.lambda_products[j - 1]


@dataclass(frozen=True)
class EigenProfile:
    kind: str  # exp-decay | poly-decay | spiked | pervasive
    dim: int
    a: float = 1.0
    spike_size: int = 4
    gap: float = 0.5
    spread: float = 1.0
    pervasive_c: float = 0.5
    pervasive_C: float = 2.0
    tail_power: float = 2.0


@dataclass(frozen=True)
class Dataset:
    rows: np.ndarray
    seed: int | None = None
    law: str = ""
    lambda_hash: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.rows, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise InvalidInput("数据集至少需要一行")
        object.__setattr__(self, "rows", _frozen(values))

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])


@dataclass(frozen=True)
class BootstrapRun:
    statistics: np.ndarray
    seed: int | None = None
    sigma_w2: float = 1.0

    def __post_init__(self) -> None:
        values = np.array(self.statistics, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise InvalidInput("自助法统计量为空")
        object.__setattr__(self, "statistics", _frozen(values))

    @property
    def B(self) -> int:
        return int(self.statistics.size)


@dataclass(frozen=True)
class ProjectorEstimate:
    projector: SymOperator
    covariance: SymOperator
    perturbation: SymOperator


@dataclass
class PerturbationRecord:
    delta: float
    lhs0: float
    rhs0: float
    lhs2: float
    rhs2: float
    lhs_cor: float
    rhs_cor: float
    passed: bool = field(default=False)
    floor: float = 0.0  # 特征向量的舍入误差下限

    def ratios(self) -> tuple[float, float]:
        r0 = self.lhs0 / self.rhs0 if self.rhs0 > 0 else 0.0
        r2 = self.lhs2 / self.rhs2 if self.rhs2 > 0 else 0.0
        return r0, r2
