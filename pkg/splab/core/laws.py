from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidInput, UnsupportedLaw

KL_KINDS = ("gaussian", "student", "rademacher-product", "two-point")
MULTIPLIER_KINDS = ("gaussian", "sqrt-exponential")


@dataclass(frozen=True)
class KLLaw:
    """Joint law of the Karhunen-Loeve coefficients (eta_j), unit variance per coordinate.

    ``rademacher-product`` draws eta_k = eps_k * v with i.i.d. Rademacher signs and one
    shared bounded scale per observation, |v|^2 in {1 - s, 1 + s}; this makes
    alpha_jk = E eta_j^2 eta_k^2 = 1 + s^2 while every unmatched-index moment vanishes.
    """

    kind: str = "gaussian"
    p: float = 4.0
    nu: float | None = None
    scale_spread: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in KL_KINDS:
            raise InvalidInput(f"未知的 KL 系数分布：{self.kind}，可选 {', '.join(KL_KINDS)}")
        if self.p <= 2.0:
            raise InvalidInput(f"矩阶 p 必须大于 2，得到 {self.p}")
        if self.kind == "student":
            nu = self.nu if self.nu is not None else 4.0 * self.p + 1.0
            if nu <= 2.0 * self.p:
                raise InvalidInput(f"Student 自由度 ν 必须大于 2p={2.0 * self.p}，得到 {nu}")
            object.__setattr__(self, "nu", float(nu))
        if self.kind == "rademacher-product" and not 0.0 <= self.scale_spread < 1.0:
            raise InvalidInput(f"scale_spread 必须在 [0,1) 内，得到 {self.scale_spread}")

    @property
    def name(self) -> str:
        if self.kind == "student":
            return f"student(nu={self.nu:g})"
        if self.kind == "rademacher-product":
            return f"rademacher-product(s={self.scale_spread:g})"
        return self.kind

    def fourth_central(self) -> float:
        if self.kind == "gaussian":
            return 2.0
        if self.kind == "two-point":
            return 0.0
        if self.kind == "rademacher-product":
            return self.scale_spread**2
        nu = float(self.nu)  # type: ignore[arg-type]
        return (2.0 * nu - 2.0) / (nu - 4.0)

    def alpha(self) -> float:
        """alpha_jk = E eta_j^2 eta_k^2 for j != k (constant across pairs for all kinds)."""
        if self.kind == "rademacher-product":
            return 1.0 + self.scale_spread**2
        return 1.0

    def alpha_matrix(self, dim: int) -> np.ndarray:
        out = np.full((dim, dim), self.alpha())
        np.fill_diagonal(out, 1.0 + self.fourth_central())
        return out

    def moment_bound(self) -> float:
        """C_eta = sup_j E |eta_j|^{2p}."""
        p = self.p
        if self.kind == "gaussian":
            return 2.0**p * special.gamma(p + 0.5) / math.sqrt(math.pi)
        if self.kind == "two-point":
            return 1.0
        if self.kind == "rademacher-product":
            s = self.scale_spread
            return 0.5 * ((1.0 - s) ** p + (1.0 + s) ** p)
        nu = float(self.nu)  # type: ignore[arg-type]
        log_raw = (
            p * math.log(nu)
            + special.gammaln(p + 0.5)
            + special.gammaln(nu / 2.0 - p)
            - 0.5 * math.log(math.pi)
            - special.gammaln(nu / 2.0)
        )
        return math.exp(log_raw) * ((nu - 2.0) / nu) ** p

    def lower_moment(self) -> float:
        return self.alpha()

    def satisfies_cumulant(self, m: int) -> bool:
        if self.kind == "student":
            return float(self.nu) > m  # type: ignore[arg-type]
        return True

    def require_cumulant(self, m: int = 4) -> None:
        if not self.satisfies_cumulant(m):
            raise UnsupportedLaw(f"{self.name} 不满足 m={m} 阶累积量不相关条件")

    def draw(self, rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal((n, dim))
        if self.kind == "two-point":
            return 2.0 * rng.integers(0, 2, size=(n, dim)) - 1.0
        if self.kind == "rademacher-product":
            signs = 2.0 * rng.integers(0, 2, size=(n, dim)) - 1.0
            high = rng.integers(0, 2, size=n).astype(bool)
            scale = np.where(high, math.sqrt(1.0 + self.scale_spread), math.sqrt(1.0 - self.scale_spread))
            return signs * scale[:, None]
        nu = float(self.nu)  # type: ignore[arg-type]
        return rng.standard_t(nu, size=(n, dim)) * math.sqrt((nu - 2.0) / nu)


@dataclass(frozen=True)
class MultiplierLaw:
    kind: str = "gaussian"

    def __post_init__(self) -> None:
        if self.kind not in MULTIPLIER_KINDS:
            raise InvalidInput(f"未知的乘子分布：{self.kind}，可选 {', '.join(MULTIPLIER_KINDS)}")

    @property
    def sigma_w2(self) -> float:
        return 2.0 if self.kind == "gaussian" else 1.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(n)
        return np.sqrt(rng.standard_exponential(n))
