"""Shape-only evaluation of the distributional and bootstrap error bounds.

Every unspecified absolute constant is set to 1 and ``log`` is the natural
logarithm. The values are meant for trend comparison across n and across
models, never as guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput
from .laws import KLLaw
from .models import IndexBlock, SpectralModel
from .spectral import (
    a_J_truncation_remainder,
    limit_summary,
    psi_spectrum,
    relative_rank,
    sigma_J_analytic,
    trace_sqrt_psi,
)

THEOREMS = ("clt-I", "clt-II-a", "clt-II-b", "clt-II-std", "clt-III", "boot-A", "boot-B", "cov-A", "cov-B")


def qprob(n: int, p: float, r_J: float, sigma_J: float) -> float:
    """p_{J,n,p} = n^{1-p/2} (log n)^{p/2} (r_J / sigma_J)^p."""
    if n < 2:
        raise InvalidInput(f"n 必须 ≥ 2，得到 {n}")
    if p <= 2.0:
        raise InvalidInput(f"p 必须大于 2，得到 {p}")
    if r_J <= 0.0 or sigma_J <= 0.0:
        raise InvalidInput("r_J 与 σ_J 必须为正")
    return n ** (1.0 - p / 2.0) * math.log(n) ** (p / 2.0) * (r_J / sigma_J) ** p


@dataclass(frozen=True)
class BoundInputs:
    n: int
    p: float = 4.0
    s: float = 0.5
    q: float = 3.0
    size: int | None = None
    sigma: float | None = None
    A: float | None = None
    B: float | None = None
    C: float | None = None
    lambda_products: tuple[float, ...] = ()
    r_J: float | None = None
    p_J: float | None = None  # 显式给出时覆盖 qprob
    A_rem: float | None = None
    trace_sqrt: float | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidInput(f"n 必须 ≥ 2，得到 {self.n}")

    def need(self, *names: str) -> None:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise InvalidInput(f"缺少输入：{', '.join(missing)}")

    def prob(self) -> float:
        if self.p_J is not None:
            return self.p_J
        self.need("r_J", "sigma")
        return qprob(self.n, self.p, self.r_J, self.sigma)  # type: ignore[arg-type]

    def lambda_product(self, j: int) -> float:
        if len(self.lambda_products) < j:
            raise InvalidInput(f"缺少输入：λ_{{1,{j}}}(Ψ)（仅有 {len(self.lambda_products)} 项）")
        return self.lambda_products[j - 1]

    def sigma_term(self) -> float:
        """(log n)^{3/2} n^{-1/2} sigma_J^3 |J|^{3/2}, before division by the theorem's scale."""
        self.need("sigma", "size")
        n = self.n
        return math.log(n) ** 1.5 / math.sqrt(n) * self.sigma**3 * self.size**1.5  # type: ignore[operator]


def _clt_I(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("A", "size")
    n, A, size = x.n, x.A, x.size
    return [
        ("n^-1/12", n ** (-1.0 / 12.0)),
        ("sigma/A", x.sigma_term() / A),
        ("n|J|p/A", n * size / A * x.prob()),
        ("(A/n|J|)^s", (A / (n * size)) ** x.s),
    ]


def _clt_II_a(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("A")
    root12 = math.sqrt(x.lambda_product(2))
    return [
        ("n^-1/5(A/sqrt(l12))^3/5", x.n ** (-0.2) * (x.A / root12) ** 0.6),
        ("sigma/sqrt(l12)", x.sigma_term() / root12),
        ("p", x.prob()),
    ]


def _clt_II_b(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("A", "B", "C")
    l16 = x.lambda_product(6)
    l6 = l16 / x.lambda_product(5)
    skew = (x.C / x.B) ** 3
    root12 = math.sqrt(x.lambda_product(2))
    return [
        ("(n^-1/2 A^3/l6^3 (C/B)^3)^1.1", (x.A**3 / l6**3 * skew / math.sqrt(x.n)) ** 1.1),
        ("n^-1/2 A^6/l16 (C/B)^3", x.A**6 / l16 * skew / math.sqrt(x.n)),
        ("sigma/sqrt(l12)", x.sigma_term() / root12),
        ("p", x.prob()),
    ]


def _clt_II_std(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("B", "C")
    return [("(C/B)^3", (x.C / x.B) ** 3), *_clt_II_a(x)]


def _clt_III(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("A", "B", "C")
    exponent = 0.25 - min(x.p, 3.0) / 8.0
    return [
        ("n^(1/4-min(p,3)/8)(A/B)^3/4", x.n**exponent * (x.A / x.B) ** 0.75),
        ("(C/B)^3", (x.C / x.B) ** 3),
        ("sigma/B", x.sigma_term() / x.B),
        ("p", x.prob()),
    ]


def _boot_A(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("A", "B", "C")
    n = x.n
    return [
        ("n^(1/4-q/8)(A/B)^3/4", n ** (0.25 - x.q / 8.0) * (x.A / x.B) ** 0.75),
        ("(C/B)^3", (x.C / x.B) ** 3),
        ("sqrt(log n/n)A/B", math.sqrt(math.log(n) / n) * x.A / x.B),
        ("sigma/B", x.sigma_term() / x.B),
        ("p^s", x.prob() ** x.s),
    ]


def _boot_B(x: BoundInputs) -> list[tuple[str, float]]:
    x.need("A", "A_rem", "trace_sqrt")
    n = x.n
    root12 = math.sqrt(x.lambda_product(2))
    return [
        ("n^-1/5(A/sqrt(l12))^3/5", n ** (-0.2) * (x.A / root12) ** 0.6),
        ("sigma/sqrt(l12)", x.sigma_term() / root12),
        ("sqrt(log n/n)sqrt(A)tr/sqrt(l12)", math.sqrt(math.log(n) / n) * math.sqrt(x.A) * x.trace_sqrt / root12),
        ("A_rem log n/sqrt(l12)", x.A_rem * math.log(n) / root12),
        ("(p+n^(1-p/6))^s", (x.prob() + n ** (1.0 - x.p / 6.0)) ** x.s),
    ]


def _cov_A(x: BoundInputs) -> list[tuple[str, float]]:
    return [
        ("p^(1-s)", x.prob() ** (1.0 - x.s)),
        ("n^(1-p/2q)", x.n ** (1.0 - x.p / (2.0 * x.q))),
        *_boot_A(x),
    ]


def _cov_B(x: BoundInputs) -> list[tuple[str, float]]:
    return [("p^(1-s)", x.prob() ** (1.0 - x.s)), *_boot_B(x)]


_BUILDERS = {
    "clt-I": _clt_I,
    "clt-II-a": _clt_II_a,
    "clt-II-b": _clt_II_b,
    "clt-II-std": _clt_II_std,
    "clt-III": _clt_III,
    "boot-A": _boot_A,
    "boot-B": _boot_B,
    "cov-A": _cov_A,
    "cov-B": _cov_B,
}


def bound_terms(theorem: str, inputs: BoundInputs) -> list[tuple[str, float]]:
    builder = _BUILDERS.get(theorem)
    if builder is None:
        raise InvalidInput(f"未知的界：{theorem}，可选 {', '.join(THEOREMS)}")
    return builder(inputs)


def bound_shape(theorem: str, inputs: BoundInputs) -> float:
    return float(sum(value for _, value in bound_terms(theorem, inputs)))


def inputs_for(
    model: SpectralModel,
    J: IndexBlock,
    law: KLLaw,
    n: int,
    p: float = 4.0,
    s: float = 0.5,
    q: float = 3.0,
    I: IndexBlock | None = None,
) -> BoundInputs:
    summary = limit_summary(psi_spectrum(model, J, law))
    truncated = psi_spectrum(model, J, law, I)
    return BoundInputs(
        n=n,
        p=p,
        s=s,
        q=q,
        size=J.size,
        sigma=sigma_J_analytic(model, J, law),
        A=summary.A,
        B=summary.B,
        C=summary.C,
        lambda_products=summary.lambda_products,
        r_J=relative_rank(model, J),
        A_rem=a_J_truncation_remainder(model, J, law, I),
        trace_sqrt=trace_sqrt_psi(truncated),
    )
