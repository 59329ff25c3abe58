from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import InvalidInput

T = TypeVar("T")
R = TypeVar("R")


def as_level(beta: float | Fraction) -> Fraction:
    # 按十进制写法取精确有理数：0.9 -> 9/10
    return beta if isinstance(beta, Fraction) else Fraction(str(float(beta)))


def ceil_rank(beta: float | Fraction, m: int) -> int:
    """1-based rank ceil(beta * m), exact on the decimal value of beta (0.9 * 10 -> 9)."""
    level = as_level(beta)
    if not 0 < level < 1:
        raise InvalidInput(f"分位水平必须在 (0,1) 内，得到 {beta}")
    if m < 1:
        raise InvalidInput("样本为空")
    return min(m, max(1, math.ceil(level * m)))


def lambda_hash(lambdas: np.ndarray) -> str:
    digest = hashlib.sha256(np.ascontiguousarray(lambdas, dtype="<f8").tobytes())
    return digest.hexdigest()[:16]


def default_threads() -> int:
    return os.cpu_count() or 1


def ordered_map(func: Callable[[T], R], items: Sequence[T] | Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def binomial_se(rate: float, runs: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / runs)
