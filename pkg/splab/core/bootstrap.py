from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .laws import KLLaw, MultiplierLaw
from .models import BootstrapRun, Dataset, IndexBlock, SpectralModel, SymOperator
from .operators import eigh, hs_distance_sq, projector
from .sampling import empirical_covariance, empirical_projector, projector_statistic, sample_dataset
from .streams import substream
from .utils import as_level, binomial_se, ceil_rank, ordered_map

logger = logging.getLogger(__name__)


def sigma_w_squared(law: MultiplierLaw) -> float:
    return law.sigma_w2


def weighted_covariance(data: Dataset, weights: np.ndarray) -> SymOperator:
    rows = data.rows
    return SymOperator((rows * (weights * weights)[:, None]).T @ rows / data.n)


def bootstrap_replicate(
    data: Dataset,
    J: IndexBlock,
    law: MultiplierLaw,
    seed: int,
    replicate: int = 0,
    run: int = 0,
    cell: int = 0,
    hat: SymOperator | None = None,
    weights: np.ndarray | None = None,
) -> float:
    """(n / sigma_w^2) ||P~_J - P^_J||_2^2 for one multiplier draw.

    ``weights`` replaces the drawn multipliers; ``hat`` skips recomputing P^_J.
    """
    if hat is None:
        hat = projector(eigh(empirical_covariance(data)), J)
    if weights is None:
        weights = law.draw(substream(seed, cell, run, replicate, role="boot"), data.n)
    elif weights.shape != (data.n,):
        raise InvalidInput(f"乘子个数 {weights.shape} 与样本量 {data.n} 不一致")
    tilde = projector(eigh(weighted_covariance(data, weights)), J)
    return data.n / law.sigma_w2 * hs_distance_sq(tilde, hat)


def bootstrap_run(
    data: Dataset,
    J: IndexBlock,
    law: MultiplierLaw,
    B: int,
    seed: int,
    run: int = 0,
    cell: int = 0,
    threads: int = 1,
) -> BootstrapRun:
    if B < 1:
        raise InvalidInput(f"B 必须为正，得到 {B}")
    hat = projector(eigh(empirical_covariance(data)), J)
    statistics = ordered_map(
        lambda b: bootstrap_replicate(data, J, law, seed, replicate=b, run=run, cell=cell, hat=hat),
        range(B),
        threads,
    )
    return BootstrapRun(np.array(statistics), seed=seed, sigma_w2=law.sigma_w2)


def bootstrap_quantile(run: BootstrapRun, alpha: float) -> float:
    """The ceil((1 - alpha) B)-th order statistic: the smallest x with empirical CDF >= 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"alpha 必须在 (0,1) 内，得到 {alpha}")
    ordered = np.sort(run.statistics)
    return float(ordered[ceil_rank(1 - as_level(alpha), run.B) - 1])


@dataclass
class CoverageRecord:
    rejection_rate: float
    binomial_se: float
    alpha: float
    statistics: np.ndarray
    quantiles: np.ndarray

    @property
    def runs(self) -> int:
        return int(self.statistics.size)


def coverage_experiment(
    model: SpectralModel,
    law: KLLaw,
    multiplier: MultiplierLaw,
    J: IndexBlock,
    n: int,
    B: int,
    mc_runs: int,
    alpha: float,
    seed: int,
    threads: int = 1,
    cell: int = 0,
    statistic_scale: float = 1.0,
) -> CoverageRecord:
    """Fraction of runs with n ||P^_J - P_J||_2^2 > q^_alpha.

    ``statistic_scale`` multiplies every bootstrap statistic (used to check the
    direction of the rejection rate when the bootstrap law is inflated).
    """
    if mc_runs < 50:
        raise InvalidInput(f"mc_runs 至少为 50，得到 {mc_runs}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"alpha 必须在 (0,1) 内，得到 {alpha}")

    def one(run: int) -> tuple[float, float]:
        data = sample_dataset(model, law, n, seed, run, cell)
        estimate = empirical_projector(data, J, model)
        statistic = projector_statistic(estimate, J, n)
        replicates = [
            bootstrap_replicate(data, J, multiplier, seed, replicate=b, run=run, cell=cell, hat=estimate.projector)
            for b in range(B)
        ]
        boot = BootstrapRun(statistic_scale * np.array(replicates), seed=seed, sigma_w2=multiplier.sigma_w2)
        return statistic, bootstrap_quantile(boot, alpha)

    results = ordered_map(one, range(mc_runs), threads)
    statistics = np.array([item[0] for item in results])
    quantiles = np.array([item[1] for item in results])
    rate = float(np.mean(statistics > quantiles))
    logger.info("coverage n=%d alpha=%.3g: rejection %.4f over %d runs", n, alpha, rate, mc_runs)
    return CoverageRecord(rate, binomial_se(alpha, mc_runs), alpha, statistics, quantiles)
