from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import qprob
from .errors import InvalidInput
from .laws import KLLaw
from .models import EigenProfile, IndexBlock, PerturbationRecord, SpectralModel, SymOperator
from .operators import coordinate_projector, eigh, hs_distance_sq, projector
from .sampling import PROFILE_KINDS, build_model, empirical_covariance, sample_dataset
from .spectral import delta_J, gap, linear_term, relative_rank, sigma_J_analytic
from .streams import substream
from .utils import ordered_map

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)
TAIL_CONSTANTS = (1.0, 2.0, 4.0)


def _numeric_floor(model: SpectralModel, J: IndexBlock, perturbed: SymOperator) -> float:
    # LAPACK 特征向量误差量级 eps * d * ||Σ̂|| / gap
    scale = float(np.abs(perturbed.entries).sum(axis=1).max())
    return 64.0 * EPS * model.dim * scale / gap(model, J)


def _hs_norm(op: SymOperator) -> float:
    return math.sqrt(float(np.sum(op.entries * op.entries)))


def perturbation_check(
    model: SpectralModel,
    J: IndexBlock,
    E: SymOperator,
    use_min_delta: bool = False,
) -> PerturbationRecord:
    """Both sides of the first- and second-order projector perturbation inequalities.

    Constants are explicit: 4*sqrt(2) for the first order, 20*sqrt(2) for the
    remainder. The quadratic-term check squares the remainder bound and adds the
    cross term 2 * (20 sqrt(2) m delta^2) * sqrt(2 m) delta, using
    ||L_J E||_2 <= sqrt(2 m) delta_J.
    """
    perturbed = model.covariance() + E
    estimate = projector(eigh(perturbed), J)
    target = coordinate_projector(J)
    linear = linear_term(model, J, E)
    delta = delta_J(model, J, E, use_min_delta=use_min_delta)
    m = J.min_size

    lhs0 = math.sqrt(hs_distance_sq(estimate, target))
    rhs0 = 4.0 * math.sqrt(2.0) * math.sqrt(m) * delta
    lhs2 = _hs_norm(estimate - target - linear)
    rhs2 = 20.0 * math.sqrt(2.0) * m * delta**2
    linear_norm = _hs_norm(linear)
    lhs_cor = abs(lhs0**2 - linear_norm**2)
    rhs_cor = rhs2**2 + 2.0 * rhs2 * math.sqrt(2.0 * m) * delta

    floor = _numeric_floor(model, J, perturbed)
    passed = (
        lhs0 <= rhs0 + floor
        and lhs2 <= rhs2 + floor
        and lhs_cor <= rhs_cor + floor * (2.0 * (lhs0 + linear_norm) + floor)
    )
    record = PerturbationRecord(delta, lhs0, rhs0, lhs2, rhs2, lhs_cor, rhs_cor, passed, floor)
    if not passed:
        logger.error("perturbation inequality violated: J=%s delta=%.6g record=%s", J.label(), delta, record)
    return record


@dataclass
class BootstrapPerturbationRecord:
    delta: float
    delta_tilde: float
    lhs: float
    rhs: float
    passed: bool
    floor: float = 0.0


def bootstrap_perturbation_check(
    model: SpectralModel,
    J: IndexBlock,
    E: SymOperator,
    E_tilde: SymOperator,
) -> BootstrapPerturbationRecord:
    """|‖P~ - P^‖² - ‖L_J(E~ - E)‖²| against D² + 2 D sqrt(2m) (δ(E) + δ(E~)), D = 20 sqrt(2) m (δ(E)² + δ(E~)²)."""
    sigma = model.covariance()
    hat_op = sigma + E
    tilde_op = sigma + E_tilde
    hat = projector(eigh(hat_op), J)
    tilde = projector(eigh(tilde_op), J)
    delta = delta_J(model, J, E)
    delta_tilde = delta_J(model, J, E_tilde)
    m = J.min_size

    diff_norm_sq = hs_distance_sq(tilde, hat)
    linear_norm = _hs_norm(linear_term(model, J, E_tilde - E))
    lhs = abs(diff_norm_sq - linear_norm**2)
    D = 20.0 * math.sqrt(2.0) * m * (delta**2 + delta_tilde**2)
    rhs = D**2 + 2.0 * D * math.sqrt(2.0 * m) * (delta + delta_tilde)

    floor = _numeric_floor(model, J, hat_op) + _numeric_floor(model, J, tilde_op)
    passed = lhs <= rhs + floor * (2.0 * (math.sqrt(diff_norm_sq) + linear_norm) + floor)
    if not passed:
        logger.error("bootstrap perturbation inequality violated: J=%s lhs=%.6g rhs=%.6g", J.label(), lhs, rhs)
    return BootstrapPerturbationRecord(delta, delta_tilde, lhs, rhs, passed, floor)


def random_symmetric(rng: np.random.Generator, dim: int, norm: float) -> SymOperator:
    raw = rng.standard_normal((dim, dim))
    sym = 0.5 * (raw + raw.T)
    current = float(np.abs(np.linalg.eigvalsh(sym)).max())
    return SymOperator(sym * (norm / current))


@dataclass
class PerturbationInstance:
    index: int
    profile: EigenProfile
    J: IndexBlock
    record: PerturbationRecord


def _random_profile(rng: np.random.Generator, kind: str) -> tuple[EigenProfile, IndexBlock]:
    # λ_1/λ_d 限制在 1e6 以内，避免特征向量被舍入误差淹没
    if kind == "spiked":
        d = int(rng.integers(6, 31))
        size = int(rng.integers(1, d // 2 + 1))
        profile = EigenProfile(
            kind, d, spike_size=size, gap=float(rng.uniform(0.1, 1.0)), spread=float(rng.uniform(1.0, 3.0))
        )
        j2 = int(rng.integers(1, size + 1))
        j1 = int(rng.integers(1, j2 + 1))
        return profile, IndexBlock(j1, j2, d)
    d = int(rng.integers(2, 31)) if kind != "pervasive" else int(rng.integers(3, 31))
    if kind == "exp-decay":
        profile = EigenProfile(kind, d, a=float(rng.uniform(0.05, min(2.0, 14.0 / d))))
    elif kind == "poly-decay":
        profile = EigenProfile(kind, d, a=float(rng.uniform(1.05, min(3.0, 14.0 / math.log(d)))))
    else:
        size = int(rng.integers(1, d))
        profile = EigenProfile(
            kind,
            d,
            spike_size=size,
            pervasive_c=float(rng.uniform(0.1, 0.9)),
            pervasive_C=float(rng.uniform(1.0, 3.0)),
            tail_power=float(rng.uniform(1.5, 3.0)),
        )
    while True:
        j1 = int(rng.integers(1, d + 1))
        j2 = int(rng.integers(j1, d + 1))
        if not (j1 == 1 and j2 == d):
            return profile, IndexBlock(j1, j2, d)


def perturbation_sweep(
    instances: int,
    seed: int,
    threads: int = 1,
    use_min_delta: bool = False,
) -> list[PerturbationInstance]:
    """Random (model, J, E) instances over all profiles with ||E||_inf up to lambda_d.

    Every fifth instance takes ||E||_inf = lambda_d exactly so the delta_J >= 1/4
    regime is reached; the rest draw the size log-uniformly in [1e-3, 1] * lambda_d.
    """

    def run(index: int) -> PerturbationInstance:
        rng = substream(seed, index, role="perturb")
        profile, J = _random_profile(rng, PROFILE_KINDS[index % len(PROFILE_KINDS)])
        model = build_model(profile)
        fraction = 1.0 if index % 5 == 4 else float(10.0 ** rng.uniform(-3.0, 0.0))
        E = random_symmetric(rng, model.dim, fraction * model.lambdas[-1])
        return PerturbationInstance(index, profile, J, perturbation_check(model, J, E, use_min_delta))

    return ordered_map(run, range(instances), threads)


@dataclass
class DeltaTailRecord:
    n: int
    replicates: int
    threshold_unit: float
    frequencies: dict[float, float] = field(default_factory=dict)
    reference: float = 0.0
    deltas: np.ndarray = field(default_factory=lambda: np.empty(0))


def delta_tail_check(
    model: SpectralModel,
    J: IndexBlock,
    law: KLLaw,
    n: int,
    replicates: int,
    seed: int,
    threads: int = 1,
    cell: int = 0,
    constants: tuple[float, ...] = TAIL_CONSTANTS,
) -> DeltaTailRecord:
    """Empirical P(delta_J(E) > C sqrt(sigma_J^2 log n / n)) next to p_{J,n,p}. Report only."""
    if replicates < 200:
        raise InvalidInput(f"replicates 至少为 200，得到 {replicates}")
    if n < 2:
        raise InvalidInput(f"n 必须 ≥ 2，得到 {n}")
    sigma = sigma_J_analytic(model, J, law)
    unit = math.sqrt(sigma**2 * math.log(n) / n)
    truth = model.covariance()

    def one(replicate: int) -> float:
        data = sample_dataset(model, law, n, seed, replicate, cell)
        return delta_J(model, J, empirical_covariance(data) - truth)

    deltas = np.array(ordered_map(one, range(replicates), threads))
    frequencies = {c: float(np.mean(deltas > c * unit)) for c in constants}
    reference = qprob(n, law.p, relative_rank(model, J), sigma)
    logger.info("delta tail n=%d: %s (p_J=%.4g)", n, frequencies, reference)
    return DeltaTailRecord(n, replicates, unit, frequencies, reference, deltas)
