from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from splab.core.bootstrap import coverage_experiment
from splab.core.bounds import BoundInputs, bound_shape, inputs_for, qprob
from splab.core.checks import delta_tail_check, perturbation_sweep
from splab.core.config_loader import ExperimentConfig
from splab.core.errors import ConfigError, InvalidInput
from splab.core.laws import KLLaw, MultiplierLaw
from splab.core.metrics import ks_noise_floor, ks_two_sample, ks_vs_normal, wasserstein1
from splab.core.models import EigenProfile, IndexBlock, SpectralModel
from splab.core.sampling import build_model, check_block, sample_limit_stat, sample_statistic
from splab.core.spectral import (
    a_J_truncation_remainder,
    gap,
    limit_summary,
    psi_spectrum,
    relative_rank,
    sigma_J_analytic,
    sigma_J_mc,
    sigma_rank_envelope,
    subset_trace,
    trace_sqrt_psi,
)
from splab.core.utils import ordered_map
from splab.report import ExperimentReport

logger = logging.getLogger(__name__)

NAN = float("nan")
LARGE_DELTA = 0.25
RELATION_SPREAD = 2.0


@dataclass(frozen=True)
class Cell:
    profile: EigenProfile
    J: IndexBlock
    model: SpectralModel


def build_law(config: ExperimentConfig) -> KLLaw:
    return KLLaw(config.law, p=config.law_p, nu=config.student_nu, scale_spread=config.scale_spread)


def _make_cell(config: ExperimentConfig, dim: int, a: float, spike_gap: float, size: int | None) -> Cell:
    grouped = config.profile in ("spiked", "pervasive")
    if size is None:
        spike_size, j1, j2 = config.spike_size, config.j1, config.j2
        if j2 is None:
            # 分组模型缺省取整个尖峰块
            j2 = spike_size if grouped and j1 == 1 else j1
    elif grouped:
        # 分组模型：块大小同时决定尖峰个数，J = {1..size}
        spike_size, j1, j2 = size, 1, size
    else:
        spike_size, j1, j2 = config.spike_size, config.j1, config.j1 + size - 1
    profile = EigenProfile(
        kind=config.profile,
        dim=dim,
        a=a,
        spike_size=spike_size,
        gap=spike_gap,
        spread=config.spike_spread,
        pervasive_c=config.pervasive_c,
        pervasive_C=config.pervasive_C,
        tail_power=config.tail_power,
    )
    model = build_model(profile)
    J = check_block(profile, IndexBlock(j1, j2, dim))
    return Cell(profile, J, model)


def iter_cells(config: ExperimentConfig) -> list[Cell]:
    grid = itertools.product(
        config.dim_grid or (config.dim,),
        config.a_grid or (config.a,),
        config.gap_grid or (config.spike_gap,),
        config.block_grid or (None,),
    )
    return [_make_cell(config, dim, a, spike_gap, size) for dim, a, spike_gap, size in grid]


def single_cell(config: ExperimentConfig) -> Cell:
    return _make_cell(config, config.dim, config.a, config.spike_gap, None)


def truncation_block(config: ExperimentConfig, dim: int) -> IndexBlock | None:
    if config.truncation is None:
        return None
    return IndexBlock(1, config.truncation, dim)


def _safe_bound(theorem: str, inputs: BoundInputs) -> float:
    try:
        return bound_shape(theorem, inputs)
    except InvalidInput as exc:
        logger.debug("bound %s unavailable: %s", theorem, exc)
        return NAN


def _cell_fields(cell: Cell) -> dict[str, object]:
    return {
        "profile": cell.profile.kind,
        "dim": cell.profile.dim,
        "a": cell.profile.a,
        "gap": cell.profile.gap,
        "j1": cell.J.j1,
        "j2": cell.J.j2,
    }


CELL_COLUMNS = ["profile", "dim", "a", "gap", "j1", "j2"]


def run_quantities(config: ExperimentConfig) -> ExperimentReport:
    columns = CELL_COLUMNS + [
        "n",
        "g_J",
        "r_J",
        "sigma_J",
        "sigma_J_mc",
        "sigma_sq_upper_ratio",
        "sigma_sq_lower_ratio",
        "pairs",
        "psi_max",
        "psi_min",
        "A",
        "B",
        "C",
        "lambda_12",
        "lambda_16",
        "A_rem",
        "trace_sqrt_psi",
        "p_J",
        "C_eta",
        "c_eta",
    ]
    report = ExperimentReport("quantities", columns)
    law = build_law(config)
    for cell in iter_cells(config):
        model, J = cell.model, cell.J
        ps = psi_spectrum(model, J, law)
        summary = limit_summary(ps)
        envelope = sigma_rank_envelope(model, J, law)
        sigma = math.sqrt(envelope["sigma_sq"])
        sigma_mc = sigma_J_mc(model, J, law, config.sigma_draws, config.seed) if config.sigma_draws else NAN  # type: ignore[arg-type]
        I = truncation_block(config, model.dim)
        base = {
            **_cell_fields(cell),
            "g_J": gap(model, J),
            "r_J": envelope["r_J"],
            "sigma_J": sigma,
            "sigma_J_mc": sigma_mc,
            "sigma_sq_upper_ratio": envelope["upper_ratio"],
            "sigma_sq_lower_ratio": envelope["lower_ratio"],
            "pairs": len(ps),
            "psi_max": float(ps.values.max()),
            "psi_min": float(ps.values.min()),
            "A": summary.A,
            "B": summary.B,
            "C": summary.C,
            "lambda_12": summary.lambda_product(2) if len(ps) >= 2 else NAN,
            "lambda_16": summary.lambda_product(6) if len(ps) >= 6 else NAN,
            "A_rem": a_J_truncation_remainder(model, J, law, I),
            "trace_sqrt_psi": trace_sqrt_psi(psi_spectrum(model, J, law, I)),
            "C_eta": law.moment_bound(),
            "c_eta": law.lower_moment(),
        }
        for n in config.n_grid:
            report.add_row(**base, n=n, p_J=qprob(n, config.p, envelope["r_J"], sigma))
        logger.info("quantities: %s J=%s done", cell.profile.kind, J.label())
    return report


def declared_ratios(cell: Cell, law: KLLaw) -> dict[str, float]:
    model, J = cell.model, cell.J
    size = J.j2
    r = relative_rank(model, J)
    sigma_sq = sigma_J_analytic(model, J, law) ** 2
    summary = limit_summary(psi_spectrum(model, J, law))
    A, B, C = summary.A, summary.B, summary.C
    kind = cell.profile.kind
    if kind == "exp-decay":
        return {"r_over_J": r / size, "sigma2_over_J": sigma_sq / size, "A": A, "B": B, "C": C}
    if kind == "poly-decay":
        if size < 2:
            raise InvalidInput("poly-decay 的关系要求 J ≥ 2")
        log_size = math.log(size)
        return {
            "r_over_JlogJ": r / (size * log_size),
            "sigma2_over_J2logJ": sigma_sq / (size**2 * log_size),
            "A_over_J2logJ": A / (size**2 * log_size),
            "B_over_J2": B / size**2,
            "C_over_J2": C / size**2,
        }
    if kind == "pervasive":
        lam_J = model.lambdas[size - 1]
        tails = [subset_trace(model, J.complement, power) / lam_J**power for power in (1, 2, 3)]
        return {
            "r_over_J_plus_trace": r / (size + tails[0]),
            "sigma2_over_J_plus_trace": sigma_sq / (size + tails[0]),
            "A_over_J_trace": A / (size * tails[0]),
            "B2_over_J_trace2": B**2 / (size * tails[1]),
            "C3_over_J_trace3": C**3 / (size * tails[2]),
        }
    d = model.dim
    g = gap(model, J)
    return {
        "r_over_d_g": r * g / d,
        "sigma2_over_d_g2": sigma_sq * g**2 / d,
        "A_over_dJ_g2": A * g**2 / (d * size),
        "B2_over_dJ_g4": B**2 * g**4 / (d * size),
        "C3_over_dJ_g6": C**3 * g**6 / (d * size),
    }


def run_model_relations(config: ExperimentConfig) -> ExperimentReport:
    if config.j1 != 1:
        raise ConfigError("model-relations 只考虑 J = {1..J}，j1 必须为 1")
    law = build_law(config)
    cells = iter_cells(config)
    table = [(cell, declared_ratios(cell, law)) for cell in cells]
    names = list(table[0][1])
    report = ExperimentReport("model-relations", CELL_COLUMNS + names)
    for cell, ratios in table:
        report.add_row(**_cell_fields(cell), **ratios)

    stable = True
    for name in names:
        values = np.array([ratios[name] for _, ratios in table])
        spread = float(values.max() / values.min())
        report.summary[name] = {"min": float(values.min()), "max": float(values.max()), "spread": spread}
        if spread > RELATION_SPREAD:
            stable = False
            logger.warning("ratio %s spreads by %.3g across the grid", name, spread)
    report.summary["stable"] = stable
    return report


def run_clt_distance(config: ExperimentConfig, control: bool = False) -> ExperimentReport:
    """KS / W1 distance of n ||P^_J - P_J||_2^2 to its Gaussian-chaos limit over the n grid.

    With ``control`` the statistic is replaced by fresh limit draws, which gives
    the pure Monte Carlo noise level.
    """
    columns = [
        "n",
        "mc_runs",
        "limit_draws",
        "mean_stat",
        "A",
        "ks",
        "w1",
        "noise_floor",
        "ks_over_floor",
        "ks_normal",
        "skew_diag",
        "bound",
    ]
    report = ExperimentReport("clt-distance", columns)
    cell = single_cell(config)
    model, J = cell.model, cell.J
    law = build_law(config)
    seed = config.seed
    ps = psi_spectrum(model, J, law)
    summary = limit_summary(ps)
    if config.limit_draws < 10 * config.mc_runs:
        logger.warning("limit_draws=%d 小于 10·mc_runs=%d", config.limit_draws, 10 * config.mc_runs)
    limit = sample_limit_stat(ps, config.limit_draws, seed)  # type: ignore[arg-type]
    floor = ks_noise_floor(config.mc_runs, config.limit_draws)
    skew = (summary.C / summary.B) ** 3
    theorem = "clt-III" if config.standardized else "clt-II-a"
    I = truncation_block(config, model.dim)

    ks_values = []
    for index, n in enumerate(config.n_grid):
        if control:
            stats = sample_limit_stat(ps, config.mc_runs, seed, replicate=1, cell=index)  # type: ignore[arg-type]
        else:
            stats = np.array(
                ordered_map(
                    lambda r: sample_statistic(model, law, J, n, seed, r, cell=index),  # type: ignore[arg-type]
                    range(config.mc_runs),
                    config.threads,
                )
            )
        ks = ks_two_sample(stats, limit)
        ks_values.append(ks)
        inputs = inputs_for(model, J, law, n, config.p, config.s, config.q, I)
        report.add_row(
            n=n,
            mc_runs=config.mc_runs,
            limit_draws=config.limit_draws,
            mean_stat=float(stats.mean()),
            A=summary.A,
            ks=ks,
            w1=wasserstein1(stats, limit),
            noise_floor=floor,
            ks_over_floor=ks / floor,
            ks_normal=ks_vs_normal((stats - summary.A) / summary.B) if config.standardized else NAN,
            skew_diag=skew if config.standardized else NAN,
            bound=_safe_bound(theorem, inputs),
        )
        logger.info("clt-distance n=%d: ks=%.4f (floor %.4f)", n, ks, floor)

    decrease = ks_values[0] - ks_values[-1]
    report.summary = {
        "theorem": theorem,
        "ks_first": ks_values[0],
        "ks_last": ks_values[-1],
        "ks_decrease": decrease,
        "decrease_threshold": 2.0 * floor,
        "trend_ok": decrease > 2.0 * floor,
        # 距离全部落在 2 倍噪声下限内时，趋势无法从模拟误差中分辨
        "at_noise_floor": max(ks_values) <= 2.0 * floor,
        "skew_diag": skew,
    }
    if report.summary["at_noise_floor"] and not report.summary["trend_ok"]:
        logger.warning("clt-distance: KS 已在噪声下限 %.4f 附近，无法观察随 n 的下降", floor)
    return report


def run_bootstrap_coverage(config: ExperimentConfig) -> ExperimentReport:
    columns = [
        "n",
        "B",
        "mc_runs",
        "alpha",
        "rejection_rate",
        "binomial_se",
        "deviation",
        "within_3se",
        "bound_cov_A",
        "bound_cov_B",
    ]
    report = ExperimentReport("bootstrap-coverage", columns)
    cell = single_cell(config)
    law = build_law(config)
    multiplier = MultiplierLaw(config.multiplier)
    I = truncation_block(config, cell.model.dim)
    for index, n in enumerate(config.n_grid):
        record = coverage_experiment(
            cell.model,
            law,
            multiplier,
            cell.J,
            n,
            config.B,
            config.mc_runs,
            config.alpha,
            config.seed,  # type: ignore[arg-type]
            threads=config.threads,
            cell=index,
        )
        inputs = inputs_for(cell.model, cell.J, law, n, config.p, config.s, config.q, I)
        deviation = record.rejection_rate - config.alpha
        report.add_row(
            n=n,
            B=config.B,
            mc_runs=config.mc_runs,
            alpha=config.alpha,
            rejection_rate=record.rejection_rate,
            binomial_se=record.binomial_se,
            deviation=deviation,
            within_3se=abs(deviation) <= 3.0 * record.binomial_se,
            bound_cov_A=_safe_bound("cov-A", inputs),
            bound_cov_B=_safe_bound("cov-B", inputs),
        )
    return report


def run_perturbation_check(config: ExperimentConfig) -> ExperimentReport:
    columns = [
        "index",
        "profile",
        "dim",
        "j1",
        "j2",
        "delta",
        "lhs0",
        "rhs0",
        "ratio0",
        "lhs2",
        "rhs2",
        "ratio2",
        "lhs_cor",
        "rhs_cor",
        "floor",
        "passed",
    ]
    report = ExperimentReport("perturbation-check", columns)
    instances = perturbation_sweep(config.instances, config.seed, config.threads, config.use_min_delta)  # type: ignore[arg-type]
    for item in instances:
        record = item.record
        ratio0, ratio2 = record.ratios()
        report.add_row(
            index=item.index,
            profile=item.profile.kind,
            dim=item.profile.dim,
            j1=item.J.j1,
            j2=item.J.j2,
            delta=record.delta,
            lhs0=record.lhs0,
            rhs0=record.rhs0,
            ratio0=ratio0,
            lhs2=record.lhs2,
            rhs2=record.rhs2,
            ratio2=ratio2,
            lhs_cor=record.lhs_cor,
            rhs_cor=record.rhs_cor,
            floor=record.floor,
            passed=record.passed,
        )
    violations = sum(1 for item in instances if not item.record.passed)
    large = [item for item in instances if item.record.delta >= LARGE_DELTA]
    report.violations = violations
    report.summary = {
        "instances": len(instances),
        "violations": violations,
        "max_ratio0": max(item.record.ratios()[0] for item in instances),
        "max_ratio2": max(item.record.ratios()[1] for item in instances),
        "large_delta_instances": len(large),
        "large_delta_violations": sum(1 for item in large if not item.record.passed),
    }
    return report


def run_delta_tail(config: ExperimentConfig) -> ExperimentReport:
    columns = ["n", "replicates", "threshold_unit", "freq_c1", "freq_c2", "freq_c4", "p_J", "monotone"]
    report = ExperimentReport("delta-tail", columns)
    cell = single_cell(config)
    law = build_law(config)
    for index, n in enumerate(config.n_grid):
        record = delta_tail_check(
            cell.model, cell.J, law, n, config.mc_runs, config.seed, config.threads, cell=index  # type: ignore[arg-type]
        )
        freqs = [record.frequencies[c] for c in (1.0, 2.0, 4.0)]
        report.add_row(
            n=n,
            replicates=record.replicates,
            threshold_unit=record.threshold_unit,
            freq_c1=freqs[0],
            freq_c2=freqs[1],
            freq_c4=freqs[2],
            p_J=record.reference,
            monotone=freqs[0] >= freqs[1] >= freqs[2],
        )
    return report


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "quantities": run_quantities,
    "perturbation-check": run_perturbation_check,
    "clt-distance": run_clt_distance,
    "bootstrap-coverage": run_bootstrap_coverage,
    "model-relations": run_model_relations,
    "delta-tail": run_delta_tail,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    runner = RUNNERS.get(config.experiment)
    if runner is None:
        raise ConfigError(f"未知的实验：{config.experiment}")
    logger.info("start %s (seed=%s, threads=%d)", config.experiment, config.seed, config.threads)
    started = time.perf_counter()
    report = runner(config)
    report.wall_time = time.perf_counter() - started
    report.echo_config(asdict(config))
    logger.info("finished %s in %.2fs", config.experiment, report.wall_time)
    return report
