from __future__ import annotations

import math

import numpy as np
from scipy import linalg

from .errors import InvalidInput, NoComplement
from .laws import KLLaw
from .models import IndexBlock, LimitLawSummary, PsiSpectrum, SpectralModel, SymOperator
from .streams import substream

MC_BATCH = 50_000


def _require_block(model: SpectralModel, J: IndexBlock) -> None:
    if J.dim != model.dim:
        raise InvalidInput(f"J 的维数 {J.dim} 与模型维数 {model.dim} 不一致")
    if J.is_full:
        raise NoComplement("J 覆盖全部指标，补集为空")


def _truncated_complement(J: IndexBlock, I: IndexBlock | None) -> np.ndarray:
    complement = J.complement
    if I is None:
        return complement
    if I.j1 != 1 or I.dim != J.dim:
        raise InvalidInput(f"截断集必须形如 I={{1..i2}}，得到 {I.label()}")
    return complement[complement < I.j2]


def gap(model: SpectralModel, J: IndexBlock) -> float:
    _require_block(model, J)
    lam = model.lambdas
    candidates = []
    if J.j1 > 1:
        candidates.append(lam[J.j1 - 2] - lam[J.j1 - 1])
    if J.j2 < model.dim:
        candidates.append(lam[J.j2 - 1] - lam[J.j2])
    return float(min(candidates))


def transform_weights(model: SpectralModel, J: IndexBlock) -> np.ndarray:
    """Diagonal of |R_{J^c}|^{1/2} + g_J^{-1/2} P_J in the model basis."""
    g = gap(model, J)
    lam = model.lambdas
    weights = np.empty(model.dim)
    head = np.arange(0, J.j1 - 1)
    tail = np.arange(J.j2, model.dim)
    weights[head] = 1.0 / np.sqrt(np.abs(lam[head] - lam[J.j1 - 1]))
    weights[J.indices] = 1.0 / math.sqrt(g)
    weights[tail] = 1.0 / np.sqrt(np.abs(lam[tail] - lam[J.j2 - 1]))
    return weights


def linear_term(
    model: SpectralModel,
    J: IndexBlock,
    A: SymOperator,
    I: IndexBlock | None = None,
) -> SymOperator:
    """L_J A (or the truncated L_{J,I} A when I = {1..i2} is given)."""
    _require_block(model, J)
    if A.dim != model.dim:
        raise InvalidInput(f"算子维数 {A.dim} 与模型维数 {model.dim} 不一致")
    lam = model.lambdas
    rows = J.indices
    cols = _truncated_complement(J, I)
    out = np.zeros((model.dim, model.dim))
    if cols.size:
        block = A.entries[np.ix_(rows, cols)] / (lam[rows][:, None] - lam[cols][None, :])
        out[np.ix_(rows, cols)] = block
        out[np.ix_(cols, rows)] = block.T
    return SymOperator(out)


def _congruence_norm(weights: np.ndarray, E: SymOperator) -> float:
    transformed = weights[:, None] * E.entries * weights[None, :]
    return float(np.abs(linalg.eigvalsh(transformed)).max())


def delta_J(model: SpectralModel, J: IndexBlock, E: SymOperator, use_min_delta: bool = False) -> float:
    _require_block(model, J)
    if E.dim != model.dim:
        raise InvalidInput(f"扰动维数 {E.dim} 与模型维数 {model.dim} 不一致")
    value = _congruence_norm(transform_weights(model, J), E)
    if use_min_delta and (J.j1 == 1 or J.j2 == model.dim):
        value = min(value, delta_complement(model, J, E))
    return value


def delta_complement(model: SpectralModel, J: IndexBlock, E: SymOperator) -> float:
    complement = J.complement_block()
    return _congruence_norm(transform_weights(model, complement), E)


def relative_rank(model: SpectralModel, J: IndexBlock) -> float:
    _require_block(model, J)
    lam = model.lambdas
    j1, j2 = J.j1, J.j2
    if j1 == 1:
        nxt = lam[j2]
        head = np.sum(lam[:j2] / (lam[:j2] - nxt))
        return float(head + np.sum(lam[j2:]) / (lam[j2 - 1] - nxt))
    edge_left = lam[j1 - 1]
    edge_right = lam[j2 - 1]
    left = np.sum(lam[: j1 - 1] / (lam[: j1 - 1] - edge_left))
    right = np.sum(lam[j2:] / (edge_right - lam[j2:]))
    inner = np.sum(lam[j1 - 1 : j2]) / gap(model, J)
    return float(left + right + inner)


def sigma_weights(model: SpectralModel, J: IndexBlock) -> np.ndarray:
    """Eigenvalues theta of the transformed covariance used by sigma_J.

    For j1 = 1 the roles of J and J^c are swapped, so the transform of the
    interval J^c = {j2+1..d} is used.
    """
    _require_block(model, J)
    block = J.complement_block() if J.j1 == 1 else J
    return transform_weights(model, block) ** 2 * model.lambdas


def sigma_J_analytic(model: SpectralModel, J: IndexBlock, law: KLLaw) -> float:
    law.require_cumulant(4)
    theta = sigma_weights(model, J)
    # diag E(YY^T - D)^2 = theta_j sum_k alpha_jk theta_k - theta_j^2, alpha_jj = E eta^4
    per_row = theta * (law.alpha_matrix(model.dim) @ theta) - theta**2
    return float(math.sqrt(per_row.max()))


def sigma_J_mc(model: SpectralModel, J: IndexBlock, law: KLLaw, n_draws: int, seed: int) -> float:
    if n_draws < 10_000:
        raise InvalidInput(f"n_draws 至少为 10^4，得到 {n_draws}")
    theta = sigma_weights(model, J)
    root = np.sqrt(theta)
    rng = substream(seed, role="sigma")
    second = np.zeros((model.dim, model.dim))
    outer = np.zeros((model.dim, model.dim))
    remaining = n_draws
    while remaining > 0:
        batch = min(MC_BATCH, remaining)
        Y = law.draw(rng, batch, model.dim) * root
        norms = np.einsum("ij,ij->i", Y, Y)
        second += (Y * norms[:, None]).T @ Y
        outer += Y.T @ Y
        remaining -= batch
    # (YY^T - D)^2 = |Y|^2 YY^T - YY^T D - D YY^T + D^2
    D = np.diag(theta)
    mean_square = (second - outer @ D - D @ outer) / n_draws + D @ D
    mean_square = 0.5 * (mean_square + mean_square.T)
    return float(math.sqrt(np.abs(linalg.eigvalsh(mean_square)).max()))


def psi_spectrum(
    model: SpectralModel,
    J: IndexBlock,
    law: KLLaw,
    I: IndexBlock | None = None,
) -> PsiSpectrum:
    """Eigenvalues 2 alpha_jk lambda_j lambda_k / (lambda_k - lambda_j)^2 of Psi_J (or Psi_{J,I}).

    alpha enters to the first power: the variance of sqrt(2) X_j X_k / (lambda_j - lambda_k)
    is 2 alpha_jk lambda_j lambda_k / (lambda_j - lambda_k)^2.
    """
    _require_block(model, J)
    law.require_cumulant(4)
    lam = model.lambdas
    alpha = law.alpha_matrix(model.dim)
    pairs = []
    for j in J.indices:
        for k in _truncated_complement(J, I):
            value = 2.0 * alpha[j, k] * lam[j] * lam[k] / (lam[k] - lam[j]) ** 2
            pairs.append((int(j) + 1, int(k) + 1, float(value)))
    return PsiSpectrum(tuple(pairs), I)


def limit_summary(ps: PsiSpectrum) -> LimitLawSummary:
    if len(ps) == 0:
        raise InvalidInput("Ψ 谱为空")
    values = ps.sorted_values()
    products = np.cumprod(values[:6])
    return LimitLawSummary(
        A=float(values.sum()),
        B=float(math.sqrt(2.0) * np.sqrt(np.sum(values**2))),
        C=float(2.0 * np.sum(values**3) ** (1.0 / 3.0)),
        lambda_products=tuple(float(v) for v in products),
    )


def trace_sqrt_psi(ps: PsiSpectrum) -> float:
    return float(np.sum(np.sqrt(ps.values)))


def a_J_truncation_remainder(
    model: SpectralModel,
    J: IndexBlock,
    law: KLLaw,
    I: IndexBlock | None,
) -> float:
    """A_{J,I^c}: the nuclear norm of Psi_J - Psi_{J,I}."""
    full = psi_spectrum(model, J, law)
    if I is None:
        return 0.0
    _truncated_complement(J, I)
    kept = {(j, k) for j, k, _ in psi_spectrum(model, J, law, I).pairs}
    return float(sum(value for j, k, value in full.pairs if (j, k) not in kept))


def subset_trace(model: SpectralModel, indices, power: int = 1) -> float:  # type: ignore[no-untyped-def]
    """tr_I(Sigma^power) for 0-based indices (array) or an IndexBlock."""
    if isinstance(indices, IndexBlock):
        indices = indices.indices
    idx = np.asarray(indices, dtype=int)
    return float(np.sum(model.lambdas[idx] ** power))


def sigma_rank_envelope(model: SpectralModel, J: IndexBlock, law: KLLaw) -> dict[str, float]:
    sigma_sq = sigma_J_analytic(model, J, law) ** 2
    r = relative_rank(model, J)
    g = gap(model, J)
    lam = model.lambdas
    if J.j1 == 1:
        lead = lam[J.j2 - 1] / g
    else:
        lead = max(lam[J.j1 - 2] / (lam[J.j1 - 2] - lam[J.j1 - 1]), lam[J.j1 - 1] / g)
    upper = lead * r
    lower = lead * r - lead**2
    return {
        "sigma_sq": sigma_sq,
        "r_J": r,
        "lead": float(lead),
        "upper": float(upper),
        "lower": float(lower),
        "upper_ratio": float(sigma_sq / upper),
        "lower_ratio": float(sigma_sq / lower) if lower > 0 else math.inf,
    }


def _pair_coordinates(model: SpectralModel, J: IndexBlock, X: np.ndarray, cols: np.ndarray) -> np.ndarray:
    lam = model.lambdas
    rows = J.indices
    scale = math.sqrt(2.0) / (lam[rows][:, None] - lam[cols][None, :])
    coords = X[:, rows][:, :, None] * X[:, cols][:, None, :] * scale[None, :, :]
    return coords.reshape(X.shape[0], -1)


def mc_psi_covariance(
    model: SpectralModel,
    J: IndexBlock,
    law: KLLaw,
    draws: int,
    seed: int,
    I: IndexBlock | None = None,
) -> np.ndarray:
    """Eigenvalues (descending) of the sample covariance of L_J(X (x) X).

    L_J(X (x) X) lives on the span of (e_j e_k^T + e_k e_j^T)/sqrt(2), j in J, k in J^c;
    its coordinates in that orthonormal system are sqrt(2) X_j X_k / (lambda_j - lambda_k),
    so their covariance has the eigenvalues of Psi_J.
    """
    _require_block(model, J)
    cols = _truncated_complement(J, I)
    rng = substream(seed, role="psi")
    X = law.draw(rng, draws, model.dim) * np.sqrt(model.lambdas)
    coords = _pair_coordinates(model, J, X, cols)
    cov = np.atleast_2d(np.cov(coords, rowvar=False))
    return np.sort(linalg.eigvalsh(cov))[::-1]


def mc_linear_term_energy(
    model: SpectralModel,
    J: IndexBlock,
    law: KLLaw,
    draws: int,
    seed: int,
) -> tuple[float, float]:
    _require_block(model, J)
    rng = substream(seed, role="psi")
    X = law.draw(rng, draws, model.dim) * np.sqrt(model.lambdas)
    coords = _pair_coordinates(model, J, X, J.complement)
    energy = np.sum(coords**2, axis=1)
    return float(energy.mean()), float(energy.std(ddof=1) / math.sqrt(draws))
