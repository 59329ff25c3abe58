from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import InvalidInput
from .models import EigenSystem, IndexBlock, SymOperator

SUPPORTED_Q = (1, 2, 3, np.inf)


def _normalize_signs(vectors: np.ndarray) -> np.ndarray:
    # 每个特征向量第一个非零坐标取正
    out = vectors.copy()
    for col in range(out.shape[1]):
        column = out[:, col]
        tol = 1e-12 * np.abs(column).max(initial=0.0)
        nonzero = np.flatnonzero(np.abs(column) > tol)
        if nonzero.size and column[nonzero[0]] < 0.0:
            out[:, col] = -column
    return out


def eigh(op: SymOperator) -> EigenSystem:
    """Eigenvalues in non-increasing order, sign-normalized orthonormal eigenvectors."""
    values, vectors = linalg.eigh(op.entries, check_finite=True)
    order = np.argsort(-values, kind="stable")
    return EigenSystem(values[order], _normalize_signs(vectors[:, order]))


def _check_block(es_dim: int, J: IndexBlock) -> None:
    if J.dim != es_dim:
        raise InvalidInput(f"J 的维数 {J.dim} 与算子维数 {es_dim} 不一致")


def projector(es: EigenSystem, J: IndexBlock) -> SymOperator:
    _check_block(es.dim, J)
    basis = es.eigenvectors[:, J.indices]
    return SymOperator(basis @ basis.T)


def coordinate_projector(J: IndexBlock) -> SymOperator:
    """P_J in the model eigenbasis (u_j = e_j)."""
    diag = np.zeros(J.dim)
    diag[J.indices] = 1.0
    return SymOperator.diag(diag)


def schatten_norm(op: SymOperator, q: float) -> float:
    if q not in SUPPORTED_Q:
        raise InvalidInput(f"不支持的 Schatten 指数 q={q}，可选 1, 2, 3, inf")
    if q == 2:
        return float(np.sqrt(np.sum(op.entries**2)))
    singular = np.abs(linalg.eigvalsh(op.entries))
    if q == np.inf:
        return float(singular.max())
    return float(np.sum(singular**q) ** (1.0 / q))


def hs_distance_sq(a: SymOperator, b: SymOperator) -> float:
    if a.dim != b.dim:
        raise InvalidInput(f"维数不一致：{a.dim} 与 {b.dim}")
    diff = a.entries - b.entries
    return float(np.sum(diff * diff))
