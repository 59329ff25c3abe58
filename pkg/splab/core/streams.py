"""Seeded substreams.

Every random draw in splab comes from a ``Philox`` generator keyed by
``(master seed, indices..., role)``. Philox is counter based, so a replicate's
stream depends only on its key and never on how many other replicates ran
before it or on which worker thread ran it.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput

ROLE_CODES = {
    "data": 1,
    "prime": 2,
    "boot": 3,
    "limit": 4,
    "perturb": 5,
    "sigma": 6,
    "psi": 7,
}


def substream(seed: int, *indices: int, role: str = "data") -> np.random.Generator:
    if seed is None:
        raise InvalidInput("必须显式提供随机种子")
    if role not in ROLE_CODES:
        raise InvalidInput(f"未知的随机流角色：{role}")
    key = [int(seed), *(int(index) for index in indices), ROLE_CODES[role]]
    if any(value < 0 for value in key):
        raise InvalidInput(f"随机种子与索引必须非负：{key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
