"""Tolerances and enumeration caps."""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import CapExceededError

DEFAULT_CAP_P = 8
CAP_ENV_VAR = "SPDGEO_CAP_P"


@dataclass(frozen=True)
class Tolerances:
    ortho: float = 1e-10
    skew: float = 1e-10
    recon: float = 1e-8
    inv: float = 1e-8


DEFAULT_TOL = Tolerances()


def cap_p(override: int | None = None) -> int:
    """Return the enumeration cap on the matrix dimension.

    An explicit ``override`` wins, then the ``SPDGEO_CAP_P`` environment
    variable, then :data:`DEFAULT_CAP_P`.
    """
    if override is not None:
        return int(override)
    env = os.environ.get(CAP_ENV_VAR)
    if env:
        return int(env)
    return DEFAULT_CAP_P


def check_cap(p: int, override: int | None = None, what: str = "enumeration") -> None:
    limit = cap_p(override)
    if p > limit:
        raise CapExceededError(f"{what} at p={p} exceeds cap p<={limit}")
