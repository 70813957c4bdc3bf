"""Multiplicity partitions, the map F(U, D) = U D U^T, and its fibers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from more_itertools import set_partitions

from .config import DEFAULT_TOL, Tolerances, check_cap
from .errors import DimensionError, ValidationError
from .rotations import as_square, check_rotation


@dataclass(frozen=True)
class SetPartition:
    """Partition of {0, ..., p-1}; blocks sorted internally and by minimum."""

    blocks: tuple
    p: int = field(default=-1)

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(int(i) for i in b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        if any(len(b) == 0 for b in blocks):
            raise ValidationError("empty block")
        flat = [i for b in blocks for i in b]
        p = self.p if self.p >= 0 else len(flat)
        if sorted(flat) != list(range(p)):
            raise ValidationError("blocks do not partition 0..p-1")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "p", p)

    @classmethod
    def top(cls, p: int) -> "SetPartition":
        return cls(tuple((i,) for i in range(p)), p)

    @classmethod
    def bottom(cls, p: int) -> "SetPartition":
        return cls((tuple(range(p)),), p)

    @classmethod
    def from_json(cls, obj) -> "SetPartition":
        return cls(tuple(tuple(int(i) - 1 for i in b) for b in obj))

    def to_json(self) -> list:
        return [[i + 1 for i in b] for b in self.blocks]

    def sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    def int_partition(self) -> "IntPartition":
        return IntPartition(self.sizes())

    def is_top(self) -> bool:
        return len(self.blocks) == self.p

    def block_of(self) -> np.ndarray:
        lab = np.empty(self.p, dtype=int)
        for k, b in enumerate(self.blocks):
            lab[list(b)] = k
        return lab


@dataclass(frozen=True)
class IntPartition:
    parts: tuple

    def __post_init__(self):
        parts = tuple(sorted((int(x) for x in self.parts), reverse=True))
        if any(x <= 0 for x in parts):
            raise ValidationError("parts must be positive")
        object.__setattr__(self, "parts", parts)

    @property
    def total(self) -> int:
        return sum(self.parts)


def refines(J: SetPartition, K: SetPartition) -> bool:
    """True iff every block of K lies inside a block of J."""
    if J.p != K.p:
        raise DimensionError("partitions of different sets")
    lab = J.block_of()
    return all(len({lab[i] for i in b}) == 1 for b in K.blocks)


def common_refinement(J: SetPartition, K: SetPartition) -> SetPartition:
    if J.p != K.p:
        raise DimensionError("partitions of different sets")
    a, b = J.block_of(), K.block_of()
    groups: dict = {}
    for i in range(J.p):
        groups.setdefault((a[i], b[i]), []).append(i)
    return SetPartition(tuple(tuple(g) for g in groups.values()), J.p)


def all_set_partitions(p: int) -> list:
    return [SetPartition(tuple(tuple(b) for b in part), p) for part in set_partitions(range(p))]


class EigenPair:
    """A point (U, D) with U in SO(p) and D positive diagonal (stored as a vector)."""

    __slots__ = ("rotation", "scale")

    def __init__(self, rotation, scale, tol: Tolerances = DEFAULT_TOL, validate: bool = True):
        U = as_square(rotation, "rotation")
        d = np.asarray(scale, dtype=float)
        if d.ndim == 2:
            d = np.diag(d)
        if d.shape != (U.shape[0],):
            raise DimensionError("scale length does not match rotation")
        if validate:
            check_rotation(U, tol)
            if not np.all(d > 0):
                raise ValidationError("scale entries must be positive")
        U = U.copy()
        d = d.copy()
        U.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "rotation", U)
        object.__setattr__(self, "scale", d)

    def __setattr__(self, name, value):
        raise AttributeError("EigenPair is immutable")

    @property
    def p(self) -> int:
        return self.scale.shape[0]

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.scale)

    def __repr__(self) -> str:
        return f"EigenPair(p={self.p}, scale={self.scale.tolist()})"


def eigen_compose(pt: EigenPair) -> np.ndarray:
    U = pt.rotation
    X = (U * pt.scale) @ U.T
    return 0.5 * (X + X.T)


def check_spd(X, tol: float = 1e-10) -> np.ndarray:
    X = as_square(X, "SPD matrix")
    if np.linalg.norm(X - X.T) > tol * max(1.0, np.linalg.norm(X)):
        raise ValidationError("matrix is not symmetric")
    Xs = 0.5 * (X + X.T)
    if np.linalg.eigvalsh(Xs)[0] <= 0:
        raise ValidationError("matrix is not positive-definite")
    return Xs


def eigen_decompose(X, tol: float = 1e-10) -> EigenPair:
    """Canonical eigen-decomposition: ascending eigenvalues, det U = +1.

    Each eigenvector's first non-negligible coordinate is made positive,
    then the last column is negated if needed to land in SO(p).
    """
    X = check_spd(X, tol)
    w, U = np.linalg.eigh(X)
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
    if np.linalg.det(U) < 0:
        U[:, -1] = -U[:, -1]
    return EigenPair(U, w, validate=False)


def partition_of_diag(D, rtol: float = 1e-9) -> SetPartition:
    """Group indices whose entries agree to relative tolerance, transitively."""
    d = np.asarray(D, dtype=float)
    if d.ndim == 2:
        d = np.diag(d)
    if not np.all(d > 0):
        raise ValidationError("diagonal entries must be positive")
    p = d.shape[0]
    parent = list(range(p))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(p):
        for j in range(i + 1, p):
            if abs(d[i] - d[j]) <= rtol * max(d[i], d[j]):
                parent[find(j)] = find(i)
    groups: dict = {}
    for i in range(p):
        groups.setdefault(find(i), []).append(i)
    return SetPartition(tuple(tuple(g) for g in groups.values()), p)


@dataclass(frozen=True)
class FiberSummary:
    partition: SetPartition
    component_count: int
    component_shape: tuple


def component_count(J: SetPartition) -> int:
    r = len(J.blocks)
    return 2 ** (r - 1) * math.factorial(J.p) // math.prod(math.factorial(k) for k in J.sizes())


def fiber_summary(D, rtol: float = 1e-9) -> FiberSummary:
    J = partition_of_diag(D, rtol)
    return FiberSummary(J, component_count(J), J.sizes())


def enumerate_fiber_top(pt: EigenPair, cap: int | None = None, rtol: float = 1e-9) -> list:
    """All 2^{p-1} p! eigen-decompositions of F(pt), for distinct eigenvalues."""
    from .signed_perms import act, enumerate_tsp_plus

    if not partition_of_diag(pt.scale, rtol).is_top():
        raise ValidationError("fiber enumeration requires distinct eigenvalues")
    check_cap(pt.p, cap, "fiber enumeration")
    return [act(g, pt) for g in enumerate_tsp_plus(pt.p, cap)]
