"""The even signed-permutation group, its action on eigen-pairs, and double cosets.

Elements are stored exactly: a sign vector in {-1,+1}^p and a 0-based
permutation array ``perm`` with P_perm e_i = e_{perm[i]}.  The matrix of
g = (signs, perm) is diag(signs) @ P_perm.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .config import check_cap
from .errors import DimensionError, ValidationError


def perm_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    seen = [False] * len(perm)
    s = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, n = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            n += 1
        if n % 2 == 0:
            s = -s
    return s


@dataclass(frozen=True)
class SignedPerm:
    signs: tuple
    perm: tuple

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        perm = tuple(int(i) for i in self.perm)
        if len(signs) != len(perm):
            raise DimensionError("signs and perm differ in length")
        if any(s not in (-1, 1) for s in signs):
            raise ValidationError("signs must be +-1")
        if sorted(perm) != list(range(len(perm))):
            raise ValidationError("perm is not a permutation of 0..p-1")
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "perm", perm)

    @property
    def p(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, p: int) -> "SignedPerm":
        return cls((1,) * p, tuple(range(p)))

    @classmethod
    def from_json(cls, obj) -> "SignedPerm":
        return cls(tuple(obj["signs"]), tuple(int(i) - 1 for i in obj["perm"]))

    def to_json(self) -> dict:
        return {"signs": list(self.signs), "perm": [i + 1 for i in self.perm]}

    def is_identity(self) -> bool:
        return self == SignedPerm.identity(self.p)

    def sort_key(self):
        return (self.signs, self.perm)

    def __lt__(self, other: "SignedPerm") -> bool:
        return self.sort_key() < other.sort_key()


def tsgn(g: SignedPerm) -> int:
    return int(np.prod(g.signs)) * perm_sign(g.perm)


def compose(g: SignedPerm, h: SignedPerm) -> SignedPerm:
    """Group product with matrix_of(compose(g, h)) == matrix_of(g) @ matrix_of(h)."""
    if g.p != h.p:
        raise DimensionError("cannot compose elements of different degree")
    signs = list(g.signs)
    for i in range(g.p):
        signs[g.perm[i]] *= h.signs[i]
    perm = tuple(g.perm[h.perm[i]] for i in range(g.p))
    return SignedPerm(tuple(signs), perm)


def inverse(g: SignedPerm) -> SignedPerm:
    inv = [0] * g.p
    for i, j in enumerate(g.perm):
        inv[j] = i
    return SignedPerm(tuple(g.signs[g.perm[i]] for i in range(g.p)), tuple(inv))


def matrix_of(g: SignedPerm) -> np.ndarray:
    P = np.zeros((g.p, g.p), dtype=int)
    for i, j in enumerate(g.perm):
        P[j, i] = g.signs[j]
    return P


def act_diag(g: SignedPerm, d) -> np.ndarray:
    """pi_g . d, i.e. the diagonal of P_g diag(d) P_g^{-1}."""
    d = np.asarray(d)
    if np.ndim(d) == 2:
        d = np.diag(d)
    if d.shape[0] != g.p:
        raise DimensionError("diagonal length does not match group degree")
    out = np.empty_like(d)
    out[list(g.perm)] = d
    return out


def act(g: SignedPerm, pt):
    """Left action g.(U, D) = (U P_g^{-1}, pi_g . D) on an EigenPair."""
    from .partitions import EigenPair

    if pt.p != g.p:
        raise DimensionError("group degree does not match eigen-pair dimension")
    P = matrix_of(g).astype(float)
    return EigenPair(pt.rotation @ P.T, act_diag(g, pt.scale))


# ---------------------------------------------------------------- arrays


def _perm_array(p: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(p))), dtype=np.int8).reshape(-1, p)


def _perm_signs(perms: np.ndarray) -> np.ndarray:
    return np.array([perm_sign(row) for row in perms], dtype=np.int8)


def encode(signs: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """Integer codes ordered lexicographically by (signs, perm) with -1 < +1."""
    signs = np.atleast_2d(signs)
    perms = np.atleast_2d(perms)
    p = perms.shape[1]
    code = np.zeros(perms.shape[0], dtype=np.int64)
    for i in range(p):
        code = code * 2 + (signs[:, i] > 0)
    for i in range(p):
        code = code * max(p, 1) + perms[:, i]
    return code


@dataclass(frozen=True)
class GroupArrays:
    """All elements of a signed-permutation subgroup, sorted by code."""

    p: int
    signs: np.ndarray
    perms: np.ndarray
    codes: np.ndarray

    def __len__(self) -> int:
        return int(self.codes.shape[0])

    def element(self, i: int) -> SignedPerm:
        return SignedPerm(tuple(self.signs[i]), tuple(self.perms[i]))

    def elements(self) -> list:
        return [self.element(i) for i in range(len(self))]

    def index_of(self, codes: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.codes, codes)
        idx = np.minimum(idx, len(self) - 1)
        if not np.all(self.codes[idx] == codes):
            raise ValidationError("element not in group")
        return idx


def _sorted_arrays(p: int, signs: np.ndarray, perms: np.ndarray) -> GroupArrays:
    codes = encode(signs, perms)
    order = np.argsort(codes, kind="stable")
    for a in (signs, perms, codes):
        a.setflags(write=False)
    out = GroupArrays(p, signs[order], perms[order], codes[order])
    for a in (out.signs, out.perms, out.codes):
        a.setflags(write=False)
    return out


def _sign_vectors(p: int) -> np.ndarray:
    if p == 0:
        return np.zeros((1, 0), dtype=np.int8)
    bits = np.array(list(itertools.product((-1, 1), repeat=p)), dtype=np.int8)
    return bits


@functools.lru_cache(maxsize=16)
def group_arrays(p: int) -> GroupArrays:
    """Every element of the even signed-permutation group of degree p."""
    perms = _perm_array(p)
    psg = _perm_signs(perms)
    sv = _sign_vectors(p)
    sgn = np.prod(sv, axis=1) if p else np.ones(1, dtype=np.int8)
    S, P = [], []
    for s in (1, -1):
        ss = sv[sgn == s]
        pp = perms[psg == s]
        S.append(np.repeat(ss, len(pp), axis=0))
        P.append(np.tile(pp, (len(ss), 1)))
    return _sorted_arrays(p, np.concatenate(S), np.concatenate(P))


def group_order(p: int) -> int:
    return 1 if p <= 1 else 2 ** (p - 1) * math.factorial(p)


def enumerate_tsp_plus(p: int, cap: int | None = None) -> list:
    """All 2^{p-1} p! elements, in lexicographic (signs, perm) order."""
    if p < 1:
        raise ValidationError("p must be positive")
    check_cap(p, cap, "signed-permutation enumeration")
    return group_arrays(p).elements()


def compose_arrays(gs, gp, hs, hp):
    """Row-wise compose of array-encoded elements; either may be a single row."""
    gs, gp, hs, hp = (np.atleast_2d(a) for a in (gs, gp, hs, hp))
    n = max(gs.shape[0], hs.shape[0])
    gs = np.broadcast_to(gs, (n, gs.shape[1])).astype(np.int8)
    gp = np.broadcast_to(gp, (n, gp.shape[1]))
    hs = np.broadcast_to(hs, (n, hs.shape[1]))
    hp = np.broadcast_to(hp, (n, hp.shape[1]))
    signs = gs.copy()
    prod = np.take_along_axis(signs, gp.astype(np.intp), 1) * hs
    np.put_along_axis(signs, gp.astype(np.intp), prod.astype(np.int8), 1)
    perms = np.take_along_axis(gp, hp.astype(np.intp), 1)
    return signs, perms.astype(np.int8)


# ---------------------------------------------------------------- subgroups


@dataclass(frozen=True)
class Subgroup:
    """The subgroup Gamma_J^0 attached to a set partition J."""

    partition: object
    arrays: GroupArrays

    @property
    def elements(self) -> list:
        return self.arrays.elements()

    def __len__(self) -> int:
        return len(self.arrays)

    def expected_order(self) -> int:
        sizes = self.partition.sizes()
        return 2 ** (self.partition.p - len(sizes)) * math.prod(math.factorial(k) for k in sizes)

    def contains(self, g: SignedPerm) -> bool:
        return in_gamma_j0(g, self.partition)


def in_gamma_j0(g: SignedPerm, J) -> bool:
    """g preserves every block and has determinant +1 on each block."""
    for block in J.blocks:
        bset = set(block)
        if any(g.perm[i] not in bset for i in block):
            return False
        sub = SignedPerm(tuple(g.signs[i] for i in block), tuple(block.index(g.perm[i]) for i in block))
        if tsgn(sub) != 1:
            return False
    return True


def block_generators(J) -> list:
    """Generators of Gamma_J^0: signed adjacent transpositions and sign pairs per block."""
    p = J.p
    gens = []
    for block in J.blocks:
        for a, b in zip(block, block[1:]):
            perm = list(range(p))
            perm[a], perm[b] = b, a
            signs = [1] * p
            signs[a] = -1
            gens.append(SignedPerm(tuple(signs), tuple(perm)))
            signs = [1] * p
            signs[a] = signs[b] = -1
            gens.append(SignedPerm(tuple(signs), tuple(range(p))))
    return gens


@functools.lru_cache(maxsize=256)
def _gamma_arrays(J) -> GroupArrays:
    p = J.p
    per_block = []
    for block in J.blocks:
        k = len(block)
        elems = group_arrays(k)
        per_block.append((block, elems))
    signs = np.ones((1, p), dtype=np.int8)
    perms = np.arange(p, dtype=np.int8)[None, :]
    for block, elems in per_block:
        n0, n1 = signs.shape[0], len(elems)
        signs = np.repeat(signs, n1, axis=0)
        perms = np.repeat(perms, n1, axis=0)
        b = np.array(block)
        signs[:, b] = np.tile(elems.signs, (n0, 1))
        perms[:, b] = b[np.tile(elems.perms, (n0, 1)).astype(np.intp)]
    return _sorted_arrays(p, signs, perms)


def gamma_j0(J) -> Subgroup:
    """Elements of S~_p^+ that fix every diagonal D whose multiplicity partition is J."""
    return Subgroup(J, _gamma_arrays(J))


def identity_component_stabilizer(J) -> Subgroup:
    return gamma_j0(J)


def _components(G: GroupArrays, left: Iterable[SignedPerm], right: Iterable[SignedPerm]):
    n = len(G)
    rows, cols = [], []
    base = np.arange(n)
    for h in left:
        s, pm = compose_arrays(np.array(h.signs), np.array(h.perm), G.signs, G.perms)
        rows.append(base)
        cols.append(G.index_of(encode(s, pm)))
    for h in right:
        s, pm = compose_arrays(G.signs, G.perms, np.array(h.signs), np.array(h.perm))
        rows.append(base)
        cols.append(G.index_of(encode(s, pm)))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    graph = coo_matrix((np.ones(r.shape[0], dtype=np.int8), (r, c)), shape=(n, n))
    return connected_components(graph, directed=True, connection="weak")


def double_coset_decomposition(J_D, J_L, p: int, cap: int | None = None):
    """Return (reps, labels, sizes) for Gamma_{J_D}^0 \\ S~_p^+ / Gamma_{J_L}^0.

    ``labels[i]`` is the coset index of the i-th group element in code
    order; reps are the lexicographically smallest element of each coset,
    and cosets are numbered in the order of their representatives.
    """
    if J_D.p != p or J_L.p != p:
        raise DimensionError("partitions do not match p")
    check_cap(p, cap, "double-coset enumeration")
    G = group_arrays(p)
    ncomp, labels = _components(G, block_generators(J_D), block_generators(J_L))
    # element arrays are code-sorted, so the first hit per label is its minimum
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(ncomp, dtype=np.int64)
    relabel[order] = np.arange(ncomp)
    labels = relabel[labels]
    reps = [G.element(int(i)) for i in first[order]]
    sizes = np.bincount(labels, minlength=ncomp)
    return reps, labels, sizes


def double_coset_reps(J_D, J_L, p: int, cap: int | None = None) -> list:
    return double_coset_decomposition(J_D, J_L, p, cap)[0]
