"""Geodesics in M(p), their scaling-rotation curves, and uniqueness classification."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOL
from .errors import DimensionError, NumericalFailure, ValidationError
from .partitions import EigenPair, SetPartition, check_spd, common_refinement, partition_of_diag
from .rotations import block_skew, is_involution, normal_form, so_log
from .signed_perms import SignedPerm, act_diag, matrix_of, perm_sign
from .sr_metric import MetricConfig, MinimalPairRecord, d_sr

IMMERSION_THRESHOLD = 1e-9


@dataclass(frozen=True)
class Geodesic:
    """t -> (e^{tA} U, e^{tL} D) on [t0, t1]."""

    base: EigenPair
    rot_vel: np.ndarray
    scale_vel: np.ndarray
    interval: tuple = (0.0, 1.0)

    def __post_init__(self):
        A = np.asarray(self.rot_vel, float)
        L = np.asarray(self.scale_vel, float)
        if L.ndim == 2:
            L = np.diag(L)
        if A.shape != (self.base.p, self.base.p) or L.shape != (self.base.p,):
            raise DimensionError("velocity shapes do not match the base point")
        if np.linalg.norm(A + A.T) > DEFAULT_TOL.skew:
            raise ValidationError("rotational velocity must be skew-symmetric")
        t0, t1 = (float(x) for x in self.interval)
        if not t1 > t0:
            raise ValidationError("interval must have positive length")
        object.__setattr__(self, "rot_vel", A)
        object.__setattr__(self, "scale_vel", L)
        object.__setattr__(self, "interval", (t0, t1))

    def _check_t(self, t: float) -> None:
        t0, t1 = self.interval
        if t < t0 - 1e-12 or t > t1 + 1e-12:
            raise ValidationError(f"t={t} outside [{t0}, {t1}]")

    def point(self, t: float) -> EigenPair:
        self._check_t(t)
        return EigenPair(
            scipy.linalg.expm(t * self.rot_vel) @ self.base.rotation,
            np.exp(t * self.scale_vel) * self.base.scale,
            validate=False,
        )

    def length(self, k: float = 1.0) -> float:
        t0, t1 = self.interval
        return float((t1 - t0) * np.sqrt(0.5 * k * np.sum(self.rot_vel**2) + np.sum(self.scale_vel**2)))


@dataclass(frozen=True)
class CurveSample:
    times: np.ndarray
    values: np.ndarray
    derivative_norms: np.ndarray

    def to_json(self) -> dict:
        return {
            "times": self.times.tolist(),
            "values": self.values.tolist(),
            "derivative_norms": self.derivative_norms.tolist(),
        }


def ssr_eval(g: Geodesic, t: float) -> np.ndarray:
    pt = g.point(t)
    X = (pt.rotation * pt.scale) @ pt.rotation.T
    return 0.5 * (X + X.T)


def curve_derivative(g: Geodesic, t: float) -> np.ndarray:
    """e^{tA} ([A, U Lam(t) U^T] + U L Lam(t) U^T) e^{-tA}, Lam(t) = e^{tL} D."""
    g._check_t(t)
    A, U = g.rot_vel, g.base.rotation
    lam = np.exp(t * g.scale_vel) * g.base.scale
    S = (U * lam) @ U.T
    inner = A @ S - S @ A + (U * (g.scale_vel * lam)) @ U.T
    E = scipy.linalg.expm(t * A)
    return E @ inner @ E.T


def sample_curve(g: Geodesic, n: int = 64) -> CurveSample:
    t0, t1 = g.interval
    ts = np.linspace(t0, t1, n)
    vals = np.array([ssr_eval(g, t) for t in ts])
    norms = np.array([np.linalg.norm(curve_derivative(g, t)) for t in ts])
    return CurveSample(ts, vals, norms)


class ImmersionKind(enum.Enum):
    CONSTANT = "Constant"
    IMMERSION = "Immersion"


def is_immersion(g: Geodesic, grid_size: int = 64, threshold: float = IMMERSION_THRESHOLD) -> ImmersionKind:
    """Classify a scaling-rotation curve as constant or an immersion.

    Raises NumericalFailure if the derivative vanishes at some grid
    points but not others, or if a derivative-free curve moves.
    """
    t0, t1 = g.interval
    ts = np.linspace(t0, t1, grid_size)
    norms = np.array([np.linalg.norm(curve_derivative(g, t)) for t in ts])
    small = norms <= threshold
    if small.all():
        X0 = ssr_eval(g, t0)
        drift = max(np.linalg.norm(ssr_eval(g, t) - X0) for t in ts)
        if drift > 1e-8 * (1 + np.linalg.norm(X0)):
            raise NumericalFailure("zero derivative on the grid but the curve moves")
        return ImmersionKind.CONSTANT
    if small.any():
        raise NumericalFailure("derivative vanishes on part of the grid only")
    return ImmersionKind.IMMERSION


def geodesically_antipodal(a: EigenPair, b: EigenPair) -> bool:
    """True iff V^{-1} U is an involution."""
    return is_involution(b.rotation.T @ a.rotation)


def minimal_logs(R) -> list:
    """Minimal-norm logarithms of a rotation.

    One for a non-involution.  For an involution, every choice of
    orientation of the pi-rotation planes of the normal form (the
    canonical choice first); this is a representative finite subset of
    a possibly continuous family.
    """
    res = so_log(R)
    if res.kind.value == "Unique":
        return [res.skew]
    nf = normal_form(R)
    p = nf.p
    pi_blocks = [i for i in range(p // 2) if nf.angles[i] > np.pi / 2]
    out = []
    for flips in itertools.product((1.0, -1.0), repeat=len(pi_blocks)):
        ang = nf.angles.copy()
        for i, f in zip(pi_blocks, flips):
            ang[i] = f * ang[i]
        A = nf.frame @ block_skew(ang, p) @ nf.frame.T
        out.append(0.5 * (A - A.T))
    return out


def connecting_geodesic(a: EigenPair, b: EigenPair) -> list:
    """Minimal geodesics from a to b on [0, 1]."""
    if a.p != b.p:
        raise DimensionError("eigen-pairs of different dimension")
    L = np.log(b.scale) - np.log(a.scale)
    R = b.rotation @ a.rotation.T
    return [Geodesic(a, A, L) for A in minimal_logs(R)]


# ------------------------------------------------------------ curve equality


def in_identity_stabilizer(R, J: SetPartition, tol: float = 1e-8) -> bool:
    """R block-diagonal for J with every diagonal block of determinant +1."""
    R = np.asarray(R)
    mask = J.block_of()
    off = mask[:, None] != mask[None, :]
    if np.max(np.abs(R[off]), initial=0.0) > tol:
        return False
    return all(np.linalg.det(R[np.ix_(b, b)]) > 0 for b in J.blocks)


def _fixing_elements(D, rtol: float = 1e-9):
    """Elements g of S~_p^+ with pi_g . D = D."""
    J = partition_of_diag(D, rtol)
    p = J.p
    per_block = [list(itertools.permutations(b)) for b in J.blocks]
    for choice in itertools.product(*per_block):
        perm = [0] * p
        for b, img in zip(J.blocks, choice):
            for i, j in zip(b, img):
                perm[i] = j
        sp = perm_sign(perm)
        for signs in itertools.product((1, -1), repeat=p):
            if int(np.prod(signs)) * sp == 1:
                yield SignedPerm(signs, tuple(perm))


def _same(A, B, tol) -> bool:
    return np.linalg.norm(np.asarray(A) - np.asarray(B)) <= tol * (1 + np.linalg.norm(A))


def curves_equal(rec1: MinimalPairRecord, geo1: Geodesic, rec2: MinimalPairRecord, geo2: Geodesic,
                 tol: float = 1e-8, rtol: float = 1e-9) -> bool:
    """Whether two minimal geodesics project to the same curve in Sym^+(p).

    Condition (i): non-antipodal pairs must share R_V P_g^{-1} R_U^{-1};
    antipodal pairs must share the rotational velocity.  Condition (ii):
    some g fixing D carries Lambda_1 to Lambda_2 with
    R_{U,1}^{-1} R_{U,2} P_g in the identity component of G_{D,Lambda_1}.

    Both conditions are evaluated on the endpoint frames: with a = U R_U
    and b = V R_V P_g^{-1}, the product in (i) is U^T (b a^T) V and the
    quotient in (ii) is a_1^T a_2, so the records need not share U, V.
    """
    a1, b1 = rec1.endpoints
    a2, b2 = rec2.endpoints
    if a1.p != a2.p or not np.allclose(a1.scale, a2.scale, rtol=rtol, atol=0):
        raise ValidationError("records start in different fibers")
    anti1 = geodesically_antipodal(a1, b1)
    anti2 = geodesically_antipodal(a2, b2)
    if anti1 != anti2:
        return False
    if anti1:
        if not _same(geo1.rot_vel, geo2.rot_vel, tol):
            return False
    elif not _same(b1.rotation @ a1.rotation.T, b2.rotation @ a2.rotation.T, tol):
        return False
    D, L1, L2 = a1.scale, b1.scale, b2.scale
    Jc = common_refinement(partition_of_diag(D, rtol), partition_of_diag(L1, rtol))
    N = a1.rotation.T @ a2.rotation
    for g in _fixing_elements(D, rtol):
        if not np.allclose(act_diag(g, L1), L2, rtol=rtol, atol=0):
            continue
        if in_identity_stabilizer(N @ matrix_of(g), Jc, tol):
            return True
    return False


def curves_differ_pointwise(g1: Geodesic, g2: Geodesic, n: int = 64, tol: float = 1e-6) -> bool:
    ts = np.linspace(0.0, 1.0, n)
    return max(np.linalg.norm(ssr_eval(g1, t) - ssr_eval(g2, t)) for t in ts) > tol


# ------------------------------------------------------------ classification


@dataclass(frozen=True)
class UniquenessReport:
    pair_count: int
    curve_count: int
    type1: bool
    type2: bool
    antipodal_pairs: int
    distance: float = 0.0

    def to_json(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "curve_count": self.curve_count,
            "type1": self.type1,
            "type2": self.type2,
            "antipodal_pairs": self.antipodal_pairs,
            "dsr": self.distance,
        }


def _equal(c1, c2) -> bool:
    rec1, geo1 = c1
    rec2, geo2 = c2
    try:
        return curves_equal(rec1, geo1, rec2, geo2)
    except ValidationError:
        return not curves_differ_pointwise(geo1, geo2)


def classify(X, Y, cfg: MetricConfig = MetricConfig(), records=None) -> UniquenessReport:
    """Count distinct minimal scaling-rotation curves from X to Y.

    The curves considered are those attached to the co-minimal double-coset
    records of d_sr; antipodal records contribute one curve per minimal
    log returned by minimal_logs.
    """
    X = check_spd(X)
    Y = check_spd(Y)
    if records is None:
        dist, records = d_sr(X, Y, cfg)
    else:
        dist = float(np.sqrt(min(r.cost2 for r in records)))
    if dist <= 1e-12:
        return UniquenessReport(len(records), 1, False, False, 0, dist)
    curves = []  # (record index, (record, geodesic))
    antipodal = 0
    for i, rec in enumerate(records):
        geos = connecting_geodesic(*rec.endpoints)
        if geodesically_antipodal(*rec.endpoints):
            antipodal += 1
        curves.extend((i, (rec, g)) for g in geos)
    classes = []  # list of lists of curve positions
    for pos, (_, c) in enumerate(curves):
        for cl in classes:
            if _equal(curves[cl[0]][1], c):
                cl.append(pos)
                break
        else:
            classes.append([pos])
    owner = {}
    for ci, cl in enumerate(classes):
        for pos in cl:
            owner[pos] = ci
    by_record: dict = {}
    for pos, (i, _) in enumerate(curves):
        by_record.setdefault(i, set()).add(owner[pos])
    type2 = any(
        len(s) >= 2 and geodesically_antipodal(*records[i].endpoints) for i, s in by_record.items()
    )
    # Type I: two different minimal pairs whose curves differ
    sets = [frozenset(by_record[i]) for i in sorted(by_record)]
    type1 = len(set(sets)) >= 2
    return UniquenessReport(len(records), len(classes), type1, type2, antipodal, dist)
