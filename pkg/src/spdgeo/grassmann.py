"""Involutions of SO(p), sign-change reducibility, and coordinate planes in Gr_m(R^p)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOL, Tolerances
from .errors import DimensionError, NumericalFailure, PreconditionError, ValidationError
from .rotations import as_square, check_rotation, d_so, normal_form, principal_angles

EIG_TOL = 1e-8


@dataclass(frozen=True)
class Plane:
    """An m-dimensional subspace of R^p with an orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if np.linalg.norm(B.T @ B - np.eye(B.shape[1])) > 1e-10:
            if np.linalg.matrix_rank(B) < B.shape[1]:
                raise ValidationError("plane basis is rank-deficient")
            B, _ = np.linalg.qr(B)
        B = B.copy()
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def p(self) -> int:
        return self.basis.shape[0]

    @property
    def m(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def coordinate(cls, J, p: int) -> "Plane":
        return cls(np.eye(p)[:, list(J)])


def random_plane(p: int, m: int, rng) -> Plane:
    return Plane(np.linalg.qr(rng.standard_normal((p, m)))[0])


def _basis(W) -> np.ndarray:
    return W.basis if isinstance(W, Plane) else Plane(W).basis


def phi(W) -> np.ndarray:
    """Reflection I - 2 P_W; an involution whose -1 eigenspace is W."""
    B = _basis(W)
    m = B.shape[1]
    if m % 2 or m == 0:
        raise ValidationError("plane dimension must be even and positive")
    R = np.eye(B.shape[0]) - 2.0 * B @ B.T
    return 0.5 * (R + R.T)


def _check_involution_spectrum(w: np.ndarray, eps: float) -> None:
    bad = np.minimum(np.abs(w - 1.0), np.abs(w + 1.0)) > eps
    if np.any(bad):
        raise ValidationError("eigenvalues not clustered at +-1; not an involution")


def minus_eigenspace(R, eps: float = EIG_TOL) -> Plane:
    R = as_square(R)
    w, Q = np.linalg.eigh(0.5 * (R + R.T))
    _check_involution_spectrum(w, eps)
    return Plane(Q[:, w < 0])


def level(R, eps: float = EIG_TOL) -> int:
    """Dimension of the -1 eigenspace of an involution."""
    w = np.linalg.eigvalsh(0.5 * (as_square(R) + as_square(R).T))
    _check_involution_spectrum(w, eps)
    return int(np.sum(w < 0))


def sign_level(sigma) -> int:
    return int(np.sum(np.asarray(sigma) < 0))


class Involution:
    """A non-identity involution in SO(p) with its level."""

    __slots__ = ("matrix", "level")

    def __init__(self, R, tol: Tolerances = DEFAULT_TOL):
        R = check_rotation(R, tol)
        p = R.shape[0]
        if np.linalg.norm(R @ R - np.eye(p)) > tol.inv or np.linalg.norm(R - np.eye(p)) <= tol.inv:
            raise ValidationError("matrix is not a non-identity involution")
        M = 0.5 * (R + R.T)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "level", level(M))

    def __setattr__(self, name, value):
        raise AttributeError("Involution is immutable")

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


def _as_inv_matrix(R) -> np.ndarray:
    return R.matrix if isinstance(R, Involution) else Involution(R).matrix


def random_involution(p: int, rng, level_: int | None = None) -> np.ndarray:
    if level_ is None:
        level_ = 2 * int(rng.integers(1, p // 2 + 1))
    return phi(random_plane(p, level_, rng))


def d_gr(W, Z) -> float:
    """Grassmann distance: root-sum-square of the principal angles."""
    A, B = _basis(W), _basis(Z)
    if A.shape != B.shape:
        raise DimensionError("planes must share ambient dimension and dimension")
    return float(np.sqrt(np.sum(principal_angles(A, B) ** 2)))


# ------------------------------------------------------------ half angles


@dataclass(frozen=True)
class HalfAngleReport:
    phis: np.ndarray
    thetas: np.ndarray
    matching: tuple  # matching[j] = index into thetas for phis[j]
    partners: tuple  # (leftover index, matched index) pairs for interior angles
    max_error: float
    passed: bool


def half_angle_check(R1, R2, tol: float = 1e-8, match_tol: float = 1e-7) -> HalfAngleReport:
    """Match principal angles of the -1 eigenspaces with half the normal-form angles of R1 R2.

    Each principal angle phi_j is paired with a redundant angle equal to
    2 phi_j.  Among the unmatched redundant angles, those strictly inside
    (0, pi) must be exactly the second copies of matched interior angles;
    all others must be 0 or pi.
    """
    A, B = _as_inv_matrix(R1), _as_inv_matrix(R2)
    if A.shape != B.shape:
        raise DimensionError("involutions of different size")
    phis = principal_angles(minus_eigenspace(A).basis, minus_eigenspace(B).basis)
    thetas = normal_form(A @ B).redundant_angles()
    used = np.zeros(thetas.shape[0], dtype=bool)
    matching = []
    err = 0.0
    for ph in phis:
        cand = np.where(~used, np.abs(thetas - 2 * ph), np.inf)
        i = int(np.argmin(cand))
        if not cand[i] <= match_tol:
            raise NumericalFailure(f"no normal-form angle matches 2*{ph!r}")
        used[i] = True
        matching.append(i)
        err = max(err, abs(thetas[i] / 2 - ph))

    def edge(t):
        return min(abs(t), abs(t - math.pi))

    interior = [i for i in matching if edge(thetas[i]) > match_tol]
    free = list(interior)
    partners = []
    for i in np.flatnonzero(~used):
        t = thetas[i]
        if edge(t) <= match_tol:
            err = max(err, edge(t))
            continue
        if not free:
            raise NumericalFailure(f"unmatched interior angle {t!r}")
        k = min(free, key=lambda j: abs(thetas[j] - t))
        if abs(thetas[k] - t) > match_tol:
            raise NumericalFailure(f"interior angle {t!r} has no matched partner")
        free.remove(k)
        partners.append((int(i), int(k)))
        err = max(err, abs(thetas[k] - t) / 2)
    if free:
        raise NumericalFailure("matched interior angles without a second copy")
    passed = err <= tol
    if not passed:
        raise NumericalFailure(f"half-angle relation violated by {err!r}")
    return HalfAngleReport(phis, thetas, tuple(matching), tuple(partners), err, passed)


# ------------------------------------------------------------ block analysis


@dataclass(frozen=True)
class BlockAnalysis:
    sigma: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R4: np.ndarray
    l_plus: int
    l_minus: int
    J_star: tuple  # positions in J (sorted) carrying an angle strictly inside (0, pi)
    theta_J: np.ndarray  # normal-form angles attached to J, aligned with sorted J
    theta_Jc: np.ndarray

    @property
    def dist2(self) -> float:
        """Squared distance from R I_sigma to I via the block formula."""
        star = float(np.sum(self.theta_J[list(self.J_star)] ** 2))
        return 0.5 * (self.l_plus + self.l_minus) * math.pi**2 + star


def _block_angles(R: np.ndarray, neg: np.ndarray):
    """Normal-form angles of R I_sigma split by the sign pattern.

    R I_sigma has symmetric part R1 (+) -R4; each eigenvector's angle is
    recovered by atan2 of the off-diagonal coupling norm against the
    eigenvalue, which is accurate near 0 and pi.
    """
    Jc = np.flatnonzero(~neg)
    J = np.flatnonzero(neg)
    R1 = R[np.ix_(Jc, Jc)]
    R2 = R[np.ix_(Jc, J)]
    R4 = R[np.ix_(J, J)]
    if Jc.size:
        w1, v1 = np.linalg.eigh(R1)
        s1 = np.linalg.norm(R2.T @ v1, axis=0) if J.size else np.zeros_like(w1)
        th1 = np.arctan2(s1, w1)
    else:
        w1 = th1 = np.zeros(0)
    if J.size:
        w4, v4 = np.linalg.eigh(R4)
        s4 = np.linalg.norm(R2 @ v4, axis=0) if Jc.size else np.zeros_like(w4)
        th4 = np.arctan2(s4, -w4)
    else:
        w4 = th4 = np.zeros(0)
    return R1, R2, R4, w1, th1, w4, th4


def block_analysis(R, sigma, eig_tol: float = 1e-10) -> BlockAnalysis:
    """Decompose R around the sign pattern sigma (J = indices with sigma = -1)."""
    R = _as_inv_matrix(R)
    sigma = np.asarray(sigma)
    neg = sigma < 0
    m = int(neg.sum())
    if m == 0 or m == R.shape[0]:
        raise PreconditionError("sign change must have level strictly between 0 and p")
    R1, R2, R4, w1, th1, w4, th4 = _block_angles(R, neg)
    l_plus = int(np.sum(np.abs(w1 + 1) <= eig_tol))
    l_minus = int(np.sum(np.abs(w4 - 1) <= eig_tol))
    inside = (np.abs(w4 - 1) > eig_tol) & (np.abs(w4 + 1) > eig_tol)
    J_star = tuple(int(i) for i in np.flatnonzero(inside))
    return BlockAnalysis(sigma.copy(), R1, R2, R4, l_plus, l_minus, J_star, th4, th1)


def sign_change_dist2(R, sigma) -> float:
    """d_so(R I_sigma, I)^2 for an involution R, via the block split."""
    neg = np.asarray(sigma) < 0
    *_, th1, _, th4 = _block_angles(R, neg)
    return 0.5 * float(np.sum(th1**2) + np.sum(th4**2))


# ------------------------------------------------------------ sign-change search


MAX_SEARCH_P = 24


@dataclass(frozen=True)
class SignChangeResult:
    sigma: np.ndarray
    d_before: float
    d_after: float
    level: int

    def to_json(self) -> dict:
        return {
            "reducible": True,
            "sigma": [int(s) for s in self.sigma],
            "d_before": self.d_before,
            "d_after": self.d_after,
            "level": self.level,
        }


def even_sign_vectors(p: int, levels=None):
    """Sign vectors with an even number of -1 entries, in bitmask order (identity excluded)."""
    for mask in range(1, 1 << p):
        c = mask.bit_count() if hasattr(int, "bit_count") else bin(mask).count("1")
        if c % 2 or (levels is not None and c not in levels):
            continue
        yield np.array([-1 if (mask >> i) & 1 else 1 for i in range(p)])


def sign_change_search(R, tie_tol: float = 1e-9, levels=None, involution: bool | None = None):
    """Best even sign change sigma minimizing d_so(R I_sigma, I).

    Returns a SignChangeResult when the best value is strictly below
    d_so(R, I) - tie_tol, else None.  Involutions use the block formula;
    other rotations fall back to a direct distance evaluation.
    """
    R = check_rotation(R)
    p = R.shape[0]
    if p > MAX_SEARCH_P:
        raise PreconditionError(f"sign-change search limited to p <= {MAX_SEARCH_P}")
    I = np.eye(p)
    if involution is None:
        involution = bool(np.linalg.norm(R @ R - I) <= DEFAULT_TOL.inv and np.linalg.norm(R - I) > DEFAULT_TOL.inv)
    if involution:
        R = 0.5 * (R + R.T)
        f = lambda s: sign_change_dist2(R, s)
    else:
        f = lambda s: d_so(R * s, I) ** 2
    d0 = d_so(R, I)
    best, best_s = math.inf, None
    for s in even_sign_vectors(p, levels):
        v = f(s)
        if v < best - 1e-12:
            best, best_s = v, s
    if best_s is None:
        return None
    d1 = math.sqrt(max(best, 0.0))
    if d1 < d0 - tie_tol:
        return SignChangeResult(best_s, d0, d1, sign_level(best_s))
    return None


def sign_change_reduce(R, tie_tol: float = 1e-9, levels=None):
    """Exhaustive reducibility test for an involution."""
    inv = R if isinstance(R, Involution) else Involution(R)
    res = sign_change_search(inv.matrix, tie_tol=tie_tol, levels=levels, involution=True)
    if res is not None and not res.level < 2 * inv.level:
        raise NumericalFailure(f"reducer of level {res.level} for involution of level {inv.level}")
    return res


def all_reducers(R, tie_tol: float = 1e-9):
    """Every even sign change that strictly reduces the distance to I."""
    R = _as_inv_matrix(R)
    d0 = d_so(R, np.eye(R.shape[0]))
    out = []
    for s in even_sign_vectors(R.shape[0]):
        v = math.sqrt(max(sign_change_dist2(R, s), 0.0))
        if v < d0 - tie_tol:
            out.append((s, v))
    return out


# ------------------------------------------------------------ coordinate planes


def coordinate_frame_sum(m: int, p: int) -> np.ndarray:
    """Sum over all m-subsets J of E_J E_J^T, as an exact integer matrix."""
    if not 1 <= m <= p:
        raise ValidationError("need 1 <= m <= p")
    I = np.eye(p, dtype=np.int64)
    S = np.zeros((p, p), dtype=np.int64)
    for J in itertools.combinations(range(p), m):
        E = I[:, J]
        S += E @ E.T
    return S


@dataclass(frozen=True)
class NearestPlane:
    J: tuple
    distance: float
    min_sin2: float
    sin2_values: np.ndarray  # sum of squared sines for every J, in combination order

    def to_json(self) -> dict:
        return {"J": [j + 1 for j in self.J], "d": self.distance, "min_sin2": self.min_sin2}


MAX_COMBINATIONS = 10**6


def _coordinate_angles(B: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """Principal angles between span(B) and each coordinate plane, shape (n, m)."""
    p, m = B.shape
    mask = np.zeros((combos.shape[0], p), dtype=bool)
    np.put_along_axis(mask, combos, True, axis=1)
    inJ = B[combos]  # (n, m, m)
    cos = np.linalg.svd(inJ, compute_uv=False)  # descending
    comp = np.argsort(mask, axis=1, kind="stable")[:, : p - m]
    outJ = B[comp]  # (n, p-m, m)
    if p - m:
        sin = np.sort(np.linalg.svd(outJ, compute_uv=False), axis=1)  # ascending
    else:
        sin = np.zeros((combos.shape[0], 0))
    k = sin.shape[1]
    s_full = np.zeros_like(cos)
    s_full[:, m - k :] = sin
    return np.arctan2(s_full, cos)


def nearest_coordinate_plane(W, tie_tol: float = 1e-9, batch: int = 20000) -> NearestPlane:
    """Closest coordinate m-plane R^J to W, ties broken by lexicographic J."""
    B = _basis(W)
    p, m = B.shape
    if math.comb(p, m) > MAX_COMBINATIONS:
        raise PreconditionError(f"C({p},{m}) coordinate planes exceeds {MAX_COMBINATIONS}")
    combos_all = itertools.combinations(range(p), m)
    best_d2, best_J = math.inf, None
    sin2 = []
    while True:
        chunk = list(itertools.islice(combos_all, batch))
        if not chunk:
            break
        C = np.array(chunk, dtype=np.intp)
        ang = _coordinate_angles(B, C)
        d2 = np.sum(ang**2, axis=1)
        sin2.append(m - np.sum(B[C] ** 2, axis=(1, 2)))
        for i in range(d2.shape[0]):
            if d2[i] < best_d2 - tie_tol:
                best_d2, best_J = float(d2[i]), tuple(int(j) for j in C[i])
    s2 = np.concatenate(sin2)
    min_sin2 = float(s2.min())
    bound = m * (1 - m / p)
    if min_sin2 > bound + 1e-10:
        raise NumericalFailure(f"covering bound violated: {min_sin2!r} > {bound!r}")
    return NearestPlane(best_J, math.sqrt(best_d2), min_sin2, s2)


# ------------------------------------------------------------ example planes


def example_plane_wp(p: int) -> Plane:
    """Span of the normalized indicator vectors of {1..k} and {k+1..2k}, k = p // 2."""
    if p < 4:
        raise ValidationError("needs p >= 4")
    k = p // 2
    v = np.zeros(p)
    w = np.zeros(p)
    v[:k] = 1 / math.sqrt(k)
    w[k : 2 * k] = 1 / math.sqrt(k)
    return Plane(np.column_stack([v, w]))


def example_plane_wp_prime(p: int) -> Plane:
    """Span of the normalized all-ones vector and the +-1 indicator of the first 2k entries."""
    if p % 2 == 0 or p < 5:
        raise ValidationError("needs odd p >= 5")
    k = (p - 1) // 2
    v = np.ones(p) / math.sqrt(p)
    w = np.zeros(p)
    w[:k] = 1
    w[k : 2 * k] = -1
    w /= math.sqrt(p - 1)
    return Plane(np.column_stack([v, w]))


def wp_min_dist2_closed(p: int) -> float:
    q = p if p % 2 == 0 else p - 1
    line1 = (math.pi / 2) ** 2 + math.acos(math.sqrt(4 / q)) ** 2
    line2 = 2 * math.acos(math.sqrt(2 / q)) ** 2
    return min(line1, line2)


def wp_cos(p: int) -> float:
    return math.sqrt(2 / p) if p % 2 == 0 else math.sqrt(2 / (p - 1))


def wp_prime_lambdas(p: int) -> tuple:
    a = 1 / p + 1 / (2 * (p - 1))
    b = math.sqrt(1 / p**2 + 1 / (4 * (p - 1) ** 2))
    return a + b, a - b


def wp_prime_lines(p: int) -> tuple:
    lp, lm = wp_prime_lambdas(p)
    return (
        (math.pi / 2) ** 2 + math.acos(math.sqrt(2 / p + 2 / (p - 1))) ** 2,
        math.acos(math.sqrt(2 / p)) ** 2 + math.acos(math.sqrt(2 / (p - 1))) ** 2,
        math.acos(math.sqrt(lp)) ** 2 + math.acos(math.sqrt(lm)) ** 2,
    )


def wp_prime_min_dist2_closed(p: int) -> float:
    return min(wp_prime_lines(p))


# ------------------------------------------------------------ scalar identities


def compar1_margin(x) -> np.ndarray:
    """(pi/2)^2 + arccos(x)^2 - 2 arccos(x/sqrt 2)^2, positive on (0, 1]."""
    x = np.asarray(x, dtype=float)
    return (np.pi / 2) ** 2 + np.arccos(x) ** 2 - 2 * np.arccos(x / np.sqrt(2)) ** 2


def _span_dim(*bases) -> int:
    M = np.column_stack([b for b in bases if b.size])
    return int(np.linalg.matrix_rank(M)) if M.size else 0


def intersection_dim(A: np.ndarray, B: np.ndarray) -> int:
    da = A.shape[1] if A.size else 0
    db = B.shape[1] if B.size else 0
    return da + db - _span_dim(A, B)


def orthogonal_complement(A: np.ndarray) -> np.ndarray:
    return scipy.linalg.null_space(A.T)


def genlinalg2_sides(V: np.ndarray, W: np.ndarray) -> tuple:
    """(dim(V^perp cap W) - dim(V cap W^perp), dim W - dim V)."""
    Vp, Wp = orthogonal_complement(V), orthogonal_complement(W)
    lhs = intersection_dim(Vp, W) - intersection_dim(V, Wp)
    return lhs, W.shape[1] - V.shape[1]


# ------------------------------------------------------------ exploratory search


def search_level2(p: int, samples: int, rng) -> dict:
    """Largest nearest-coordinate-plane distance seen over random 2-planes.

    Exploratory only: a value at or above pi/2 marks a level-2 involution
    that no level-2 sign change reduces.
    """
    worst = 0.0
    for _ in range(samples):
        worst = max(worst, nearest_coordinate_plane(random_plane(p, 2, rng)).distance)
    return {"p": p, "samples": samples, "max_nearest_d2_over_pi2_4": worst**2 / (math.pi**2 / 4)}
