"""Dense numerics on SO(p): exponential, logarithm, normal form, distance."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOL, Tolerances
from .errors import DimensionError, ValidationError

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def as_square(M, name: str = "matrix") -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def check_skew(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    A = as_square(A, "skew matrix")
    if np.linalg.norm(A + A.T) > tol.skew:
        raise ValidationError("matrix is not skew-symmetric")
    return A


def check_rotation(R, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    R = as_square(R, "rotation")
    p = R.shape[0]
    if np.linalg.norm(R.T @ R - np.eye(p)) > tol.ortho:
        raise ValidationError("matrix is not orthogonal")
    if abs(np.linalg.det(R) - 1.0) > tol.ortho:
        raise ValidationError("orthogonal matrix has determinant -1")
    return R


def rot2(theta: float) -> np.ndarray:
    """The 2x2 rotation C(theta) = exp(theta J)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def block_rotation(angles, p: int) -> np.ndarray:
    """Block-diagonal C(a_1) + C(a_2) + ..., padded with 1 when p is odd."""
    R = np.eye(p)
    for i, a in enumerate(angles[: p // 2]):
        R[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = rot2(a)
    return R


def block_skew(angles, p: int) -> np.ndarray:
    A = np.zeros((p, p))
    for i, a in enumerate(angles[: p // 2]):
        A[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = a * J2
    return A


def so_exp(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Matrix exponential of a skew-symmetric matrix."""
    A = check_skew(A, tol)
    A = 0.5 * (A - A.T)
    return scipy.linalg.expm(A)


@dataclass(frozen=True)
class NormalForm:
    """R = frame @ block_rotation(angles) @ frame.T, angles descending in [0, pi]."""

    angles: np.ndarray
    frame: np.ndarray

    @property
    def p(self) -> int:
        return self.frame.shape[0]

    def redundant_angles(self) -> np.ndarray:
        """Each angle listed twice (plus one trailing zero when p is odd)."""
        t = np.repeat(self.angles[: self.p // 2], 2)
        if self.p % 2:
            t = np.append(t, 0.0)
        return t

    def reconstruct(self) -> np.ndarray:
        return self.frame @ block_rotation(self.angles, self.p) @ self.frame.T


def normal_form(R, tol: Tolerances = DEFAULT_TOL) -> NormalForm:
    """Normal form of a rotation from its real Schur decomposition.

    Angles come from atan2 on each 2x2 block, which stays accurate near
    0 and pi where arccos of R_sym eigenvalues loses half the digits.
    """
    R = check_rotation(R, tol)
    p = R.shape[0]
    T, Z = scipy.linalg.schur(R, output="real")
    pairs = []  # (theta, col_a, col_b)
    plus, minus = [], []
    i = 0
    while i < p:
        if i + 1 < p and abs(T[i + 1, i]) > 0.0:
            a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
            za, zb = Z[:, i].copy(), Z[:, i + 1].copy()
            s = 0.5 * (c - b)
            if s < 0:
                zb = -zb
                s = -s
            pairs.append((float(np.arctan2(s, 0.5 * (a + d))), za, zb))
            i += 2
        else:
            (minus if T[i, i] < 0 else plus).append(Z[:, i].copy())
            i += 1
    if len(minus) % 2:
        raise ValidationError("odd number of -1 eigenvalues; not a rotation")
    for j in range(0, len(minus), 2):
        pairs.append((np.pi, minus[j], minus[j + 1]))
    for j in range(0, len(plus) - 1, 2):
        pairs.append((0.0, plus[j], plus[j + 1]))
    # stable sort keeps Schur order among equal angles
    pairs.sort(key=lambda t: -t[0])
    cols = []
    for _, za, zb in pairs:
        cols.extend([za, zb])
    if p % 2:
        cols.append(plus[-1])
    angles = np.array([t[0] for t in pairs] + ([0.0] if p % 2 else []))
    frame = np.column_stack(cols) if cols else np.zeros((0, 0))
    return NormalForm(angles=angles, frame=frame)


def is_involution(R, tol: Tolerances = DEFAULT_TOL) -> bool:
    R = as_square(R)
    p = R.shape[0]
    I = np.eye(p)
    return bool(np.linalg.norm(R @ R - I) <= tol.inv and np.linalg.norm(R - I) > tol.inv)


class LogKind(enum.Enum):
    UNIQUE = "Unique"
    INVOLUTION = "Involution"


@dataclass(frozen=True)
class LogResult:
    kind: LogKind
    skew: np.ndarray
    norm: float


def so_log(R, tol: Tolerances = DEFAULT_TOL) -> LogResult:
    """Minimal-norm logarithm.

    For involutions the minimal log is not unique; the representative
    returned rotates each (-1,-1) plane of the normal form by +pi.
    """
    R = check_rotation(R, tol)
    p = R.shape[0]
    nf = normal_form(R, tol)
    A = nf.frame @ block_skew(nf.angles, p) @ nf.frame.T
    A = 0.5 * (A - A.T)
    norm = float(np.sqrt(2.0 * np.sum(nf.angles[: p // 2] ** 2)))
    kind = LogKind.INVOLUTION if is_involution(R, tol) else LogKind.UNIQUE
    return LogResult(kind=kind, skew=A, norm=norm)


def rotation_angles(R) -> np.ndarray:
    """Redundant angles of a rotation, via its complex eigenvalues, descending."""
    ev = np.linalg.eigvals(np.asarray(R, dtype=float))
    return np.sort(np.abs(np.angle(ev)))[::-1]


def d_so(U, V, tol: Tolerances = DEFAULT_TOL) -> float:
    """Bi-invariant geodesic distance: sqrt(0.5 * ||log(U^T V)||^2)."""
    U = as_square(U, "U")
    V = as_square(V, "V")
    if U.shape != V.shape:
        raise DimensionError(f"shape mismatch {U.shape} vs {V.shape}")
    th = rotation_angles(U.T @ V)
    return float(np.sqrt(0.5 * np.sum(th**2)))


def orthonormal_basis(W, name: str = "basis") -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.ndim != 2 or W.shape[1] < 1:
        raise DimensionError(f"{name} must be a p x m array with m >= 1")
    if np.linalg.matrix_rank(W) < W.shape[1]:
        raise ValidationError(f"{name} is rank-deficient")
    Q, _ = np.linalg.qr(W)
    return Q


def principal_angles(W, Z) -> np.ndarray:
    """Principal angles between span(W) and span(Z), ascending.

    Cosines are singular values of QW^T QZ; sines are singular values of
    the residual of the smaller basis after projecting onto the larger.
    Small angles take arcsin of the sine, large ones arccos of the cosine.
    """
    W = np.asarray(W, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if Z.ndim == 1:
        Z = Z[:, None]
    if W.shape[0] != Z.shape[0]:
        raise DimensionError("subspaces live in different ambient dimensions")
    QA = orthonormal_basis(W, "W")
    QB = orthonormal_basis(Z, "Z")
    if QA.shape[1] > QB.shape[1]:
        QA, QB = QB, QA
    C = QA.T @ QB
    cos = np.clip(np.linalg.svd(C, compute_uv=False), 0.0, 1.0)  # descending
    resid = QA - QB @ C.T
    sin = np.clip(np.sort(np.linalg.svd(resid, compute_uv=False)), 0.0, 1.0)  # ascending
    ang = np.where(cos**2 >= 0.5, np.arcsin(sin), np.arccos(cos))
    return np.sort(ang)


def random_rotation(p: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(p)."""
    if p == 1:
        return np.eye(1)
    from scipy.stats import special_ortho_group

    return special_ortho_group.rvs(p, random_state=rng)


def random_skew(p: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    G = rng.standard_normal((p, p)) * scale
    return G - G.T
