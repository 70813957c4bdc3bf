import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import rot_angles_arccos, rot_dist_logm
from spdgeo.errors import DimensionError, ValidationError
from spdgeo.rotations import (
    J2,
    LogKind,
    block_rotation,
    block_skew,
    d_so,
    is_involution,
    normal_form,
    principal_angles,
    random_rotation,
    rot2,
    so_exp,
    so_log,
)


def test_so_exp_examples():
    np.testing.assert_allclose(so_exp(np.zeros((3, 3))), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(so_exp(math.pi * J2), -np.eye(2), atol=1e-12)
    np.testing.assert_allclose(so_exp(0.5 * math.pi * J2), [[0, -1], [1, 0]], atol=1e-12)


def test_so_exp_rejects_bad_input():
    with pytest.raises(ValidationError):
        so_exp(np.eye(2))
    with pytest.raises(DimensionError):
        so_exp(np.zeros((2, 3)))


def test_so_log_examples():
    r = so_log(np.eye(4))
    assert r.kind is LogKind.UNIQUE and r.norm == 0.0
    r = so_log(-np.eye(2))
    assert r.kind is LogKind.INVOLUTION
    assert r.norm == pytest.approx(math.sqrt(2) * math.pi, abs=1e-12)
    np.testing.assert_allclose(so_exp(r.skew), -np.eye(2), atol=1e-12)
    r = so_log(rot2(math.pi / 3))
    assert r.kind is LogKind.UNIQUE
    np.testing.assert_allclose(r.skew, (math.pi / 3) * J2, atol=1e-12)
    assert r.norm == pytest.approx(math.sqrt(2) * math.pi / 3, abs=1e-12)


def test_so_log_rejects_reflection():
    with pytest.raises(ValidationError):
        so_log(np.diag([1.0, -1.0]))


def test_normal_form_examples():
    np.testing.assert_allclose(normal_form(np.eye(5)).angles, [0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(normal_form(np.diag([-1.0, -1, 1, 1])).angles, [math.pi, 0], atol=1e-15)
    R = block_rotation([0.7, 0.2], 4)
    np.testing.assert_allclose(normal_form(R).angles, [0.7, 0.2], atol=1e-12)


def test_normal_form_random(rng):
    for p in range(1, 10):
        for _ in range(50):
            R = random_rotation(p, rng)
            nf = normal_form(R)
            assert np.all(np.diff(nf.angles[: p // 2]) <= 0)
            assert np.all((nf.angles >= 0) & (nf.angles <= math.pi))
            assert np.linalg.norm(nf.reconstruct() - R) <= 1e-8
            np.testing.assert_allclose(nf.redundant_angles(), rot_angles_arccos(R), atol=1e-6)


def test_normal_form_small_and_near_pi_angles():
    R = block_rotation([math.pi - 1e-9, 1e-9], 4)
    nf = normal_form(R)
    np.testing.assert_allclose(nf.angles, [math.pi - 1e-9, 1e-9], rtol=0, atol=1e-14)


def test_d_so_examples(rng):
    assert d_so(np.eye(3), np.eye(3)) == 0.0
    for th in np.linspace(0, math.pi, 7):
        assert d_so(np.eye(2), rot2(th)) == pytest.approx(th, abs=1e-12)
    R = np.diag([-1.0, -1, -1, -1, 1])
    assert d_so(np.eye(5), R) == pytest.approx(math.sqrt(4 / 2) * math.pi, abs=1e-12)


def test_d_so_against_logm(rng):
    for _ in range(50):
        p = int(rng.integers(2, 7))
        U, V = random_rotation(p, rng), random_rotation(p, rng)
        assert d_so(U, V) == pytest.approx(rot_dist_logm(U, V), abs=1e-8)


def test_d_so_dimension_mismatch():
    with pytest.raises(DimensionError):
        d_so(np.eye(2), np.eye(3))


def test_log_round_trip(rng):
    for _ in range(1000):
        p = int(rng.integers(2, 9))
        Q = random_rotation(p, rng)
        th = rng.uniform(0, math.pi - 0.05, p // 2)
        A = Q @ block_skew(th, p) @ Q.T
        np.testing.assert_allclose(so_log(so_exp(A)).skew, A, atol=1e-8)


def test_bi_invariance(rng):
    for _ in range(100):
        p = int(rng.integers(2, 8))
        U, V, W = (random_rotation(p, rng) for _ in range(3))
        d = d_so(U, V)
        assert d_so(W @ U, W @ V) == pytest.approx(d, abs=1e-9)
        assert d_so(U @ W, V @ W) == pytest.approx(d, abs=1e-9)
        assert d_so(V, U) == pytest.approx(d, abs=1e-9)


def test_normal_form_distance_identity(rng):
    for _ in range(200):
        p = int(rng.integers(2, 12))
        R = random_rotation(p, rng)
        assert d_so(R, np.eye(p)) ** 2 == pytest.approx(np.sum(normal_form(R).angles ** 2), abs=1e-9)


def test_so_log_norm_factor(rng):
    for _ in range(50):
        p = int(rng.integers(2, 8))
        R = random_rotation(p, rng)
        r = so_log(R)
        assert r.norm**2 == pytest.approx(2 * np.sum(normal_form(R).angles ** 2), abs=1e-9)
        assert np.linalg.norm(r.skew) == pytest.approx(r.norm, abs=1e-9)
        np.testing.assert_allclose(so_exp(r.skew), R, atol=1e-8)


def test_involution_flag():
    assert is_involution(np.diag([-1.0, -1, 1]))
    assert not is_involution(np.eye(3))
    assert not is_involution(rot2(0.4))
    assert so_log(np.diag([-1.0, -1, 1])).kind is LogKind.INVOLUTION


def test_principal_angles_examples():
    E = np.eye(4)
    np.testing.assert_allclose(principal_angles(E[:, :2], E[:, :2]), [0, 0], atol=1e-15)
    np.testing.assert_allclose(principal_angles(E[:, :2], E[:, 2:]), [math.pi / 2] * 2, atol=1e-15)


def test_principal_angles_rank_deficient():
    with pytest.raises(ValidationError):
        principal_angles(np.array([[1.0, 2.0], [2.0, 4.0], [0, 0]]), np.eye(3)[:, :1])


def test_principal_angles_tiny_angle_accuracy():
    # the smaller subspace sits inside the larger one up to a rotation by 1e-12
    eps = 1e-12
    W = np.array([[math.cos(eps)], [math.sin(eps)], [0.0], [0.0]])
    Z = np.eye(4)[:, [0, 2, 3]]
    np.testing.assert_allclose(principal_angles(W, Z), [eps], rtol=1e-6)
    np.testing.assert_allclose(principal_angles(Z, W), [eps], rtol=1e-6)


def test_principal_angles_basis_invariance(rng):
    for _ in range(100):
        p = int(rng.integers(3, 10))
        m1, m2 = (int(rng.integers(1, p)) for _ in range(2))
        W = rng.standard_normal((p, m1))
        Z = rng.standard_normal((p, m2))
        ref = principal_angles(W, Z)
        G = random_rotation(m1, rng) if m1 > 1 else np.eye(1)
        assert ref.shape == (min(m1, m2),)
        np.testing.assert_allclose(principal_angles(np.linalg.qr(W)[0] @ G, Z), ref, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, math.pi, allow_nan=False), min_size=1, max_size=4))
def test_block_rotation_angles_recovered(angles):
    p = 2 * len(angles)
    nf = normal_form(block_rotation(angles, p))
    np.testing.assert_allclose(nf.angles, sorted(angles, reverse=True), atol=1e-9)
