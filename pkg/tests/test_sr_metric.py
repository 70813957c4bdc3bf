import math

import numpy as np
import pytest

from oracles import brute_dsr, random_spd
from spdgeo import grassmann as gr
from spdgeo.errors import CapExceededError, DimensionError, PreconditionError, ValidationError
from spdgeo.partitions import EigenPair, eigen_compose, partition_of_diag
from spdgeo.rotations import random_rotation, rot2
from spdgeo.signed_perms import act, enumerate_tsp_plus, matrix_of
from spdgeo.sr_metric import (
    MetricConfig,
    d_diag,
    d_m,
    d_sr,
    decompose_snapped,
    diam_so_sq,
    gap_pair,
    inner_dist,
    minimal_antipodal_witness,
    permutation_gap,
    permutation_gap_lower_bound,
)


def test_d_sr_identity_examples():
    X = np.diag([1.0, 2.0, 3.0])
    dist, recs = d_sr(X, X)
    assert dist == pytest.approx(0.0, abs=1e-12)
    assert recs[0].cost2 == pytest.approx(0.0, abs=1e-12)
    assert d_sr(np.eye(3), np.eye(3))[0] == pytest.approx(0.0, abs=1e-12)


def test_d_sr_scalar_multiples():
    # all rotations are available on a scalar matrix, so only the scales matter
    dist, _ = d_sr(np.eye(3), math.e * np.eye(3))
    assert dist == pytest.approx(math.sqrt(3), abs=1e-10)


def test_d_sr_diagonal_swap_p2():
    X, Y = np.diag([1.0, 4.0]), np.diag([4.0, 1.0])
    for k in (0.5, 1.0, 4.0):
        dist, _ = d_sr(X, Y, MetricConfig(k=k))
        expect = min(math.sqrt(k) * math.pi / 2, math.sqrt(2) * math.log(4))
        assert dist == pytest.approx(expect, abs=1e-10)


def test_d_sr_input_errors():
    with pytest.raises(DimensionError):
        d_sr(np.eye(2), np.eye(3))
    with pytest.raises(ValidationError):
        d_sr(np.eye(2), -np.eye(2))
    with pytest.raises(ValidationError):
        MetricConfig(k=0)
    with pytest.raises(CapExceededError):
        d_sr(np.eye(9), 2 * np.eye(9))


def test_product_metric_examples():
    a = EigenPair(np.eye(2), [1.0, 1.0])
    b = EigenPair(rot2(0.5), [1.0, math.e])
    assert d_m(a, b) == pytest.approx(math.sqrt(0.25 + 1.0), abs=1e-12)
    assert d_m(a, b, MetricConfig(k=4)) == pytest.approx(math.sqrt(1.0 + 1.0), abs=1e-12)
    assert d_diag([1, 1], [math.e, 1 / math.e]) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_d_sr_matches_independent_brute_force(rng):
    for p, n in ((2, 40), (3, 25)):
        for _ in range(n):
            X, Y = random_spd(p, rng), random_spd(p, rng)
            k = float(rng.choice([0.25, 1.0, 3.0]))
            assert d_sr(X, Y, MetricConfig(k=k))[0] == pytest.approx(brute_dsr(X, Y, k), abs=1e-8)


def test_d_sr_symmetric(rng):
    for _ in range(20):
        p = int(rng.integers(2, 5))
        X, Y = random_spd(p, rng), random_spd(p, rng)
        assert d_sr(X, Y)[0] == pytest.approx(d_sr(Y, X)[0], abs=1e-8)


def test_d_sr_congruence_invariant(rng):
    for _ in range(10):
        p = int(rng.integers(2, 5))
        X, Y = random_spd(p, rng), random_spd(p, rng)
        Q = random_rotation(p, rng)
        base = d_sr(X, Y)[0]
        assert d_sr(Q @ X @ Q.T, Q @ Y @ Q.T)[0] == pytest.approx(base, abs=1e-8)


def test_product_metric_invariant_under_group_action(rng):
    gs = enumerate_tsp_plus(3)
    for _ in range(50):
        a = EigenPair(random_rotation(3, rng), np.exp(rng.standard_normal(3)))
        b = EigenPair(random_rotation(3, rng), np.exp(rng.standard_normal(3)))
        g = gs[rng.integers(len(gs))]
        assert d_m(act(g, a), act(g, b)) == pytest.approx(d_m(a, b), abs=1e-9)


def test_records_realise_the_distance(rng):
    for _ in range(10):
        X, Y = random_spd(3, rng), random_spd(3, rng)
        dist, recs = d_sr(X, Y)
        assert recs
        for r in recs:
            a, b = r.endpoints
            np.testing.assert_allclose(eigen_compose(a), X, atol=1e-9)
            np.testing.assert_allclose(eigen_compose(b), Y, atol=1e-9)
            assert d_m(a, b) ** 2 == pytest.approx(dist**2, abs=1e-7)


def _mixed(p, rng, pattern):
    d = np.concatenate([np.full(m, np.exp(rng.uniform(-1, 1))) for m in pattern])
    return eigen_compose(EigenPair(random_rotation(p, rng), d))


@pytest.mark.slow
def test_double_coset_reps_suffice(rng):
    # the double-coset minimum equals the minimum over every group element
    cfg = MetricConfig(restarts=6)
    cases = [(3, (2, 1), (1, 1, 1)), (3, (1, 1, 1), (2, 1)), (3, (2, 1), (2, 1)),
             (4, (2, 2), (1, 1, 1, 1)), (4, (3, 1), (2, 1, 1))]
    for p, pd, pl in cases:
        X, Y = _mixed(p, rng, pd), _mixed(p, rng, pl)
        a, _ = decompose_snapped(X, cfg)
        b, _ = decompose_snapped(Y, cfg)
        full = math.inf
        for g in enumerate_tsp_plus(p):
            v = inner_dist(g, a.rotation, a.scale, b.rotation, b.scale, cfg)[0]
            Pt = np.abs(matrix_of(g)).astype(float)
            full = min(full, v**2 + float(np.sum((np.log(Pt @ b.scale) - np.log(a.scale)) ** 2)))
        assert d_sr(X, Y, cfg)[0] == pytest.approx(math.sqrt(full), abs=1e-6)


def test_inner_dist_exact_on_top_stratum(rng):
    U, V = random_rotation(3, rng), random_rotation(3, rng)
    g = enumerate_tsp_plus(3)[5]
    val, Ru, Rv, conv = inner_dist(g, U, [1.0, 2, 3], V, [4.0, 5, 6])
    assert conv
    np.testing.assert_array_equal(Ru, np.eye(3))
    P = matrix_of(g).astype(float)
    from spdgeo.rotations import d_so
    assert val == pytest.approx(d_so(U, V @ P.T), abs=1e-12)


def test_snapping_groups_close_eigenvalues():
    X = np.diag([1.0, 1.0 + 1e-12, 3.0])
    pt, J = decompose_snapped(X, MetricConfig())
    assert J.sizes() == (2, 1)
    assert pt.scale[0] == pt.scale[1]


def test_triangle_inequality_violation_exploratory():
    # the scalar matrix 2I is metrically close to both endpoints
    k = 16.0
    cfg = MetricConfig(k=k)
    X = np.diag([1.0, 4.0])
    R = rot2(math.pi / 4)
    Y = R @ X @ R.T
    Z = 2.0 * np.eye(2)
    dxy = d_sr(X, Y, cfg)[0]
    dxz = d_sr(X, Z, cfg)[0]
    dzy = d_sr(Z, Y, cfg)[0]
    assert dxy == pytest.approx(math.sqrt(k) * math.pi / 4, abs=1e-9)
    assert dxz == pytest.approx(math.sqrt(2) * math.log(2), abs=1e-9)
    assert dxy > dxz + dzy + 1.0


def test_gap_pair_examples():
    for p in (2, 3, 4, 5, 6):
        for c in (0.1, 1.0, 7.5, 100.0):
            D, L = gap_pair(p, c)
            assert partition_of_diag(D).is_top()
            assert d_diag(D, L) ** 2 == pytest.approx(c / 3, rel=1e-12)
            gap = permutation_gap(D, L)
            assert gap > c
            assert permutation_gap_lower_bound(D, L) > c + c / 3
    with pytest.raises(ValidationError):
        gap_pair(3, 0.0)


def test_gap_lower_bound_is_a_lower_bound(rng):
    import itertools
    for _ in range(20):
        p = int(rng.integers(2, 6))
        D, L = np.exp(rng.standard_normal(p)), np.exp(rng.standard_normal(p))
        lb = permutation_gap_lower_bound(D, L)
        for pi in itertools.permutations(range(p)):
            if pi == tuple(range(p)):
                continue
            moved = np.empty(p)
            moved[list(pi)] = L
            assert np.sum((np.log(moved) - np.log(D)) ** 2) >= lb - 1e-12


def test_diam_so():
    assert diam_so_sq(2) == pytest.approx(math.pi**2)
    assert diam_so_sq(5) == pytest.approx(2 * math.pi**2)


def test_witness_rejects_reducible_pair():
    with pytest.raises(PreconditionError):
        minimal_antipodal_witness(np.diag([-1.0, -1.0, 1.0]), np.eye(3))
    with pytest.raises(PreconditionError):
        minimal_antipodal_witness(-np.eye(2), np.eye(2))


def test_witness_p11():
    U = gr.phi(gr.example_plane_wp_prime(11))
    rep = minimal_antipodal_witness(U, np.eye(11))
    assert rep.verified
    assert rep.gap_bound > rep.identity_bound
    assert abs(rep.restricted_min2 - rep.claimed2) <= 1e-6
    a, b = rep.record.endpoints
    assert partition_of_diag(a.scale).is_top() and partition_of_diag(b.scale).is_top()


def test_witness_on_non_involution_pair(rng):
    # a generic rotation pair is never sign-change reducible once all angles are small
    from spdgeo.rotations import block_rotation
    Q = random_rotation(4, rng)
    U = Q @ block_rotation([0.3, 0.1], 4) @ Q.T
    try:
        rep = minimal_antipodal_witness(U, np.eye(4))
    except PreconditionError:
        pytest.skip("pair happened to be reducible")
    assert rep.verified
