"""Reproduction checks for the numeric claims of the geometry, one per criterion."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import curves, grassmann as gr
from .partitions import EigenPair, eigen_compose, eigen_decompose, enumerate_fiber_top
from .rotations import d_so, random_rotation, random_skew
from .sr_metric import (
    MetricConfig,
    d_diag,
    d_sr,
    gap_pair,
    minimal_antipodal_witness,
    permutation_gap,
)


@dataclass(frozen=True)
class CheckResult:
    id: str
    name: str
    expected: str
    computed: object
    tolerance: float
    passed: bool
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "expected": self.expected,
            "computed": self.computed,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


def _f(x) -> float:
    return float(x)


# ------------------------------------------------------------ checks


def check_a01(rng):
    worst = 0.0
    for p in range(2, 13):
        for _ in range(200):
            R = gr.random_involution(p, rng)
            m = gr.level(R)
            worst = max(worst, abs(d_so(R, np.eye(p)) ** 2 - 0.5 * m * math.pi**2))
    return "d_so(R,I)^2 = level/2 * pi^2", _f(worst), 1e-8, worst <= 1e-8


def check_a02(rng):
    worst = 0.0
    mixed = 0
    for _ in range(500):
        p = int(rng.integers(2, 13))
        R1 = gr.random_involution(p, rng)
        R2 = gr.random_involution(p, rng)
        mixed += gr.level(R1) != gr.level(R2)
        worst = max(worst, gr.half_angle_check(R1, R2).max_error)
    return "principal angles = half normal-form angles", {"max_error": _f(worst), "unequal_levels": int(mixed)}, 1e-8, worst <= 1e-8


def check_a03(rng):
    worst = 0.0
    for _ in range(500):
        p = int(rng.integers(2, 13))
        m = 2 * int(rng.integers(1, p // 2 + 1))
        W, Z = gr.random_plane(p, m, rng), gr.random_plane(p, m, rng)
        worst = max(worst, abs(d_so(gr.phi(W), gr.phi(Z)) - 2 * gr.d_gr(W, Z)))
    return "d_so(phi W, phi Z) = 2 d_gr(W, Z)", _f(worst), 1e-8, worst <= 1e-8


def check_a04(rng):
    bad = []
    for p in range(1, 13):
        for m in range(1, p + 1):
            S = gr.coordinate_frame_sum(m, p)
            if not np.array_equal(S, math.comb(p - 1, m - 1) * np.eye(p, dtype=np.int64)):
                bad.append([m, p])
    return "sum_J E_J E_J^T = C(p-1,m-1) I exactly", {"failures": bad}, 0.0, not bad


def check_a05(rng):
    worst = -math.inf
    nonstrict = 0
    for _ in range(500):
        m = int(rng.choice([2, 4]))
        p = int(rng.integers(m + 1, 13))
        res = gr.nearest_coordinate_plane(gr.random_plane(p, m, rng))
        bound = m * (1 - m / p)
        worst = max(worst, res.min_sin2 - bound)
        s2 = res.sin2_values
        strict = res.min_sin2 < bound - 1e-12 or (s2.max() - s2.min()) <= 1e-10
        nonstrict += not strict
    ok = worst <= 1e-10 and nonstrict == 0
    return "min_J sum sin^2 <= m(1-m/p)", {"max_excess": _f(worst), "non_strict": nonstrict}, 1e-10, ok


def check_a06(rng):
    worst = 0.0
    far_ok = True
    rows = []
    for p in range(4, 17):
        res = gr.nearest_coordinate_plane(gr.example_plane_wp(p))
        closed = math.sqrt(gr.wp_min_dist2_closed(p))
        alt = math.sqrt(2) * math.acos(gr.wp_cos(p))
        worst = max(worst, abs(res.distance - closed), abs(res.distance - alt))
        beyond = res.distance >= math.pi / 2
        predicted = 2 * (p // 2) >= 2 / math.cos(math.pi / (2 * math.sqrt(2))) ** 2
        if p >= 12:
            far_ok &= beyond
        far_ok &= beyond == predicted
        rows.append([p, _f(res.distance)])
    ok = worst <= 1e-9 and far_ok
    return "closed-form nearest distance; >= pi/2 for p >= 12", {"max_error": _f(worst), "distances": rows}, 1e-9, ok


def check_a07(rng):
    q = math.pi**2 / 4
    ratio11 = gr.nearest_coordinate_plane(gr.example_plane_wp_prime(11)).distance ** 2 / q
    small = {p: gr.nearest_coordinate_plane(gr.example_plane_wp_prime(p)).distance ** 2 / q for p in (5, 7, 9)}
    closed = {p: gr.wp_prime_min_dist2_closed(p) / q for p in (5, 7, 9, 11)}
    agree = max(abs(closed[11] - ratio11), *(abs(closed[p] - small[p]) for p in small))
    ok = abs(ratio11 - 1.0146) <= 5e-4 and all(v < 1 for v in small.values()) and agree <= 1e-9
    computed = {"ratio_11": _f(ratio11), "ratios_5_7_9": [_f(small[p]) for p in (5, 7, 9)], "closed_form_gap": _f(agree)}
    return "ratio 1.0146 at p=11; < 1 at p=5,7,9", computed, 5e-4, ok


def check_a08(rng):
    failures = {"not_reducible": 0, "no_same_level": 0, "level_bound": 0}
    for p in (2, 3, 4):
        for _ in range(200):
            R = gr.random_involution(p, rng)
            m = gr.level(R)
            res = gr.sign_change_search(R, involution=True)
            if res is None:
                failures["not_reducible"] += 1
            if m >= p / 2 and gr.sign_change_search(R, levels={m}, involution=True) is None:
                failures["no_same_level"] += 1
            for s, _ in gr.all_reducers(R):
                if not gr.sign_level(s) < 2 * m:
                    failures["level_bound"] += 1
    return "every involution reducible for p <= 4", failures, 1e-9, not any(failures.values())


def check_a09(rng):
    R = gr.phi(gr.example_plane_wp_prime(11))
    res = gr.sign_change_reduce(R)
    l2 = gr.sign_change_search(R, levels={2}, involution=True, tie_tol=-math.inf)
    computed = {"reducible": res is not None, "d_before2_over_pi2": _f(d_so(R, np.eye(11)) ** 2 / math.pi**2),
                "best_level2_d2_over_pi2": _f(l2.d_after**2 / math.pi**2) if l2 else None}
    return "no even sign change reduces phi(W'_11)", computed, 1e-9, res is None


def _brute_pair_min(X, Y, k):
    a, b = eigen_decompose(X), eigen_decompose(Y)
    A = enumerate_fiber_top(a)
    B = enumerate_fiber_top(b)
    best = math.inf
    for x in A:
        for y in B:
            best = min(best, k * d_so(x.rotation, y.rotation) ** 2 + d_diag(x.scale, y.scale) ** 2)
    return math.sqrt(best)


def _random_top_spd(p, rng):
    while True:
        d = np.exp(rng.uniform(-1.5, 1.5, p))
        if np.min(np.diff(np.sort(d))) > 1e-3:
            return eigen_compose(EigenPair(random_rotation(p, rng), d))


def check_a10(rng):
    worst = 0.0
    cfg = MetricConfig(k=1.0)
    for p in (2, 3):
        for _ in range(100):
            X, Y = _random_top_spd(p, rng), _random_top_spd(p, rng)
            worst = max(worst, abs(d_sr(X, Y, cfg)[0] - _brute_pair_min(X, Y, cfg.k)))
    return "d_sr = exhaustive fiber-pair minimum", _f(worst), 1e-8, worst <= 1e-8


def check_a11(rng):
    rows = []
    ok = True
    for p in (2, 3, 4, 5):
        for c in (0.5, 1.0, 10.0):
            D, L = gap_pair(p, c)
            gap = permutation_gap(D, L)
            base = d_diag(D, L) ** 2
            good = gap > c and abs(base - c / 3) <= 1e-12 * max(1.0, c)
            ok &= good
            rows.append([p, c, _f(gap - c)])
    return "strict permutation gap > c", {"margins": rows}, 0.0, ok


def check_a12(rng):
    U = gr.phi(gr.example_plane_wp_prime(11))
    rep = minimal_antipodal_witness(U, np.eye(11), MetricConfig(k=1.0))
    anti = curves.geodesically_antipodal(*rep.record.endpoints)
    n_logs = len(curves.connecting_geodesic(*rep.record.endpoints))
    err = abs(rep.restricted_min2 - rep.claimed2)
    computed = {"identity_gap": _f(err), "gap_bound": _f(rep.gap_bound), "identity_bound": _f(rep.identity_bound),
                "antipodal": anti, "minimal_geodesics": n_logs}
    ok = rep.verified and anti and n_logs >= 2
    return "minimal antipodal pair at p=11", computed, 1e-6, ok


def _random_geodesic(p, rng, kind):
    U = random_rotation(p, rng)
    D = np.exp(rng.uniform(-1, 1, p))
    if kind == 0:
        return curves.Geodesic(EigenPair(U, D), np.zeros((p, p)), np.zeros(p))
    if kind == 1:
        c = float(np.exp(rng.uniform(-1, 1)))
        return curves.Geodesic(EigenPair(U, np.full(p, c)), random_skew(p, rng), np.zeros(p))
    return curves.Geodesic(EigenPair(U, D), random_skew(p, rng), rng.standard_normal(p))


def check_a13(rng):
    counts = {"Constant": 0, "Immersion": 0}
    worst_fd = 0.0
    h = 1e-5
    for i in range(500):
        p = (2, 3, 4)[i % 3]
        g = _random_geodesic(p, rng, 0 if i % 25 == 0 else 1 if i % 25 == 1 else 2)
        counts[curves.is_immersion(g).value] += 1
        t = float(rng.uniform(0.1, 0.9))
        dX = curves.curve_derivative(g, t)
        fd = (curves.ssr_eval(g, t + h) - curves.ssr_eval(g, t - h)) / (2 * h)
        worst_fd = max(worst_fd, np.linalg.norm(dX - fd) / (1 + np.linalg.norm(dX)))
    return "constant-or-immersion; derivative = finite differences", {"counts": counts, "fd_error": _f(worst_fd)}, 1e-6, worst_fd <= 1e-6


def check_a14(rng):
    type2 = 0
    n = 0
    cfg = MetricConfig(k=1.0)
    for p in (2, 3, 4):
        for _ in range(100):
            X, Y = _random_top_spd(p, rng), _random_top_spd(p, rng)
            type2 += curves.classify(X, Y, cfg).type2
            n += 1
    return "no Type II non-uniqueness for p <= 4", {"cases": n, "type2": int(type2)}, 0.0, type2 == 0


CHECKS = {
    "A01": ("involution distance law", check_a01),
    "A02": ("half-angle relation", check_a02),
    "A03": ("2x isometry", check_a03),
    "A04": ("combinatorial identity", check_a04),
    "A05": ("covering bound", check_a05),
    "A06": ("W_p nearest coordinate plane", check_a06),
    "A07": ("W'_p nearest coordinate plane", check_a07),
    "A08": ("sign-change reducibility p <= 4", check_a08),
    "A09": ("non-reducible involution p = 11", check_a09),
    "A10": ("d_sr brute-force equivalence", check_a10),
    "A11": ("gap construction", check_a11),
    "A12": ("minimal antipodal pair p = 11", check_a12),
    "A13": ("immersion dichotomy", check_a13),
    "A14": ("Type II absence p <= 4", check_a14),
}

RUNTIME_LIMITS = {
    "A01": 10, "A02": 30, "A03": 30, "A04": 5, "A05": 60, "A06": 30, "A07": 10,
    "A08": 60, "A09": 60, "A10": 120, "A11": 10, "A12": 300, "A13": 30, "A14": 300,
}


def normalize_id(check_id: str) -> str:
    s = str(check_id).upper().lstrip("A")
    return f"A{int(s):02d}"


def run_check(check_id: str, seed: int = 0) -> CheckResult:
    cid = normalize_id(check_id)
    name, fn = CHECKS[cid]
    index = int(cid[1:])
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), index]))
    t = time.perf_counter()
    try:
        expected, computed, tol, ok = fn(rng)
    except Exception as exc:  # a failed check is reported, not raised
        expected, computed, tol, ok = "no exception", f"{type(exc).__name__}: {exc}", 0.0, False
    return CheckResult(cid, name, expected, computed, tol, bool(ok), time.perf_counter() - t)


def run_all(seed: int = 0, only=None, jobs: int = 1) -> list:
    ids = sorted(CHECKS) if not only else sorted({normalize_id(c) for c in only})
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(lambda c: run_check(c, seed), ids))
    else:
        results = [run_check(c, seed) for c in ids]
    return sorted(results, key=lambda r: r.id)


def report_json(results, seed: int) -> str:
    body = {
        "schema": "1",
        "seed": int(seed),
        "all_passed": all(r.passed for r in results),
        "checks": [r.to_json() for r in results],
    }
    return json.dumps(body, indent=2, sort_keys=True)
