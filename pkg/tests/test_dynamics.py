import math
import random
from fractions import Fraction as F
from math import gcd

import numpy as np
import pytest

from diolab.bestapprox import (CUBOID, GENERAL, NORM, EngineConfig, Theta,
                               scan_best_n1, _ScaledTheta, _build_record)
from diolab.dynamics import (BoxTooLarge,
                             DegenerateRecord, LatticeBasis, ZeroCoordinate,
                             flow_apply, hit_time, lambda_theta, lll_reduce,
                             normalizer_A, region_primitive_points, solve_e_j,
                             theta_j, theta_region_points,
                             verify_correspondence)
from diolab.geometry import ApproxSpace, ProductRegion, jt_contains

SP11 = ApproxSpace.create([1], [1])


def test_lambda_theta_examples():
    th0 = Theta.explicit([[0]])
    assert np.array_equal(lambda_theta(th0).columns, np.eye(2))
    th = Theta.explicit([[F(1, 3)]])
    cols = lambda_theta(th).columns
    assert cols[0, 1] == pytest.approx(1 / 3)
    rng = random.Random(0)
    for _ in range(5):
        t = Theta.explicit([[F(rng.randrange(100), 101) for _ in range(2)]
                            for _ in range(2)])
        assert np.linalg.det(lambda_theta(t).columns) == pytest.approx(1.0)


def test_flow_apply_examples():
    sp = SP11
    basis = lambda_theta(Theta.explicit([[F(1, 3)]]))
    same = flow_apply([0.0], basis, sp)
    assert np.allclose(same.columns, basis.columns)
    moved = flow_apply([1.0], LatticeBasis(np.eye(2), 1.0), sp)
    assert np.allclose(np.diag(moved.columns), [math.e, 1 / math.e])


def test_flow_determinant_and_compatibility():
    rng = random.Random(1)
    for _ in range(20):
        parts = rng.choice([((1,), (1,)), ((1, 2), (1,)), ((2,), (1, 1)),
                            ((1, 1), (2, 1))])
        sp = ApproxSpace.create(*parts)
        kr1 = sp.decomp.k + sp.decomp.r - 1
        t = [rng.uniform(-2, 2) for _ in range(kr1)]
        s = [rng.uniform(-2, 2) for _ in range(kr1)]
        basis = LatticeBasis(np.eye(sp.decomp.d), 1.0)
        once = flow_apply(t, basis, sp)
        assert np.linalg.det(once.columns) == pytest.approx(1.0, rel=1e-12)
        twice = flow_apply(s, once, sp)
        direct = flow_apply([a + b for a, b in zip(s, t)], basis, sp)
        assert np.allclose(twice.columns, direct.columns, rtol=1e-12)


def test_hit_time_scalar_case():
    # k = r = 1: t = (n/m) log ||q||
    sp = ApproxSpace.create([2], [1])
    th = Theta.explicit([[F(3, 7)], [F(2, 7)]])
    recs = scan_best_n1(th, sp, EngineConfig(definition=NORM, q_bound=13))
    rec = [r for r in recs if r.q == (13,)]
    if rec:
        t = hit_time(rec[0], sp)
        assert t[0] == pytest.approx(math.log(13) / 2)
    rec13 = [r for r in scan_best_n1(Theta.explicit([[F(5, 13)]]), SP11,
                                     EngineConfig(definition=NORM, q_bound=13))
             if r.q == (13,)]
    assert rec13 and hit_time(rec13[0], SP11)[0] == pytest.approx(math.log(13))


def test_hit_time_jt_membership():
    # t in J^T exactly when ||q|| <= e^T (nondegenerate records)
    rng = random.Random(5)
    sp = ApproxSpace.create([1, 1], [1])
    for _ in range(6):
        th = Theta.explicit([[F(rng.randrange(1, 2 ** 40), 2 ** 40)],
                             [F(rng.randrange(1, 2 ** 40), 2 ** 40)]])
        recs = scan_best_n1(th, sp, EngineConfig(definition=CUBOID, q_bound=300))
        T = math.log(120.0)
        for rec in recs:
            try:
                t = hit_time(rec, sp)
            except DegenerateRecord:
                continue
            assert jt_contains(sp, t, T) == (rec.q_norm <= 120.0)


def test_hit_time_two_to_one():
    th = Theta.explicit([[F(5, 13)]])
    recs = scan_best_n1(th, SP11, EngineConfig(definition=NORM, q_bound=10))
    st = _ScaledTheta(th, SP11)
    for rec in recs:
        if rec.degenerate:
            continue
        twin = _build_record(st, tuple(-x for x in rec.p),
                             tuple(-x for x in rec.q), 0, sign_coordinate=1)
        assert hit_time(twin, SP11) == pytest.approx(hit_time(rec, SP11))


def test_region_primitive_points_examples():
    zd = LatticeBasis(np.eye(2), 1.0)
    assert region_primitive_points(zd, ProductRegion((0.9, 0.9)), SP11) == []
    pts = region_primitive_points(zd, ProductRegion((1, 1)), SP11)
    assert sorted(pts) == sorted(
        [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)])


def test_region_primitive_points_box_guard():
    zd = LatticeBasis(np.eye(2), 1.0)
    with pytest.raises(BoxTooLarge):
        region_primitive_points(zd, ProductRegion((10 ** 4, 10 ** 4)), SP11,
                                limit=10 ** 3)


def test_theta_region_points_appendix():
    th = Theta.explicit([[F(1, 5)], [F(1, 7)]])
    sp = ApproxSpace.create([1, 1], [1])
    pts = theta_region_points(th, sp, [F(0), F(2, 7)], [F(5)])
    assert sorted(pts) == sorted([(-1, -1, 5), (1, 1, -5)])


def test_normalizer_examples():
    for d, j in [(2, 2), (3, 1), (4, 3)]:
        x = np.zeros(d)
        x[j - 1] = 1.0
        assert np.allclose(normalizer_A(j, x, 1.0), np.eye(d))
    rng = random.Random(2)
    for _ in range(25):
        d = rng.choice([2, 3, 4])
        j = rng.randrange(1, d + 1)
        x = np.array([rng.uniform(-2, 2) for _ in range(d)])
        if abs(x[j - 1]) < 0.1:
            continue
        gamma = rng.uniform(0.1, 3.0)
        A = normalizer_A(j, x, gamma)
        assert np.linalg.det(A) == pytest.approx(gamma, rel=1e-9)
        img = A @ x
        ej = np.zeros(d)
        ej[j - 1] = math.copysign(1.0, x[j - 1])
        assert np.allclose(img, ej, atol=1e-12)
        # complement scaled by s = (gamma |x_j|)^(1/(d-1))
        s = (gamma * abs(x[j - 1])) ** (1.0 / (d - 1))
        for i in range(d):
            if i != j - 1:
                e = np.zeros(d)
                e[i] = 1.0
                assert np.allclose(A @ e, s * e)


def test_normalizer_zero_coordinate():
    with pytest.raises(ZeroCoordinate):
        normalizer_A(1, np.array([0.0, 1.0]), 1.0)


def test_normalizer_matches_section_renormalization():
    # w(x, y, gamma) from the j = 1 construction generates the same lattice,
    # applied to the sign twin whose first coordinate is positive
    rng = random.Random(7)
    sp = SP11
    checked = 0
    for _ in range(10):
        th = Theta.explicit([[F(rng.randrange(1, 2 ** 30), 2 ** 30)]])
        recs = scan_best_n1(th, sp, EngineConfig(definition=NORM, q_bound=60,
                                                 sign_coordinate=1))
        rec = recs[-1]
        if rec.degenerate:
            continue
        tj = theta_j(th, rec, 1, sp)
        t = hit_time(rec, sp)
        flowed = flow_apply(t, lambda_theta(th), sp)
        v = flowed.columns @ np.array([float(rec.p[0]), float(rec.q[0])])
        assert v[0] > 0
        gam, y = v[0], v[1]
        w = np.array([[gam, 0.0], [y, 1.0 / gam]])
        basis2 = np.linalg.inv(w) @ flowed.columns
        # equal lattices: the change of basis is integer unimodular
        change = np.linalg.solve(basis2, tj.lattice.columns)
        assert np.allclose(change, np.rint(change), atol=1e-6)
        assert round(abs(np.linalg.det(np.rint(change)))) == 1
        checked += 1
    assert checked >= 8


def test_theta_j_invariants():
    rng = random.Random(3)
    sp = SP11
    checked = 0
    for trial in range(30):
        den = 2 ** 50
        th = Theta.explicit([[F(rng.randrange(1, den), den)]])
        recs = scan_best_n1(th, sp, EngineConfig(definition=NORM, q_bound=500))
        for rec in recs:
            if rec.degenerate:
                continue
            tj = theta_j(th, rec, 2, sp, moduli=(2,))
            assert abs(np.linalg.det(tj.lattice.columns)) == pytest.approx(1.0, abs=1e-9)
            v = solve_e_j(tj.lattice, 2)
            assert gcd(*(abs(c) for c in v)) == 1
            assert tj.residues[2] != (0, 0)
            checked += 1
    assert checked > 100


def test_epsilon_region_has_the_pair_at_hit_time():
    # at each visit the flowed lattice meets the section region in >= 2 points
    th = Theta.explicit([[F(2, 7)]])
    recs = scan_best_n1(th, SP11, EngineConfig(definition=NORM, q_bound=20))
    eps = F(1)  # all-sup Minkowski bound
    for rec in recs:
        if rec.degenerate:
            continue
        q = rec.q[0]
        pts = theta_region_points(th, SP11, [eps / q], [F(q)])
        assert len(pts) >= 2


def test_lll_reduces_skewed_basis():
    cols = [[1, 0], [10 ** 9 + 7, 1]]
    red, U = lll_reduce(cols)
    assert max(abs(c) for col in red for c in col) < 10 ** 5
    assert round(abs(np.linalg.det(np.array(U)))) == 1


def test_verify_correspondence_examples():
    rep = verify_correspondence(Theta.explicit([[F(2, 7)]]), SP11, 3.0,
                                EngineConfig(definition=NORM, q_bound=1))
    assert rep.match and rep.n_hits == rep.n_eligible > 0

    th = Theta.explicit([[F(1, 5)], [F(1, 7)]])
    sp = ApproxSpace.create([1, 1], [1])
    rep2 = verify_correspondence(th, sp, 2.0,
                                 EngineConfig(definition=CUBOID, q_bound=1))
    assert rep2.match
    recs = scan_best_n1(th, sp, EngineConfig(definition=CUBOID,
                                             q_bound=math.exp(2.0)))
    assert ((-1, -1), (5,)) in [(r.p, r.q) for r in recs]

    # every record degenerate: both sides empty
    th3 = Theta.explicit([[F(1, 3)], [F(0)]])
    rep3 = verify_correspondence(th3, sp, 1.5,
                                 EngineConfig(definition=CUBOID, q_bound=1))
    assert rep3.match and rep3.n_hits == 0 and rep3.n_eligible == 0


def test_verify_correspondence_general_n2():
    th = Theta.explicit([[F(3, 10), F(7, 10)]])
    sp = ApproxSpace.create([1], [1, 1])
    rep = verify_correspondence(th, sp, 1.6,
                                EngineConfig(definition=GENERAL, q_bound=1))
    assert rep.match
