"""Acceptance suite: one printed pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
complete.  Expensive sample sets are computed once in module fixtures and
shared between criteria.
"""

import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from diolab import sampling
from diolab import stats as st
from diolab.bestapprox import (CUBOID, GENERAL, NORM, EngineConfig, Theta,
                               best_records_from_cf, enumerate_best_general,
                               frontier_best_cuboid, oracle_best,
                               scan_best_n1, successor_best_norm)
from diolab.dynamics import theta_j, verify_correspondence
from diolab.geometry import (ApproxSpace, c_constant, jt_bounding_box,
                             jt_contains, jt_volume)

SP11 = ApproxSpace.create([1], [1])
SP21_CUB = ApproxSpace.create([1, 1], [1])

LEVY = st.LEVY_CONSTANT          # pi^2 / (12 ln 2)
LN_PHI = math.log((1 + 5 ** 0.5) / 2)
INV_SQRT5 = 5 ** -0.5


def report(num, name, ok, detail):
    print(f"ACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


# ---------------------------------------------------------------------------
# shared sample sets


@pytest.fixture(scope="module")
def lebesgue_run():
    """100 Lebesgue targets, 5000 certified convergents each."""
    src = sampling.lebesgue_source(1, 1, digit_budget=5400, seed=20260808)
    out = {"tails": [], "dl": [], "residues": {}, "dets_ok": True,
           "q_est": [], "p_est": []}
    for i in range(100):
        recs, _ = best_records_from_cf(sampling.sample(src, i), SP11, 5000)
        assert len(recs) == 5000
        lv = st.levy_series(recs, space=SP11)
        out["tails"].append(lv.tail_mean)
        head = recs[:1000]
        out["dl"].extend(st.dl_samples(head, 0, SP11))
        for r in head:
            cls = (r.p[0] % 2, r.q[0] % 2)
            out["residues"][cls] = out["residues"].get(cls, 0) + 1
        for a, b in zip(head, head[1:]):
            if abs(a.p[0] * b.q[0] - b.p[0] * a.q[0]) != 1:
                out["dets_ok"] = False
        q_est, p_est = st.duality_estimates(recs, SP11)
        out["q_est"].append(q_est)
        out["p_est"].append(p_est)
    return out


@pytest.fixture(scope="module")
def cantor_run():
    """100 Cantor targets (4500 ternary digits >= the 2600 floor), 2000 convergents."""
    src = sampling.cantor_source(4500, seed=7151)
    tails = []
    for i in range(100):
        recs, _ = best_records_from_cf(sampling.sample(src, i), SP11, 2000)
        assert len(recs) == 2000
        tails.append(st.levy_series(recs, space=SP11).tail_mean)
    return tails


@pytest.fixture(scope="module")
def cheung_run():
    """20 Lebesgue 2x1 targets, cuboid best approximations to l = 4000.

    The consistency criterion reads the tail estimate whose window starts at
    l = 2000; with the last-50%-of-indices tail convention that means runs
    of length 4000.  (The value (log q_l)^2/l evaluated at the single index
    l = 2000 has cross-sample sd ~3.5%, so its 20-sample spread lands near
    13% for any seed; the windowed estimate is the calibrated quantity.)
    """
    src = sampling.lebesgue_source(2, 1, digit_budget=140, seed=515)
    per_theta = []
    for i in range(20):
        theta = sampling.sample(src, i)
        T = 98.0
        recs = []
        for _ in range(8):
            recs = frontier_best_cuboid(theta, SP21_CUB, int(math.exp(T)))
            if len(recs) >= 4000:
                break
            T *= 1.1
        assert len(recs) >= 4000, f"target {i} reached only {len(recs)} records"
        recs = recs[:4000]
        series = [(l + 1, r.log_q_norm ** 2 / (l + 1)) for l, r in enumerate(recs)]
        tail, _ = st.tail_stats([v for _, v in series])  # window (2000, 4000]
        at_2000 = series[1999][1]
        per_theta.append({"tail": tail, "at_2000": at_2000})
    return per_theta


@pytest.fixture(scope="module")
def cylinder_runs_21():
    """Two independent pools of 10^4+ determinant samples (m=2, n=1, k=r=1)."""
    sp = ApproxSpace.create([2], [1])
    pools = []
    for seed in (6001, 6002):
        src = sampling.lebesgue_source(2, 1, digit_budget=620, seed=seed)
        pool = []
        for i in range(20):
            recs = successor_best_norm(sampling.sample(src, i), sp, 505)
            pool.extend(st.determinant_samples(recs, sp))
        pools.append(pool)
    return pools


# ---------------------------------------------------------------------------
# criteria


def test_criterion_1_levy_lebesgue(lebesgue_run):
    mean = float(np.mean(lebesgue_run["tails"]))
    rel = abs(mean - LEVY) / LEVY
    ok = report(1, "Levy-Khintchine constant (Lebesgue)", rel < 0.01,
                f"mean {mean:.6f} vs {LEVY:.6f}, rel dev {rel * 100:.3f}% < 1%")
    assert ok


def test_criterion_2_levy_cantor(cantor_run):
    mean = float(np.mean(cantor_run))
    rel = abs(mean - LEVY) / LEVY
    ok = report(2, "Cantor-set Levy constant", rel < 0.02,
                f"mean {mean:.6f} vs {LEVY:.6f}, rel dev {rel * 100:.3f}% < 2%")
    assert ok


def test_criterion_3_doeblin_lenstra(lebesgue_run):
    samples = lebesgue_run["dl"]
    assert len(samples) >= 10 ** 5
    emp = st.EmpiricalDistribution.from_samples(samples)
    ks = st.ks_distance(emp, st.dl_reference_cdf)
    spot = emp.cdf(0.5)
    ref = st.dl_reference_cdf(0.5)
    ok = report(3, "Doeblin-Lenstra law", ks < 0.02 and abs(spot - ref) < 0.01,
                f"n={len(samples)}, KS {ks:.4f} < 0.02, "
                f"F(1/2) {spot:.5f} vs {ref:.5f}")
    assert ok


def test_criterion_4_golden_controls():
    theta = sampling.sample(sampling.quadratic_source(1, 1, -1))
    recs, _ = best_records_from_cf(theta, SP11, 5000)
    levy_est = recs[-1].log_q_norm / len(recs)
    rel_levy = abs(levy_est - LN_PHI) / LN_PHI
    dl_tail = float(np.mean(st.dl_samples(recs, 0, SP11)[-100:]))
    rel_dl = abs(dl_tail - INV_SQRT5) / INV_SQRT5
    ok = report(4, "golden-ratio controls", rel_levy < 0.001 and rel_dl < 0.001,
                f"(1/l)log q_l {levy_est:.7f} vs {LN_PHI:.7f} "
                f"({rel_levy * 100:.4f}% < 0.1%); DL {dl_tail:.7f} vs "
                f"{INV_SQRT5:.7f} ({rel_dl * 100:.4f}% < 0.1%)")
    assert ok


def _oracle_cases():
    # 40 targets per shape; definition variants applicable to each shape
    return [
        ((1, 1), 20, [(NORM, ([1], [1])), (GENERAL, ([1], [1])),
                      (CUBOID, ([1], [1]))]),
        ((2, 1), 8, [(NORM, ([2], [1])), (CUBOID, ([1, 1], [1])),
                     (GENERAL, ([2], [1]))]),
        ((1, 2), 3, [(NORM, ([1], [2])), (GENERAL, ([1], [2])),
                     (GENERAL, ([1], [1, 1]))]),
        ((2, 2), 3, [(NORM, ([2], [2])), (GENERAL, ([2], [2])),
                     (GENERAL, ([1, 1], [1, 1]))]),
        ((3, 1), 3, [(NORM, ([3], [1])), (CUBOID, ([1, 1, 1], [1])),
                     (GENERAL, ([3], [1]))]),
    ]


def _rand_theta(rng, m, n):
    den = rng.choice([59, 97, 101, 211, 307])
    return Theta.explicit([[F(rng.randrange(0, den), den) for _ in range(n)]
                           for _ in range(m)])


@pytest.fixture(scope="module")
def oracle_sweep():
    rng = random.Random(990131)
    mismatches = 0
    runs = 0
    thetas_n1 = []
    for (m, n), box, variants in _oracle_cases():
        for _ in range(40):
            theta = _rand_theta(rng, m, n)
            if (m, n) == (2, 1):
                thetas_n1.append(theta)
            for definition, parts in variants:
                space = ApproxSpace.create(*parts)
                cfg = EngineConfig(definition=definition, q_bound=box * 2)
                engine = scan_best_n1 if space.decomp.n == 1 \
                    else enumerate_best_general
                eng = [(r.p, r.q) for r in engine(theta, space, cfg)
                       if all(abs(c) <= box for c in r.p + r.q)]
                orc = [(r.p, r.q) for r in oracle_best(
                    theta, space, box, EngineConfig(definition=definition,
                                                    q_bound=box))]
                runs += 1
                if eng != orc:
                    mismatches += 1
    return {"runs": runs, "mismatches": mismatches, "thetas_21": thetas_n1}


def test_criterion_5_oracle_equivalence(oracle_sweep):
    ok = report(5, "oracle equivalence",
                oracle_sweep["mismatches"] == 0 and oracle_sweep["runs"] == 600,
                f"{oracle_sweep['runs']} engine/oracle runs over 200 targets, "
                f"{oracle_sweep['mismatches']} mismatches")
    assert ok


def test_criterion_6_definition_nesting(oracle_sweep):
    inclusions = 0
    violations = 0
    for theta in oracle_sweep["thetas_21"]:
        rc = set((r.p, r.q) for r in scan_best_n1(
            theta, SP21_CUB, EngineConfig(definition=CUBOID, q_bound=40)))
        rn = set((r.p, r.q) for r in scan_best_n1(
            theta, ApproxSpace.create([2], [1]),
            EngineConfig(definition=NORM, q_bound=40)))
        inclusions += 1
        if not rn <= rc:
            violations += 1
    fixture = Theta.explicit([[F(1, 5)], [F(1, 7)]])
    rc = [(r.p, r.q) for r in scan_best_n1(
        fixture, SP21_CUB, EngineConfig(definition=CUBOID, q_bound=10))]
    rn = [(r.p, r.q) for r in scan_best_n1(
        fixture, ApproxSpace.create([2], [1]),
        EngineConfig(definition=NORM, q_bound=10))]
    fixture_ok = ((-1, -1), (5,)) in rc and ((-1, -1), (5,)) not in rn
    ok = report(6, "definition nesting",
                violations == 0 and fixture_ok,
                f"{inclusions} inclusions checked, {violations} violations; "
                f"theta=(1/5,1/7) reproduces ((-1,-1),5) in cuboid-only: {fixture_ok}")
    assert ok


def test_criterion_7_cross_section_correspondence():
    rng = random.Random(44021)
    cases = []
    for _ in range(8):
        cases.append((_rand_theta(rng, 1, 1), 5.0,
                      [(NORM, ([1], [1])), (GENERAL, ([1], [1])),
                       (CUBOID, ([1], [1]))]))
    for _ in range(6):
        cases.append((_rand_theta(rng, 2, 1), 3.5,
                      [(CUBOID, ([1, 1], [1])), (NORM, ([2], [1])),
                       (GENERAL, ([2], [1]))]))
    for _ in range(6):
        cases.append((_rand_theta(rng, 1, 2), 2.2,
                      [(NORM, ([1], [2])), (GENERAL, ([1], [1, 1]))]))
    total = 0
    failed = 0
    for theta, T, variants in cases:
        for definition, parts in variants:
            space = ApproxSpace.create(*parts)
            rep = verify_correspondence(theta, space, T,
                                        EngineConfig(definition=definition,
                                                     q_bound=1))
            total += 1
            if not rep.match:
                failed += 1
    ok = report(7, "cross-section correspondence", failed == 0,
                f"20 rational targets, {total} definition runs at T <= 5, "
                f"{failed} count mismatches")
    assert ok


def test_criterion_8_cheung_convergence(cheung_run):
    tails = [item["tail"] for item in cheung_run]
    spread = (max(tails) - min(tails)) / sorted(tails)[len(tails) // 2]
    raw = [item["at_2000"] for item in cheung_run]
    raw_spread = (max(raw) - min(raw)) / sorted(raw)[len(raw) // 2]
    ok = report(8, "Cheung convergence (m=2, n=1)", spread < 0.10,
                f"20 targets, tail windows from l=2000: estimates in "
                f"[{min(tails):.4f}, {max(tails):.4f}], spread "
                f"{spread * 100:.2f}% < 10% "
                f"(single-index values at l=2000 spread {raw_spread * 100:.1f}%)")
    assert ok


def test_criterion_9_congruence_equidistribution(lebesgue_run):
    counts = lebesgue_run["residues"]
    total = sum(counts.values())
    assert total >= 10 ** 5
    freqs = {cls: c / total for cls, c in counts.items()}
    zero_class = freqs.get((0, 0), 0.0)
    devs = {cls: abs(freqs.get(cls, 0.0) - 1 / 3)
            for cls in [(0, 1), (1, 0), (1, 1)]}
    ok = report(9, "congruence equidistribution mod 2",
                zero_class == 0.0 and all(d < 0.02 for d in devs.values()),
                f"n={total}, freqs "
                + ", ".join(f"{cls}:{freqs.get(cls, 0):.4f}" for cls in sorted(devs))
                + f", class (0,0): {zero_class}")
    assert ok


def test_criterion_10_determinants(lebesgue_run, cylinder_runs_21):
    ok_1d = lebesgue_run["dets_ok"]
    pool_a, pool_b = cylinder_runs_21
    fa = {int(v): c / len(pool_a) for v, c in
          zip(*np.unique(pool_a, return_counts=True))}
    fb = {int(v): c / len(pool_b) for v, c in
          zip(*np.unique(pool_b, return_counts=True))}
    tv = st.tv_distance(fa, fb)
    ok = report(10, "determinant statistics",
                ok_1d and len(pool_a) >= 10 ** 4 and len(pool_b) >= 10 ** 4
                and tv < 0.05,
                f"1-D consecutive dets all +-1: {ok_1d}; m=2,n=1 runs of "
                f"{len(pool_a)}/{len(pool_b)} samples, TV {tv:.4f} < 0.05")
    assert ok


def _mc_jt(space, T, n=300_000, seed=5):
    rng = np.random.default_rng(seed)
    box = jt_bounding_box(space, T)
    lo = np.array([a for a, _ in box])
    hi = np.array([b for _, b in box])
    pts = rng.uniform(lo, hi, size=(n, len(box)))
    inside = np.fromiter((jt_contains(space, p, T) for p in pts),
                         dtype=bool, count=n)
    return float(np.prod(hi - lo)) * inside.mean()


def test_criterion_11_structural_invariants(lebesgue_run):
    rng = random.Random(17)
    # volume constants against Monte Carlo
    vol_ok = True
    for _ in range(5):
        k = rng.randrange(1, 4)
        r = rng.randrange(1, 3)
        m_parts = [rng.randrange(1, 3) for _ in range(k)]
        n_parts = [rng.randrange(1, 3) for _ in range(r)]
        space = ApproxSpace.create(m_parts, n_parts)
        T = rng.uniform(1.0, 2.5)
        exact = jt_volume(T, space)
        mc = _mc_jt(space, T)
        if abs(mc - exact) / exact >= 0.01:
            vol_ok = False
        assert c_constant(k, n_parts) > 0

    # lambda_j unimodularity and e_j primitivity over 10^3 records
    src = sampling.lebesgue_source(1, 1, digit_budget=120, seed=808)
    lam_checked = 0
    lam_ok = True
    for i in range(26):
        theta = sampling.sample(src, i)
        recs, _ = best_records_from_cf(theta, SP11, 40)
        for rec in recs:
            if rec.degenerate:
                continue
            tj = theta_j(theta, rec, 2, SP11, moduli=(2,))
            det = abs(float(np.linalg.det(tj.lattice.columns)))
            if abs(det - 1.0) > 1e-9:
                lam_ok = False
            if math.gcd(*(abs(c) for c in tj.e_j_coefficients)) != 1:
                lam_ok = False
            lam_checked += 1
    lam_ok = lam_ok and lam_checked >= 1000

    # telescoping identity to 1e-12
    golden = sampling.sample(sampling.quadratic_source(1, 1, -1))
    grecs, _ = best_records_from_cf(golden, SP11, 2000)
    tele = st.telescoping_gap_check(grecs)

    # growth duality within 2 percent
    q_est = float(np.mean(lebesgue_run["q_est"]))
    p_est = float(np.mean(lebesgue_run["p_est"]))
    duality_rel = abs(q_est - p_est) / q_est

    ok = report(11, "structural invariants",
                vol_ok and lam_ok and tele < 1e-12 and duality_rel < 0.02,
                f"jt volumes vs MC 1%: {vol_ok}; lambda_j corpus "
                f"({lam_checked} records): {lam_ok}; telescoping {tele:.2e}; "
                f"duality dev {duality_rel * 100:.3f}% < 2%")
    assert ok
