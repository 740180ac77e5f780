"""Lattices, the diagonal flow, hitting times, and the section correspondence.

The probe lattice [[I_m, theta], [0, I_n]] Z^d is expanded on m-blocks and
contracted on n-blocks by a (k+r-1)-parameter diagonal flow whose last
exponent balances the determinant.  Each nondegenerate best approximation
pins down the unique flow time at which its vector lands on the unit spheres
of blocks 2..k+r, and the correspondence verifier recounts those visits by
direct lattice-point enumeration, independently of any engine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .geometry import ApproxSpace, ProductRegion, jt_contains, region_contains
from .numerics import Rat, int_root


class BoxTooLarge(Exception):
    """The coefficient box of an enumeration exceeds the configured limit."""


class ZeroCoordinate(Exception):
    """The selected coordinate of (p + theta q, q) vanishes."""


class DegenerateRecord(Exception):
    """A record violates the nondegeneracy conditions of the correspondence."""


@dataclass(frozen=True)
class LatticeBasis:
    """d x d basis (columns) with its covolume."""

    columns: np.ndarray
    covolume: float

    @classmethod
    def from_columns(cls, columns) -> "LatticeBasis":
        cols = np.asarray(columns, dtype=float)
        return cls(cols, abs(float(np.linalg.det(cols))))


@dataclass
class ThetaJRecord:
    """Renormalized unimodular lattice plus direction, error and residues.

    ``e_j_coefficients`` is the integer vector c with lattice @ c = +-e_j
    (it is the signed (p, q) itself), verified by forward residual.
    """

    lattice: LatticeBasis
    proj: Tuple[Tuple[float, ...], ...]
    error: float
    residues: Dict[int, Tuple[int, ...]]
    e_j_coefficients: Tuple[int, ...] = ()


def lambda_theta(theta) -> LatticeBasis:
    """Upper block-unitriangular basis [[I_m, theta], [0, I_n]]; det = 1."""
    m, n = theta.m, theta.n
    d = m + n
    cols = np.eye(d)
    for i in range(m):
        for j in range(n):
            cols[i, m + j] = float(theta.midpoint(i, j))
    return LatticeBasis(cols, 1.0)


def flow_exponents(t: Sequence[float], space: ApproxSpace) -> np.ndarray:
    """Per-coordinate diagonal exponents of the flow at time t."""
    dec = space.decomp
    k, r = dec.k, dec.r
    t = [float(v) for v in t]
    if len(t) != k + r - 1:
        raise ValueError("flow time must have k+r-1 coordinates")
    last = sum(dec.m_parts[i] * t[i] for i in range(k))
    last -= sum(dec.n_parts[j] * t[k + j] for j in range(r - 1))
    last /= dec.n_parts[-1]
    exps = []
    for i in range(k):
        exps.extend([t[i]] * dec.m_parts[i])
    for j in range(r - 1):
        exps.extend([-t[k + j]] * dec.n_parts[j])
    exps.extend([-last] * dec.n_parts[-1])
    return np.array(exps)


def flow_apply(t: Sequence[float], basis: LatticeBasis, space: ApproxSpace) -> LatticeBasis:
    """Left-multiply by the diagonal flow; the determinant is preserved."""
    diag = np.exp(flow_exponents(t, space))
    return LatticeBasis(diag[:, None] * basis.columns, basis.covolume)


def _scaled_logs(record, space: ApproxSpace):
    dec = space.decomp
    m_logs = [record.m_log_norms[i] + math.log(spec.m_scale(dim))
              if record.m_log_norms[i] > -math.inf else -math.inf
              for i, (spec, dim) in enumerate(zip(space.m_norms, dec.m_parts))]
    n_logs = [record.n_log_norms[j] + math.log(spec.n_scale(dim))
              if record.n_log_norms[j] > -math.inf else -math.inf
              for j, (spec, dim) in enumerate(zip(space.n_norms, dec.n_parts))]
    return m_logs, n_logs


def hit_time(record, space: ApproxSpace, strict: bool = True) -> Tuple[float, ...]:
    """Flow time at which the record's vector crosses the section.

    Coordinates 2..k are -log of the m-block norms, k+1..k+r-1 are +log of
    the n-block norms, and the first coordinate balances the remaining
    n_r-block constraint.  Raises DegenerateRecord when a needed block norm
    vanishes (and, in strict mode, when the t_1 >= 0 condition fails).
    """
    dec = space.decomp
    k, r = dec.k, dec.r
    m_logs, n_logs = _scaled_logs(record, space)
    if any(v == -math.inf for v in m_logs[1:]) or any(v == -math.inf for v in n_logs):
        raise DegenerateRecord("a block norm required by the hit time vanished")
    t = [0.0] * (k + r - 1)
    for i in range(1, k):
        t[i] = -m_logs[i]
    for j in range(r - 1):
        t[k + j] = n_logs[j]
    t1 = sum(dec.n_parts[j] * n_logs[j] for j in range(r))
    t1 += sum(dec.m_parts[i] * m_logs[i] for i in range(1, k))
    t1 /= dec.m_parts[0]
    t[0] = t1
    if strict and t1 < -1e-12:
        raise DegenerateRecord("record breaks the Error >= first-block bound")
    return tuple(t)


def record_is_correspondence_eligible(record, space: ApproxSpace) -> bool:
    try:
        hit_time(record, space, strict=True)
        return True
    except DegenerateRecord:
        return False


# ---------------------------------------------------------------------------
# lattice-point enumeration


def region_primitive_points(basis: LatticeBasis, region: ProductRegion,
                            space: ApproxSpace, limit: int = 10 ** 6,
                            tol: float = 1e-9) -> List[Tuple[int, ...]]:
    """All primitive lattice vectors in the closed region.

    Integer coefficient boxes are derived from the basis inverse and the
    region's bounding box; each box point is then tested against the region.
    """
    dec = space.decomp
    cols = np.asarray(basis.columns, dtype=float)
    d = cols.shape[0]
    if len(region.radii) != dec.k + dec.r:
        raise ValueError("one radius per block required")
    box = []
    for (spec, dim), rr in zip(space.iter_blocks(), region.radii):
        box.extend(spec.coord_bounds(float(rr), dim))
    inv = np.linalg.inv(cols)
    bounds = np.abs(inv) @ np.array(box)
    ranges = [range(-int(math.floor(b + tol)), int(math.floor(b + tol)) + 1)
              for b in bounds]
    total = 1
    for rg in ranges:
        total *= len(rg)
        if total > limit:
            raise BoxTooLarge(f"coefficient box holds {total}+ points (limit {limit})")
    out = []
    for c in itertools.product(*ranges):
        if all(x == 0 for x in c):
            continue
        if gcd(*(abs(x) for x in c)) != 1:
            continue
        v = cols @ np.array(c, dtype=float)
        if region_contains(region, v, space, tol=tol):
            out.append(tuple(c))
    return out


def _int_ball_bound(radius_power, exponent: int) -> int:
    """Largest integer t with t**exponent <= radius_power (radius_power >= 0)."""
    if radius_power < 0:
        return -1
    t = int_root(int(radius_power), exponent)
    while (t + 1) ** exponent <= radius_power:
        t += 1
    while t > 0 and t ** exponent > radius_power:
        t -= 1
    return t


def theta_region_points(theta, space: ApproxSpace,
                        m_rad_powers: Sequence[Rat], n_rad_powers: Sequence[Rat],
                        include_q_zero: bool = True,
                        limit: int = 10 ** 7) -> List[Tuple[int, ...]]:
    """Exact primitive points of Lambda_theta in a closed product region.

    Radii are given through their norm powers (rational); the whole test
    runs in integer arithmetic after scaling by the entry denominator.
    Returns full (p, q) coefficient vectors, both signs included.
    """
    from .bestapprox import _ScaledTheta  # shared scaled-integer model

    st = _ScaledTheta(theta, space)
    dec = space.decomp
    D = st.D
    m_rad_scaled = [Rat(rp) * Rat(D) ** spec.power_exponent
                    for rp, spec in zip(m_rad_powers, space.m_norms)]

    # integer box for q from the n radii
    q_bounds: List[int] = []
    for spec, (a, b), rp in zip(space.n_norms, st.n_slices, n_rad_powers):
        if spec.kind == "wsup":
            q_bounds.extend(int(Rat(rp) / w) for w in spec.weights)
        else:
            q_bounds.extend([_int_ball_bound(rp, spec.power_exponent)] * (b - a))
    if any(bb < 0 for bb in q_bounds):
        return []

    total = 1
    for bb in q_bounds:
        total *= 2 * bb + 1
    if total > limit:
        raise BoxTooLarge(f"q box holds {total} points (limit {limit})")

    out = []
    count = 0
    for q in itertools.product(*[range(-bb, bb + 1) for bb in q_bounds]):
        if not include_q_zero and all(c == 0 for c in q):
            continue
        npw = st.n_block_powers(q)
        if any(pw > rp for pw, rp in zip(npw, n_rad_powers)):
            continue
        ranges = []
        feasible = True
        for spec, (a, b), rps in zip(space.m_norms, st.m_slices, m_rad_scaled):
            if spec.kind == "wsup":
                cbs = [int(Rat(rps) / w) for w in spec.weights]
            else:
                cbs = [_int_ball_bound(rps, spec.power_exponent)] * (b - a)
            for c in range(a, b):
                t = sum(st.N[c][j] * q[j] for j in range(dec.n))
                cb = cbs[c - a]
                lo = -((cb + t) // D)
                hi = (cb - t) // D
                if lo > hi:
                    feasible = False
                    break
                ranges.append(range(lo, hi + 1))
            if not feasible:
                break
        if not feasible:
            continue
        for p in itertools.product(*ranges):
            count += 1
            if count > limit:
                raise BoxTooLarge(f"p sweep exceeded limit {limit}")
            if all(c == 0 for c in p) and all(c == 0 for c in q):
                continue
            coords = st.m_scaled_coords(p, q)
            mpw = st.m_block_powers(coords)
            if any(pw > rp for pw, rp in zip(mpw, m_rad_scaled)):
                continue
            if gcd(*(abs(x) for x in p + q)) != 1:
                continue
            out.append(tuple(p) + tuple(q))
    return out


# ---------------------------------------------------------------------------
# renormalized lattice lambda_j


def normalizer_A(j: int, x: Sequence[float], gamma: float) -> np.ndarray:
    """Determinant-gamma map sending x to sign(x_j) e_j, scaling e_i (i != j).

    The complement span(e_i, i != j) is scaled by s = (gamma |x_j|)^(1/(d-1)).
    """
    x = np.asarray(x, dtype=float)
    d = len(x)
    if not 1 <= j <= d:
        raise ValueError("j out of range")
    xj = x[j - 1]
    if xj == 0.0:
        raise ZeroCoordinate("x_j = 0 admits no normalizer")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s = (gamma * abs(xj)) ** (1.0 / (d - 1))
    A = s * np.eye(d)
    col = -(s / xj) * x
    col[j - 1] = math.copysign(1.0, xj) / xj
    A[:, j - 1] = col
    return A


def theta_j(theta, record, j: int, space: ApproxSpace,
            moduli: Sequence[int] = ()) -> ThetaJRecord:
    """Full renormalized record: lambda_j lattice, direction, error, residues.

    The vector (p + theta q, q) is formed in exact arithmetic before any
    float enters: its entries cancel to magnitudes like 1/q, far below what
    a float product theta @ q can resolve at large q.
    """
    dec = space.decomp
    if record.degenerate:
        raise DegenerateRecord("the record has a vanishing block norm")
    # exact residual vector, then floats
    v = []
    for i in range(dec.m):
        acc = Fraction(int(record.p[i]))
        for jj in range(dec.n):
            acc += theta.midpoint(i, jj) * int(record.q[jj])
        v.append(float(acc))
    v.extend(float(c) for c in record.q)
    v = np.array(v)

    th = lambda_theta(theta).columns
    scales = np.zeros(dec.d)
    proj_blocks = []
    pos = 0
    norms = list(record.m_norms) + list(record.n_norms)
    for bi, (spec, dim) in enumerate(space.iter_blocks()):
        nrm = norms[bi]
        if nrm == 0.0:
            raise DegenerateRecord("zero block norm")
        scales[pos:pos + dim] = 1.0 / nrm
        proj_blocks.append(tuple(v[pos:pos + dim] / nrm))
        pos += dim
    x = v * scales  # flattened direction vector on the sphere product
    if x[j - 1] == 0.0:
        raise ZeroCoordinate("(p + theta q, q)_j = 0")
    error = record.error
    if error <= 0.0:
        raise DegenerateRecord("zero error admits no renormalization")
    A = normalizer_A(j, x, error)
    basis = A @ (scales[:, None] * th)
    # e_j lives in the lattice with coefficients +-(p, q); verify forward
    w = A @ x
    ej = np.zeros(dec.d)
    ej[j - 1] = math.copysign(1.0, x[j - 1])
    if np.max(np.abs(w - ej)) > 1e-9:
        raise ArithmeticError("renormalized vector failed to land on e_j")
    residues = {int(N): tuple(int(c) % N for c in record.p) +
                tuple(int(c) % N for c in record.q) for N in moduli}
    return ThetaJRecord(LatticeBasis.from_columns(basis),
                        tuple(proj_blocks), error, residues,
                        e_j_coefficients=tuple(int(c) for c in
                                               record.p + record.q))


def solve_e_j(basis: LatticeBasis, j: int) -> Tuple[int, ...]:
    """Integer coefficient vector v with basis @ v = e_j (rounded, checked).

    Coefficients must stay below 2^53 for the rounding to be trustworthy;
    callers working at larger scales should keep exact data instead.
    """
    d = basis.columns.shape[0]
    e = np.zeros(d)
    e[j - 1] = 1.0
    v = np.linalg.solve(basis.columns, e)
    if np.max(np.abs(v)) >= 2 ** 53:
        raise ArithmeticError("coefficients exceed exact float range")
    vi = np.rint(v)
    if np.max(np.abs(v - vi) / np.maximum(1.0, np.abs(v))) > 1e-6:
        raise ArithmeticError("e_j is not a lattice vector of this basis")
    return tuple(int(c) for c in vi)


def _float_lll(cols: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """Numerical LLL for small dimensions; adequate for length summaries."""
    b = [cols[:, j].astype(float).copy() for j in range(cols.shape[1])]
    n = len(b)

    def gram():
        gs, mu = [], np.zeros((n, n))
        for i in range(n):
            v = b[i].copy()
            for j in range(i):
                denom = gs[j] @ gs[j]
                mu[i, j] = 0.0 if denom == 0 else (b[i] @ gs[j]) / denom
                v -= mu[i, j] * gs[j]
            gs.append(v)
        return gs, mu

    gs, mu = gram()
    k, guard = 1, 0
    while k < n and guard < 1000:
        guard += 1
        for j in range(k - 1, -1, -1):
            r = round(mu[k, j])
            if r:
                b[k] = b[k] - r * b[j]
        gs, mu = gram()
        if gs[k] @ gs[k] >= (delta - mu[k, k - 1] ** 2) * (gs[k - 1] @ gs[k - 1]):
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            gs, mu = gram()
            k = max(k - 1, 1)
    return np.column_stack(b)


def approx_shortest_vector(basis: LatticeBasis, radius: int = 2) -> float:
    """Euclidean length of (nearly) the shortest lattice vector.

    The basis is LLL-reduced numerically, after which sweeping a small
    coefficient box suffices even for very skewed inputs.
    """
    red = _float_lll(np.asarray(basis.columns, dtype=float))
    d = red.shape[1]
    best = math.inf
    for c in itertools.product(range(-radius, radius + 1), repeat=d):
        if all(x == 0 for x in c):
            continue
        best = min(best, float(np.linalg.norm(red @ np.array(c, dtype=float))))
    return best


# ---------------------------------------------------------------------------
# exact LLL (small dimensions) used by the cell enumerators


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def lll_reduce(cols: Sequence[Sequence[int]]):
    """All-integer LLL reduction (delta = 3/4) of integer columns.

    Returns (reduced, U) with U unimodular and reduced = original @ U.
    Uses the integral Gram-Schmidt data (lambda, d) so no rational
    arithmetic appears; every division below is exact.
    """
    n = len(cols)
    B = [list(map(int, c)) for c in cols]
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    lam = [[0] * n for _ in range(n)]
    d = [1] * (n + 1)

    for i in range(n):
        for j in range(i + 1):
            u = _dot(B[i], B[j])
            for k2 in range(j):
                u = (d[k2 + 1] * u - lam[i][k2] * lam[j][k2]) // d[k2]
            if j < i:
                lam[i][j] = u
            else:
                if u == 0:
                    raise ArithmeticError("basis is singular")
                d[i + 1] = u

    def redi(k2, l):
        two = 2 * lam[k2][l]
        if abs(two) > d[l + 1]:
            q = (two + d[l + 1]) // (2 * d[l + 1])
            B[k2] = [x - q * y for x, y in zip(B[k2], B[l])]
            for row in range(n):
                U[row][k2] -= q * U[row][l]
            lam[k2][l] -= q * d[l + 1]
            for idx in range(l):
                lam[k2][idx] -= q * lam[l][idx]

    def swapi(k2):
        B[k2], B[k2 - 1] = B[k2 - 1], B[k2]
        for row in range(n):
            U[row][k2], U[row][k2 - 1] = U[row][k2 - 1], U[row][k2]
        for j in range(k2 - 1):
            lam[k2][j], lam[k2 - 1][j] = lam[k2 - 1][j], lam[k2][j]
        lam_ = lam[k2][k2 - 1]
        bnew = (d[k2 - 1] * d[k2 + 1] + lam_ * lam_) // d[k2]
        for i in range(k2 + 1, n):
            t = lam[i][k2]
            lam[i][k2] = (d[k2 + 1] * lam[i][k2 - 1] - lam_ * t) // d[k2]
            lam[i][k2 - 1] = (bnew * t + lam_ * lam[i][k2]) // d[k2 + 1]
        d[k2] = bnew

    k = 1
    while k < n:
        redi(k, k - 1)
        if 4 * d[k + 1] * d[k - 1] < 3 * d[k] * d[k] - 4 * lam[k][k - 1] ** 2:
            swapi(k)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                redi(k, l)
            k += 1
    return B, U


# ---------------------------------------------------------------------------
# correspondence verification


@dataclass
class CorrespondenceReport:
    T: float
    definition: str
    n_candidates: int
    n_best: int
    n_eligible: int
    n_hits: int
    match: bool
    mismatches: List[dict]

    def summary(self) -> str:
        if self.match:
            return (f"match: exact ({self.n_hits} section visits = "
                    f"{self.n_eligible} eligible best approximations, "
                    f"{self.n_best} best, {self.n_candidates} candidates)")
        return f"MISMATCH: {len(self.mismatches)} discrepancies"


def verify_correspondence(theta, space: ApproxSpace, T: float,
                          cfg=None, limit: int = 10 ** 7) -> CorrespondenceReport:
    """Check best approximations against section visits, both sides exact.

    Side one runs an engine.  Side two recounts, for every rounded candidate
    with ||q|| <= e^T, the primitive lattice points of its closed region; a
    candidate is a section visit iff that count is exactly the pair +-v and
    its hit time lies in the closed time polytope.
    """
    from . import bestapprox as ba

    cfg = cfg or ba.EngineConfig(definition=ba.GENERAL, q_bound=math.exp(T))
    cfg = ba.EngineConfig(definition=cfg.definition, q_bound=math.exp(T),
                          mode=cfg.mode, guard=cfg.guard,
                          sign_coordinate=cfg.sign_coordinate, moduli=cfg.moduli)
    dec = space.decomp
    if dec.n == 1:
        records = ba.scan_best_n1(theta, space, cfg)
    else:
        records = ba.enumerate_best_general(theta, space, cfg)
    best_keys = {rec.key(): rec for rec in records}

    st = ba._ScaledTheta(theta, space)
    include_q0 = cfg.definition in (ba.CUBOID, ba.GENERAL)
    D = st.D

    # candidate sweep: every componentwise rounding with ||q|| <= e^T
    qb = Rat(int(math.floor(math.exp(T))))
    n_rad_pow_T = tuple(spec.radius_power(qb) for spec in space.n_norms)
    q_bounds: List[int] = []
    for spec, (a, b) in zip(space.n_norms, st.n_slices):
        if spec.kind == "wsup":
            q_bounds.extend(int(qb / w) for w in spec.weights)
        else:
            q_bounds.extend([_int_ball_bound(spec.radius_power(qb),
                                             spec.power_exponent)] * (b - a))

    # side one: hit times of the engine's nondegenerate records inside J^T
    n_eligible = 0
    for rec in records:
        try:
            t = hit_time(rec, space, strict=True)
        except DegenerateRecord:
            continue
        if jt_contains(space, t, T):
            n_eligible += 1

    # side two: independent sweep; membership in the section is recounted by
    # enumerating the primitive points of each candidate's closed region
    mismatches = []
    n_candidates = 0
    n_hits = 0
    for q in itertools.product(*[range(-bb, bb + 1) for bb in q_bounds]):
        nz = [c for c in q if c != 0]
        if not nz or nz[-1] < 0:
            continue
        npw = st.n_block_powers(q)
        if any(pw > rp for pw, rp in zip(npw, n_rad_pow_T)):
            continue
        p = st.round_p(q)
        n_candidates += 1
        coords = st.m_scaled_coords(p, q)
        mpw_unscaled = tuple(Rat(pw) / Rat(D) ** spec.power_exponent
                             for pw, spec in zip(st.m_block_powers(coords),
                                                 space.m_norms))
        pts = theta_region_points(theta, space, mpw_unscaled,
                                  [Rat(pw) for pw in npw],
                                  include_q_zero=include_q0, limit=limit)
        vfull = tuple(p) + tuple(q)
        vneg = tuple(-c for c in vfull)
        indep_best = len(pts) == 2 and set(pts) == {vfull, vneg}
        key = ba._sign_normalize(st, p, q, cfg.sign_coordinate)[:2]
        engine_best = (key[0], key[1]) in best_keys
        if indep_best != engine_best:
            mismatches.append({"p": p, "q": q,
                               "engine": engine_best, "independent": indep_best,
                               "region_points": len(pts)})
            continue
        if indep_best:
            cand = ba._build_record(st, p, q, 0, cfg.sign_coordinate)
            try:
                t = hit_time(cand, space, strict=True)
            except DegenerateRecord:
                continue
            if jt_contains(space, t, T):
                n_hits += 1

    return CorrespondenceReport(
        T=T, definition=cfg.definition,
        n_candidates=n_candidates, n_best=len(records),
        n_eligible=n_eligible, n_hits=n_hits,
        match=not mismatches and n_hits == n_eligible, mismatches=mismatches)
