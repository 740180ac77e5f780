"""Best-approximation engines.

Six routes produce the same objects at different scales:

* ``cf_convergents``      certified continued fractions (1x1 only),
* ``scan_best_n1``        direct scan over q = 1..q_bound for n = 1,
* ``enumerate_best_general``  block-region enumeration for any n,
* ``frontier_best_cuboid``    multiplicative-cell enumeration that reaches
                              astronomically large q for the fully split
                              cuboid semantics with n = 1,
* ``successor_best_norm``     Minkowski-bounded successor search for the
                              norm-cylinder semantics with n = 1,
* ``oracle_best``         an exhaustive, definitionally exact oracle used to
                          cross-check every other route.

A candidate (p, q) is a best approximation when the only primitive lattice
vectors inside its closed product region are +-(p + theta q, q); closed
boundaries make rational ties resolve deterministically.  All selection
arithmetic is exact: entries are scaled by a common denominator so block
comparisons reduce to integer comparisons, and the guarded-float mode only
short-circuits comparisons that are provably outside the guard band.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from .numerics import (DEFAULT_GUARD, PrecisionExhausted, Rat,
                       RefinementExhausted, UndecidedComparison, int_root,
                       log_fraction_or_ninf, log_int)
from .geometry import SUP, ApproxSpace, NormSpec

CUBOID = "cuboid"
NORM = "norm"
GENERAL = "general"

DEFINITIONS = (CUBOID, NORM, GENERAL)


class DegenerateBlock(Exception):
    """A block norm vanished where a direction vector was required."""


# ---------------------------------------------------------------------------
# theta


@dataclass(frozen=True)
class Theta:
    """Exact rational truncation of a target matrix, with refinement hooks.

    ``entries[i][j]`` is the lower endpoint; the sampled real lies in
    ``[entries[i][j], entries[i][j] + errs[i][j]]``.  Engines treat the
    truncation itself as the object of study; the certified continued
    fraction route consults the interval.
    """

    entries: Tuple[Tuple[Rat, ...], ...]
    errs: Tuple[Tuple[Rat, ...], ...]
    provenance: str = "explicit"
    budget: int = 0
    source: Optional[object] = None
    draw: int = 0
    cf_stream: Optional[Callable[[], Iterator[int]]] = None

    @classmethod
    def explicit(cls, rows) -> "Theta":
        entries = tuple(tuple(Rat(x) for x in row) for row in rows)
        errs = tuple((Rat(0),) * len(row) for row in entries)
        return cls(entries=entries, errs=errs)

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return len(self.entries[0])

    @property
    def is_exact(self) -> bool:
        return all(e == 0 for row in self.errs for e in row)

    def midpoint(self, i: int, j: int) -> Rat:
        return self.entries[i][j] + self.errs[i][j] / 2


# ---------------------------------------------------------------------------
# records


@dataclass
class BestApprox:
    """One best approximation: integer data plus derived magnitudes.

    Logs are the primary float view; convergent denominators overflow doubles
    long before they stop being interesting.  ``degenerate`` marks records
    with a vanishing block norm (exact hits), which the statistics skip.
    """

    p: Tuple[int, ...]
    q: Tuple[int, ...]
    index: int
    m_norms: Tuple[float, ...]
    n_norms: Tuple[float, ...]
    m_log_norms: Tuple[float, ...]
    n_log_norms: Tuple[float, ...]
    error: float
    log_error: float
    q_norm: float
    log_q_norm: float
    zero_m_blocks: Tuple[int, ...] = ()
    zero_n_blocks: Tuple[int, ...] = ()
    degenerate: bool = False
    m_powers: Optional[Tuple[Rat, ...]] = None
    n_powers: Optional[Tuple[Rat, ...]] = None
    t: Optional[Tuple[float, ...]] = None
    proj: Optional[Tuple[Tuple[float, ...], ...]] = None
    residues: Optional[Dict[int, Tuple[int, ...]]] = None

    def key(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return (self.p, self.q)


@dataclass(frozen=True)
class EngineConfig:
    definition: str = GENERAL
    q_bound: float = 10.0
    mode: str = "exact"  # "exact" | "float"
    guard: float = DEFAULT_GUARD
    sign_coordinate: Optional[int] = None  # 1-based in (p + theta q, q); default d
    moduli: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.definition not in DEFINITIONS:
            raise ValueError(f"unknown definition {self.definition!r}")
        if self.q_bound < 1:
            raise ValueError("q_bound must be >= 1")
        if self.mode not in ("exact", "float"):
            raise ValueError("mode must be 'exact' or 'float'")


# ---------------------------------------------------------------------------
# scaled integer model


class _ScaledTheta:
    """Integer model: with D the common denominator, the m-part of
    (p + theta q, q) scales to D*p_i + sum_j N[i][j] q_j."""

    def __init__(self, theta: Theta, space: ApproxSpace):
        dec = space.decomp
        if theta.m != dec.m or theta.n != dec.n:
            raise ValueError("theta shape does not match the decomposition")
        D = 1
        for row in theta.entries:
            for x in row:
                D = D * x.denominator // gcd(D, x.denominator)
        self.D = D
        self.N = [[int(x * D) for x in row] for row in theta.entries]
        self.space = space
        self.dec = dec
        self.m_slices = dec.m_slices()
        self.n_slices = dec.n_slices()
        # scaled power of the cheapest nonzero integer vector, per m-block
        self.unit_powers = tuple(
            spec.min_unit_power(dim) * Rat(D) ** spec.power_exponent
            for spec, dim in zip(space.m_norms, dec.m_parts))

    def m_scaled_coords(self, p: Sequence[int], q: Sequence[int]) -> Tuple[int, ...]:
        return tuple(self.D * p[i] + sum(self.N[i][j] * q[j] for j in range(self.dec.n))
                     for i in range(self.dec.m))

    def round_p(self, q: Sequence[int]) -> Tuple[int, ...]:
        """Componentwise nearest p (ties toward -inf); minimizes every block norm."""
        D = self.D
        out = []
        for i in range(self.dec.m):
            r = sum(self.N[i][j] * q[j] for j in range(self.dec.n))
            out.append(-((2 * r + D) // (2 * D)))
        return tuple(out)

    def m_block_powers(self, coords: Sequence[int]):
        return tuple(spec.power(coords[a:b])
                     for spec, (a, b) in zip(self.space.m_norms, self.m_slices))

    def n_block_powers(self, q: Sequence[int]):
        return tuple(spec.power(q[a:b])
                     for spec, (a, b) in zip(self.space.n_norms, self.n_slices))

    def has_tie(self, coords: Sequence[int]) -> bool:
        # a coordinate exactly halfway between integers admits a second rounding
        return any(2 * abs(c) == self.D for c in coords)

    def q_zero_competitor(self, m_powers) -> bool:
        """True when some (p', 0) primitive vector fits the m-radii."""
        return any(pw >= upw for pw, upw in zip(m_powers, self.unit_powers))


def _float_powers(powers, scale_pow) -> Tuple[float, ...]:
    return tuple(float(Fraction(pw) / sp) if sp != 1 else float(pw)
                 for pw, sp in zip(powers, scale_pow))


class _Dominance:
    """Componentwise <= with the guarded-float contract."""

    def __init__(self, mode: str, guard: float):
        self.exact = mode == "exact"
        self.guard = guard
        self.escalations = 0

    def le(self, a_float: float, a_exact, b_float: float, b_exact) -> bool:
        if self.exact:
            return a_exact <= b_exact
        d = a_float - b_float
        if d < -self.guard:
            return True
        if d > self.guard:
            return False
        self.escalations += 1
        return a_exact <= b_exact

    def vec_le(self, a_floats, a_exacts, b_floats, b_exacts) -> bool:
        return all(self.le(af, ae, bf, be)
                   for af, ae, bf, be in zip(a_floats, a_exacts, b_floats, b_exacts))


# ---------------------------------------------------------------------------
# record construction


def _sign_normalize(st: _ScaledTheta, p, q, sign_coordinate: Optional[int]):
    dec = st.dec
    j = sign_coordinate if sign_coordinate is not None else dec.d
    if not 1 <= j <= dec.d:
        raise ValueError("sign coordinate out of range")
    coords = st.m_scaled_coords(p, q)
    val = coords[j - 1] if j <= dec.m else q[j - 1 - dec.m]
    if val == 0:
        full = list(coords) + [st.D * qq for qq in q]
        nz = [c for c in full if c != 0]
        val = nz[-1] if nz else 1
    if val < 0:
        p = tuple(-x for x in p)
        q = tuple(-x for x in q)
        coords = tuple(-c for c in coords)
    return p, q, coords


def _build_record(st: _ScaledTheta, p, q, index: int,
                  sign_coordinate: Optional[int] = None,
                  moduli: Sequence[int] = ()) -> BestApprox:
    space, dec = st.space, st.dec
    p, q, coords = _sign_normalize(st, p, q, sign_coordinate)
    D = Rat(st.D)
    m_powers = tuple(Rat(pw) / D ** spec.power_exponent
                     for pw, spec in zip(st.m_block_powers(coords), space.m_norms))
    n_powers = tuple(Rat(pw) for pw in st.n_block_powers(q))
    m_logs = tuple(log_fraction_or_ninf(pw) / spec.power_exponent
                   for pw, spec in zip(m_powers, space.m_norms))
    n_logs = tuple(log_fraction_or_ninf(pw) / spec.power_exponent
                   for pw, spec in zip(n_powers, space.n_norms))

    def as_norm(pw, log_v, spec):
        if log_v == -math.inf:
            return 0.0
        if abs(log_v) < 200.0:
            return spec.norm_from_power(float(pw))
        return math.exp(log_v)

    m_norms = tuple(as_norm(pw, v, spec)
                    for pw, v, spec in zip(m_powers, m_logs, space.m_norms))
    n_norms = tuple(as_norm(pw, v, spec)
                    for pw, v, spec in zip(n_powers, n_logs, space.n_norms))
    log_error = sum(dim * v for dim, v in zip(dec.m_parts, m_logs)) + \
        sum(dim * v for dim, v in zip(dec.n_parts, n_logs))
    zero_m = tuple(i for i, v in enumerate(m_logs) if v == -math.inf)
    zero_n = tuple(j for j, v in enumerate(n_logs) if v == -math.inf)
    log_q = max(n_logs)
    q_norm = max(n_norms)
    residues = None
    if moduli:
        residues = {int(N): tuple(x % N for x in p) + tuple(x % N for x in q)
                    for N in moduli}
    return BestApprox(
        p=p, q=q, index=index,
        m_norms=m_norms, n_norms=n_norms,
        m_log_norms=m_logs, n_log_norms=n_logs,
        error=math.exp(log_error) if log_error > -math.inf else 0.0,
        log_error=log_error,
        q_norm=q_norm,
        log_q_norm=log_q,
        zero_m_blocks=zero_m, zero_n_blocks=zero_n,
        degenerate=bool(zero_m or zero_n),
        m_powers=m_powers, n_powers=n_powers,
        residues=residues)


def error_of(theta: Theta, p, q, space: ApproxSpace) -> float:
    """Product of block norms raised to the block dimensions."""
    st = _ScaledTheta(theta, space)
    rec = _build_record(st, tuple(p), tuple(q), 0)
    return rec.error


def proj_of(theta: Theta, p, q, space: ApproxSpace) -> Tuple[Tuple[float, ...], ...]:
    """Tuple of per-block unit vectors of (p + theta q, q)."""
    st = _ScaledTheta(theta, space)
    dec = space.decomp
    coords = st.m_scaled_coords(p, q)
    vx = [Fraction(c, st.D) for c in coords]
    vy = list(q)
    blocks = [vx[a:b] for a, b in dec.m_slices()] + \
             [vy[a:b] for a, b in dec.n_slices()]
    specs = list(space.m_norms) + list(space.n_norms)
    out = []
    for idx, (spec, blk) in enumerate(zip(specs, blocks)):
        nrm = spec.norm(blk)
        if nrm == 0.0:
            raise DegenerateBlock(f"block {idx} of (p + theta q, q) vanished")
        out.append(tuple(float(c) / nrm for c in blk))
    return tuple(out)


# ---------------------------------------------------------------------------
# continued fractions (certified)


@dataclass
class CFResult:
    quotients: List[int]
    convergents: List[Tuple[int, int]]
    certified: int
    exact: bool = False
    split_index: Optional[int] = None  # long-form doubled convergent, exact case
    theta: Optional[Theta] = None      # the (possibly refined) sample actually used


def _euclid_quotients(num: int, den: int) -> List[int]:
    out = []
    while den:
        a = num // den
        out.append(a)
        num, den = den, num - a * den
    return out


def _interval_quotients(lo: Tuple[int, int], hi: Tuple[int, int],
                        max_terms: int) -> List[int]:
    """Quotients shared by every real in [lo, hi]; stops at the first split."""
    ln, ld = lo
    hn, hd = hi
    out: List[int] = []
    while len(out) < max_terms:
        al = ln // ld
        ah = hn // hd
        if al != ah:
            break
        out.append(al)
        fl = ln - al * ld
        fh = hn - ah * hd
        if fl == 0 or fh == 0:
            break
        # x -> 1/(x - a) reverses the interval
        ln, ld, hn, hd = hd, fh, ld, fl
    return out


def _convergents_from_quotients(quots: Sequence[int]) -> List[Tuple[int, int]]:
    out = []
    pm1, pm2 = 1, 0
    qm1, qm2 = 0, 1
    for a in quots:
        pm1, pm2 = a * pm1 + pm2, pm1
        qm1, qm2 = a * qm1 + qm2, qm1
        out.append((pm1, qm1))
    return out


def cf_convergents(theta: Theta, l_max: int, strict: bool = True) -> CFResult:
    """Certified convergents of a 1x1 theta.

    Exact rationals use the long form (final quotient split as a-1, 1).
    Interval input emits quotients while both endpoints agree, refining the
    sample as needed; PrecisionExhausted signals an unrefinable shortfall.
    """
    if theta.m != 1 or theta.n != 1:
        raise ValueError("cf_convergents needs a 1x1 theta")
    if l_max < 1:
        raise ValueError("l_max must be >= 1")

    if theta.cf_stream is not None:
        gen = theta.cf_stream()
        quots = [next(gen) for _ in range(l_max)]
        return CFResult(quots, _convergents_from_quotients(quots), l_max,
                        theta=theta)

    x = theta.entries[0][0]
    err = theta.errs[0][0]
    if err == 0:
        quots = _euclid_quotients(x.numerator, x.denominator)
        split = None
        if len(quots) >= 2 and quots[-1] >= 2:
            quots = quots[:-1] + [quots[-1] - 1, 1]
        if len(quots) >= 2:
            split = len(quots) - 2
        quots = quots[:l_max]
        if split is not None and split >= len(quots):
            split = None
        convs = _convergents_from_quotients(quots)
        return CFResult(quots, convs, len(convs), exact=True, split_index=split,
                        theta=theta)

    th = theta
    while True:
        lo = th.entries[0][0]
        hi = lo + th.errs[0][0]
        quots = _interval_quotients(
            (lo.numerator, lo.denominator), (hi.numerator, hi.denominator), l_max)
        if len(quots) >= l_max:
            break
        if th.source is None:
            if strict:
                raise PrecisionExhausted(
                    f"certified {len(quots)} of {l_max} convergents; no refinement source")
            break
        from . import sampling  # deferred: sampling builds on this module
        try:
            th = sampling.refine_sample(th, max(th.budget, 32))
        except RefinementExhausted as exc:
            if strict:
                raise PrecisionExhausted(
                    f"certified {len(quots)} of {l_max} convergents: {exc}") from exc
            break
    convs = _convergents_from_quotients(quots)
    return CFResult(quots, convs, len(convs), theta=th)


_CF_TAIL_TERMS = 50


def _cf_tail_value(quots: Sequence[int], start: int) -> Optional[float]:
    """Float value of the tail [a_start; a_start+1, ...]; None when empty."""
    end = min(len(quots), start + _CF_TAIL_TERMS)
    if start >= end:
        return None
    t = float(quots[end - 1])
    for j in range(end - 2, start - 1, -1):
        t = quots[j] + 1.0 / t
    return t


def best_records_from_cf(theta: Theta, space: ApproxSpace, l_max: int,
                         strict: bool = True,
                         moduli: Sequence[int] = ()) -> Tuple[List[BestApprox], CFResult]:
    """Convergents converted to best-approximation records (1x1 case).

    Convergent 0 is kept only when it beats its rounding rival (a_1 >= 2);
    for exact rationals the long-form doubled convergent is a closed-region
    tie and is dropped.  Records carry p with the sign of -p_cf so that
    p + theta q is the small quantity.  The residual |theta q_l - p_l| comes
    from the tail identity 1/(q_l t_{l+1} + q_{l-1}), with the tail value
    evaluated over the next certified quotients; that is exact to double
    precision without touching the full-precision sample again.
    """
    if space.decomp.m != 1 or space.decomp.n != 1:
        raise ValueError("cf records need m = n = 1")
    cf = cf_convergents(theta, l_max + _CF_TAIL_TERMS + 3, strict=strict)
    convs = cf.convergents
    quots = cf.quotients
    keep = list(range(len(convs)))
    if len(quots) >= 2 and quots[1] == 1:
        keep = keep[1:]
    if cf.split_index is not None:
        keep = [l for l in keep if l != cf.split_index]
    keep = keep[:l_max]

    records = []
    for idx, l in enumerate(keep):
        pc, qc = convs[l]
        qprev = convs[l - 1][1] if l >= 1 else 0
        tail = _cf_tail_value(quots, l + 1)
        n_log = log_int(qc)
        if tail is None:
            m_log = -math.inf  # exact rational endpoint: theta q = p
        else:
            # |theta q - p| = 1/(q t + q_prev) = (1/q) / (t + q_prev/q)
            if qprev == 0:
                rho = 0.0
            elif qc < 2 ** 53:
                rho = qprev / qc
            else:
                rho = math.exp(log_int(qprev) - n_log)
            m_log = -(n_log + math.log(tail + rho))
        log_error = m_log + n_log
        records.append(BestApprox(
            p=(-pc,), q=(qc,), index=idx,
            m_norms=(math.exp(m_log) if m_log > -700 else 0.0,),
            n_norms=(float(qc) if qc < 2 ** 60 else math.exp(min(n_log, 700)),),
            m_log_norms=(m_log,), n_log_norms=(n_log,),
            error=math.exp(log_error) if log_error > -700 else 0.0,
            log_error=log_error,
            q_norm=float(qc) if qc < 2 ** 60 else math.exp(min(n_log, 700)),
            log_q_norm=n_log,
            zero_m_blocks=(0,) if m_log == -math.inf else (),
            degenerate=m_log == -math.inf,
            residues={int(N): ((-pc) % N, qc % N) for N in moduli} or None))
    return records, cf


# ---------------------------------------------------------------------------
# scanning engines


def scan_best_n1(theta: Theta, space: ApproxSpace, cfg: EngineConfig) -> List[BestApprox]:
    """Scan q = 1..q_bound for n = 1 under any of the three definitions."""
    dec = space.decomp
    if dec.n != 1:
        raise ValueError("scan_best_n1 needs n = 1")
    _check_definition(space, cfg)
    st = _ScaledTheta(theta, space)
    dom = _Dominance(cfg.mode, cfg.guard)
    include_q0 = cfg.definition in (CUBOID, GENERAL)
    scale_pow = tuple(Rat(st.D) ** spec.power_exponent for spec in space.m_norms)

    frontier: List[Tuple[Tuple[float, ...], tuple]] = []
    out: List[BestApprox] = []
    qmax = int(cfg.q_bound)
    for q in range(1, qmax + 1):
        p = st.round_p((q,))
        coords = st.m_scaled_coords(p, (q,))
        powers = st.m_block_powers(coords)
        fpowers = _float_powers(powers, scale_pow)
        dominated = any(
            dom.vec_le(ff, fe, fpowers, powers) for ff, fe in frontier)
        if not dominated:
            emit = (not st.has_tie(coords)
                    and gcd(*(abs(x) for x in p + (q,))) == 1
                    and not (include_q0 and st.q_zero_competitor(powers)))
            if emit:
                out.append(_build_record(st, p, (q,), len(out),
                                         cfg.sign_coordinate, cfg.moduli))
            frontier = [(ff, fe) for ff, fe in frontier
                        if not dom.vec_le(fpowers, powers, ff, fe)]
            frontier.append((fpowers, powers))
    return out


def _check_definition(space: ApproxSpace, cfg: EngineConfig) -> None:
    dec = space.decomp
    if cfg.definition == NORM and (dec.k != 1 or dec.r != 1):
        raise ValueError("the norm definition uses the trivial decomposition")
    if cfg.definition == CUBOID and any(
            part != 1 for part in dec.m_parts + dec.n_parts):
        raise ValueError("the cuboid definition uses the full block split")


def _norm_le(pw_a, exp_a: int, pw_b, exp_b: int) -> bool:
    """Exact comparison of norm values given as (power, exponent) pairs."""
    if exp_a == exp_b:
        return pw_a <= pw_b
    return pw_a ** exp_b <= pw_b ** exp_a


def _q_norm_key(n_powers, specs):
    """Exact sort key for ||q|| = max block norm; cmp via cross powers."""
    best = 0
    for i in range(1, len(n_powers)):
        if not _norm_le(n_powers[i], specs[i].power_exponent,
                        n_powers[best], specs[best].power_exponent):
            best = i
    return (n_powers[best], specs[best].power_exponent)


def enumerate_best_general(theta: Theta, space: ApproxSpace, cfg: EngineConfig,
                           max_candidates: int = 500_000) -> List[BestApprox]:
    """Enumerate q in the n-block ball of radius q_bound; all-pairs dominance."""
    _check_definition(space, cfg)
    dec = space.decomp
    st = _ScaledTheta(theta, space)
    dom = _Dominance(cfg.mode, cfg.guard)
    include_q0 = cfg.definition in (CUBOID, GENERAL)
    qb = Rat(cfg.q_bound) if cfg.q_bound == int(cfg.q_bound) else Rat.from_float(float(cfg.q_bound))
    n_rad_pow = tuple(spec.radius_power(qb) for spec in space.n_norms)
    m_scale_pow = tuple(Rat(st.D) ** spec.power_exponent for spec in space.m_norms)

    # integer bounding box of the q-ball
    bounds: List[int] = []
    for spec, (a, b) in zip(space.n_norms, st.n_slices):
        bounds.extend(int(math.floor(c + 1e-12))
                      for c in spec.coord_bounds(float(qb), b - a))
    ranges = [range(-bb, bb + 1) for bb in bounds]

    cands = []
    for q in itertools.product(*ranges):
        nz = [c for c in q if c != 0]
        if not nz or nz[-1] < 0:
            continue  # one representative per +-pair
        npw = st.n_block_powers(q)
        if any(pw > rp for pw, rp in zip(npw, n_rad_pow)):
            continue
        p = st.round_p(q)
        coords = st.m_scaled_coords(p, q)
        mpw = st.m_block_powers(coords)
        cands.append((q, p, coords, mpw, npw))
        if len(cands) > max_candidates:
            raise ValueError("candidate region too large for the general engine")

    nf_all = [tuple(float(pw) for pw in c[4]) for c in cands]
    mf_all = [_float_powers(c[3], m_scale_pow) for c in cands]

    out = []
    for i, (q, p, coords, mpw, npw) in enumerate(cands):
        if st.has_tie(coords):
            continue
        if gcd(*(abs(x) for x in p + q)) != 1:
            continue
        if include_q0 and st.q_zero_competitor(mpw):
            continue
        beaten = False
        for j, (qj, pj, cj, mpwj, npwj) in enumerate(cands):
            if j == i:
                continue
            if dom.vec_le(mf_all[j], mpwj, mf_all[i], mpw) and \
               dom.vec_le(nf_all[j], npwj, nf_all[i], npw):
                beaten = True
                break
        if not beaten:
            out.append((q, p, npw))

    import functools

    def cmp(a, b):
        (qa, pa, npa), (qb_, pb, npb) = a, b
        ka = _q_norm_key(npa, space.n_norms)
        kb = _q_norm_key(npb, space.n_norms)
        if ka != kb:
            return -1 if not _norm_le(kb[0], kb[1], ka[0], ka[1]) else 1
        if npa != npb:
            return -1 if tuple(npa) < tuple(npb) else 1
        return -1 if qa < qb_ else (1 if qa > qb_ else 0)

    out.sort(key=functools.cmp_to_key(cmp))
    return [_build_record(st, p, q, idx, cfg.sign_coordinate, cfg.moduli)
            for idx, (q, p, _) in enumerate(out)]


# ---------------------------------------------------------------------------
# exhaustive oracle


def _coord_radius_bounds(spec: NormSpec, dim: int, radius_power):
    """Integer per-coordinate bounds for scaled vectors inside the ball."""
    e = spec.power_exponent
    if spec.kind == "wsup":
        return [int(Fraction(radius_power) / w) for w in spec.weights]
    if e == 1:
        return [int(radius_power)] * dim
    return [int_root(int(radius_power), e)] * dim


def _region_has_other(st: _ScaledTheta, p, q, m_rad_pow, n_rad_pow,
                      include_q0: bool) -> bool:
    """Does any integer vector other than 0 and +-(p, q) fit the region?"""
    from .dynamics import _int_ball_bound

    dec, D = st.dec, st.D
    p = tuple(p)
    q = tuple(q)
    q_bounds: List[int] = []
    for spec, (a, b), rp in zip(st.space.n_norms, st.n_slices, n_rad_pow):
        if spec.kind == "wsup":
            q_bounds.extend(int(Fraction(rp) / w) for w in spec.weights)
        else:
            q_bounds.extend([_int_ball_bound(rp, spec.power_exponent)] * (b - a))
    if any(bb < 0 for bb in q_bounds):
        return False
    q_universe = sorted(
        itertools.product(*[range(-bb, bb + 1) for bb in q_bounds]),
        key=lambda v: (max((abs(c) for c in v), default=0), v))
    for q2 in q_universe:
        if not include_q0 and all(c == 0 for c in q2):
            continue
        npw = st.n_block_powers(q2)
        if any(pw > rp for pw, rp in zip(npw, n_rad_pow)):
            continue
        # per-coordinate integer ranges for p2 inside the m-radii
        ranges = []
        ok = True
        ci = 0
        for spec, (a, b) in zip(st.space.m_norms, st.m_slices):
            cb = _coord_radius_bounds(spec, b - a, m_rad_pow[ci])
            for c in range(a, b):
                t = sum(st.N[c][j] * q2[j] for j in range(dec.n))
                lo = -((cb[c - a] + t) // D)  # ceil((-cb - t)/D)
                hi = (cb[c - a] - t) // D
                if lo > hi:
                    ok = False
                    break
                ranges.append(range(lo, hi + 1))
            if not ok:
                break
            ci += 1
        if not ok:
            continue
        for p2 in itertools.product(*ranges):
            if all(c == 0 for c in p2) and all(c == 0 for c in q2):
                continue
            if (p2 == p and q2 == q) or \
               (p2 == tuple(-x for x in p) and q2 == tuple(-x for x in q)):
                continue
            coords2 = st.m_scaled_coords(p2, q2)
            mpw2 = st.m_block_powers(coords2)
            if all(pw <= rp for pw, rp in zip(mpw2, m_rad_pow)):
                return True
    return False


def oracle_best(theta: Theta, space: ApproxSpace, box: int,
                cfg: EngineConfig) -> List[BestApprox]:
    """Exhaustive ground truth: test every primitive (p, q) in [-box, box]^d.

    For each candidate, every lattice point of its closed region is visited
    (full double loop); no shortcut shares logic with the scan engines.
    """
    _check_definition(space, cfg)
    dec = space.decomp
    st = _ScaledTheta(theta, space)
    include_q0 = cfg.definition in (CUBOID, GENERAL)
    B = int(box)

    found = []
    for q in itertools.product(range(-B, B + 1), repeat=dec.n):
        nz = [c for c in q if c != 0]
        if not nz or nz[-1] < 0:
            continue
        npw = st.n_block_powers(q)
        for p in itertools.product(range(-B, B + 1), repeat=dec.m):
            if gcd(*(abs(x) for x in p + q)) != 1:
                continue
            coords = st.m_scaled_coords(p, q)
            mpw = st.m_block_powers(coords)
            if _region_has_other(st, p, q, mpw, npw, include_q0):
                continue
            found.append((q, p, npw))

    import functools

    def cmp(a, b):
        (qa, pa, npa), (qb_, pb, npb) = a, b
        ka = _q_norm_key(npa, space.n_norms)
        kb = _q_norm_key(npb, space.n_norms)
        if ka != kb:
            return -1 if not _norm_le(kb[0], kb[1], ka[0], ka[1]) else 1
        if npa != npb:
            return -1 if tuple(npa) < tuple(npb) else 1
        return -1 if qa < qb_ else (1 if qa > qb_ else 0)

    found.sort(key=functools.cmp_to_key(cmp))
    return [_build_record(st, p, q, idx, cfg.sign_coordinate, cfg.moduli)
            for idx, (q, p, _) in enumerate(found)]


# ---------------------------------------------------------------------------
# multiplicative-cell frontier engine (fully split cuboid, n = 1)


def _min_orbit_distance(N: int, D: int, q_max: int) -> Rat:
    """min over 1 <= q <= q_max of dist(q*N/D, Z), via the convergents of N/D."""
    num, den = N % D, D
    best: Optional[Rat] = None
    pm1, pm2, qm1, qm2 = 1, 0, 0, 1
    for a in _euclid_quotients(num, den):
        pm1, pm2 = a * pm1 + pm2, pm1
        qm1, qm2 = a * qm1 + qm2, qm1
        if qm1 > q_max:
            break
        if qm1 >= 1:
            best = abs(Rat(num, den) * qm1 - pm1)
            if best == 0:
                break
    if best is None:
        best = abs(Rat(num, den) - round(Rat(num, den)))
    return best


_CELL_STEP = 2  # cells cover d in (2^-(a+2), 2^-a]


def frontier_best_cuboid(theta: Theta, space: ApproxSpace, q_max: int,
                         cfg: Optional[EngineConfig] = None) -> List[BestApprox]:
    """Cuboid best approximations for n = 1 up to astronomically large q.

    Best candidates satisfy Error <= epsilon, so they live in the
    multiplicative region prod |p_i + theta_i q| * q <= 1.  The region is
    covered by dyadic cells; each cell's points are recovered by reducing an
    integer basis (LLL) and sweeping the small coefficient box, and the
    Pareto staircase then applies the closed-region rule exactly.
    """
    dec = space.decomp
    if dec.n != 1 or any(part != 1 for part in dec.m_parts + dec.n_parts):
        raise ValueError("frontier engine covers the fully split cuboid with n = 1")
    if any(spec.kind != SUP for spec in space.m_norms + space.n_norms):
        raise ValueError("frontier engine expects sup norms on 1-dim blocks")
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    cfg = cfg or EngineConfig(definition=CUBOID, q_bound=q_max)
    st = _ScaledTheta(theta, space)
    m, D = dec.m, st.D
    Ns = [st.N[i][0] for i in range(m)]

    from .dynamics import lll_reduce  # lattice plumbing lives with the dynamics

    ladders = []
    for i in range(m):
        dmin = _min_orbit_distance(Ns[i], D, q_max)
        if dmin == 0:
            raise ValueError(
                "a theta row is an exact rational hit inside the q range; "
                "use scan_best_n1 for degenerate rows")
        err = theta.errs[i][0]
        if err and 4 * q_max * err >= dmin:
            raise PrecisionExhausted(
                "sample truncation is too coarse for this q range; "
                "refine the draw before enumerating")
        steps = [1]
        while Rat(1, 2 ** (steps[-1] + _CELL_STEP)) >= dmin:
            steps.append(steps[-1] + _CELL_STEP)
        ladders.append(steps)

    cands: Dict[Tuple[Tuple[int, ...], int], Tuple[int, ...]] = {}
    seed = None
    for a_vec in itertools.product(*ladders):
        seed = _collect_cell(st, Ns, a_vec, q_max, cands, seed)

    ordered = sorted(((q, p, nums) for (p, q), nums in cands.items()),
                     key=lambda t: t[0])
    best = _pareto_filter(ordered, D, m)

    out = []
    for q, p, nums in best:
        out.append(_build_record(st, p, (q,), len(out),
                                 cfg.sign_coordinate, cfg.moduli))
    return out


def _collect_cell(st: _ScaledTheta, Ns, a_vec, q_max: int, cands,
                  seed: Optional[List[List[int]]] = None) -> List[List[int]]:
    """Gather integer points of one multiplicative cell into ``cands``.

    Scaled coordinates are y_i = 2^a_i (p_i D + N_i q) for i < m and
    y_m = s q; the cell is |y_i| <= D (ownership: 4|y_i| > D) and
    0 < y_m <= s q_cap.  The adjacent cell's change of basis warm-starts
    the reduction, and the sweep walks the reduced basis incrementally, so
    each visited point costs a handful of big-integer additions.
    """
    from .dynamics import lll_reduce

    m, D = len(Ns), st.D
    q_cap = min(q_max, 2 ** (sum(a_vec) + m * _CELL_STEP))
    s = max(1, (2 * D) // q_cap)
    cols = []
    for i in range(m):
        col = [0] * (m + 1)
        col[i] = (2 ** a_vec[i]) * D
        cols.append(col)
    qcol = [(2 ** a_vec[i]) * Ns[i] for i in range(m)] + [s]
    cols.append(qcol)

    n1 = m + 1
    if seed is not None:
        cols = [[sum(cols[i][row] * seed[i][j] for i in range(n1))
                 for row in range(n1)] for j in range(n1)]
    reduced, U = lll_reduce(cols)
    if seed is not None:
        U = [[sum(seed[i][k2] * U[k2][j] for k2 in range(n1))
              for j in range(n1)] for i in range(n1)]

    inv = _fraction_inverse(reduced)
    box = [D] * m + [s * q_cap]
    bounds = [int(sum(abs(c) * bb for c, bb in zip(row, box))) + 1 for row in inv]
    total = 1
    for b in bounds:
        total *= 2 * b + 1
    if total > 400_000:
        raise ValueError("cell coefficient box exploded; basis reduction failed")

    n1 = m + 1
    base = [0] * n1
    err_cap = D ** m
    sweep = [range(-b, b + 1) for b in bounds]
    last_col = reduced[n1 - 1]
    for u_outer in itertools.product(*sweep[:-1]):
        y = [sum(reduced[j][i] * u_outer[j] for j in range(n1 - 1))
             + sweep[-1][0] * last_col[i] for i in range(n1)]
        for _u in sweep[-1]:
            y0 = y
            y = [a + b for a, b in zip(y, last_col)]
            ym = y0[n1 - 1]
            if ym <= 0 or ym > s * q_cap or ym % s:
                continue
            ok = True
            for i in range(m):
                ai = abs(y0[i])
                if ai > D or (ai << _CELL_STEP) <= D:
                    ok = False
                    break
            if not ok:
                continue
            q = ym // s
            if q > q_max:
                continue
            err_acc = q
            nums = []
            for i in range(m):
                v = y0[i] >> a_vec[i]
                nums.append(v)
                err_acc *= abs(v)
            if err_acc > err_cap:  # Error <= epsilon = 1
                continue
            p = tuple((nums[i] - Ns[i] * q) // D for i in range(m))
            cands[(p, q)] = tuple(nums)
    return U


def _fraction_inverse(cols):
    """Exact inverse of a small matrix given by columns."""
    n = len(cols)
    a = [[Fraction(cols[j][i]) for j in range(n)] for i in range(n)]
    inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        f = a[col][col]
        a[col] = [x / f for x in a[col]]
        inv[col] = [x / f for x in inv[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return inv


def _pareto_filter(ordered, D: int, m: int):
    """Closed-rule staircase: keep candidates no earlier point dominates."""
    out = []
    if m == 2:
        import bisect
        xs: List[int] = []     # frontier |num_1|, increasing
        ys: List[int] = []     # matching |num_2|, strictly decreasing
        for q, p, nums in ordered:
            x, y = abs(nums[0]), abs(nums[1])
            i = bisect.bisect_right(xs, x)
            dominated = i > 0 and ys[i - 1] <= y
            if dominated:
                continue
            tie = any(2 * abs(v) == D for v in nums)
            prim = gcd(*(abs(c) for c in p + (q,))) == 1
            if not tie and prim:
                out.append((q, p, nums))
            j = i
            while j < len(xs) and ys[j] >= y:
                j += 1
            xs[i:j] = [x]
            ys[i:j] = [y]
        return out

    frontier: List[Tuple[int, ...]] = []
    for q, p, nums in ordered:
        key = tuple(abs(v) for v in nums)
        if any(all(f[i] <= key[i] for i in range(m)) for f in frontier):
            continue
        tie = any(2 * abs(v) == D for v in nums)
        prim = gcd(*(abs(c) for c in p + (q,))) == 1
        if not tie and prim:
            out.append((q, p, nums))
        frontier = [f for f in frontier
                    if not all(key[i] <= f[i] for i in range(m))]
        frontier.append(key)
    return out


# ---------------------------------------------------------------------------
# successive-minima engine (norm cylinder, n = 1, sup norm)


def successor_best_norm(theta: Theta, space: ApproxSpace, max_records: int,
                        cfg: Optional[EngineConfig] = None) -> List[BestApprox]:
    """Norm-cylinder best approximations for n = 1 at astronomically large q.

    Each record is the first q beating the previous sup-distance record, and
    Minkowski's theorem bounds where that successor can hide: a point with
    sup distance < m exists below q ~ (2/m)^m.  One warm-started lattice
    sweep per record therefore replaces the full scan.
    """
    dec = space.decomp
    if dec.n != 1 or dec.k != 1 or dec.r != 1:
        raise ValueError("successor engine covers the norm definition with n = 1")
    if space.m_norms[0].kind != SUP or space.n_norms[0].kind != SUP:
        raise ValueError("successor engine expects sup norms")
    if max_records < 1:
        raise ValueError("max_records must be >= 1")
    cfg = cfg or EngineConfig(definition=NORM, q_bound=1)
    st = _ScaledTheta(theta, space)
    m, D = dec.m, st.D
    Ns = [st.N[i][0] for i in range(m)]

    p = st.round_p((1,))
    coords = st.m_scaled_coords(p, (1,))
    if st.has_tie(coords):
        raise ValueError("theta starts on a rounding tie; use scan_best_n1")
    out = [(tuple(p), 1, max(abs(c) for c in coords))]
    seed = None
    while len(out) < max_records:
        _, q_prev, m_num = out[-1]
        if m_num == 0:
            break  # exact rational hit; no further best approximations
        nxt, seed = _cylinder_successor(st, Ns, q_prev, m_num, seed)
        if nxt is None:
            break
        out.append(nxt)
    return [_build_record(st, p, (q,), idx, cfg.sign_coordinate, cfg.moduli)
            for idx, (p, q, _) in enumerate(out)]


def _cylinder_successor(st: _ScaledTheta, Ns, q_prev: int, m_num: int, seed):
    """Minimal q > q_prev with every |p_i D + N_i q| < m_num, by cell sweep."""
    m, D = len(Ns), st.D
    q_cap = 2 * (2 ** m) * D ** m // m_num ** m + 2
    for _ in range(8):
        best = None
        s = max(1, (2 * m_num) // q_cap)
        cols = []
        for i in range(m):
            col = [0] * (m + 1)
            col[i] = D
            cols.append(col)
        cols.append(list(Ns) + [s])

        from .dynamics import lll_reduce

        n1 = m + 1
        if seed is not None:
            cols = [[sum(cols[i][row] * seed[i][j] for i in range(n1))
                     for row in range(n1)] for j in range(n1)]
        reduced, U = lll_reduce(cols)
        if seed is not None:
            U = [[sum(seed[i][k2] * U[k2][j] for k2 in range(n1))
                  for j in range(n1)] for i in range(n1)]
        seed = U
        inv = _fraction_inverse(reduced)
        box = [m_num] * m + [s * q_cap]
        bounds = [int(sum(abs(c) * bb for c, bb in zip(row, box))) + 1
                  for row in inv]
        total = 1
        for b in bounds:
            total *= 2 * b + 1
        if total > 400_000:
            raise ValueError("successor coefficient box exploded")

        sweep = [range(-b, b + 1) for b in bounds]
        last_col = reduced[n1 - 1]
        for u_outer in itertools.product(*sweep[:-1]):
            y = [sum(reduced[j][i] * u_outer[j] for j in range(n1 - 1))
                 + sweep[-1][0] * last_col[i] for i in range(n1)]
            for _u in sweep[-1]:
                y0 = y
                y = [a + b for a, b in zip(y, last_col)]
                ym = y0[n1 - 1]
                if ym <= s * q_prev or ym % s:
                    continue
                q = ym // s
                if q <= q_prev or q > q_cap:
                    continue
                if best is not None and q >= best[1]:
                    continue
                if all(abs(y0[i]) < m_num for i in range(m)):
                    p = tuple((y0[i] - Ns[i] * q) // D for i in range(m))
                    best = (p, q, max(abs(y0[i]) for i in range(m)))
        if best is not None:
            from math import gcd as _gcd
            assert _gcd(*(abs(c) for c in best[0] + (best[1],))) == 1
            return best, seed
        q_cap *= 4  # boundary ties starved the guarantee; widen and retry
    return None, seed


# ---------------------------------------------------------------------------
# serialization (JSON-lines record stream)


def _json_float(v: float):
    return v if math.isfinite(v) else None


def record_to_dict(rec: BestApprox) -> dict:
    return {
        "p": [str(x) for x in rec.p],
        "q": [str(x) for x in rec.q],
        "index": rec.index,
        "error": _json_float(rec.error),
        "log_error": _json_float(rec.log_error),
        "m_norms": [_json_float(v) for v in rec.m_norms],
        "n_norms": [_json_float(v) for v in rec.n_norms],
        "m_log_norms": [_json_float(v) for v in rec.m_log_norms],
        "n_log_norms": [_json_float(v) for v in rec.n_log_norms],
        "q_norm": _json_float(rec.q_norm),
        "log_q_norm": _json_float(rec.log_q_norm),
        "t": None if rec.t is None else [_json_float(v) for v in rec.t],
        "proj": None if rec.proj is None else [list(b) for b in rec.proj],
        "residues": None if rec.residues is None else
            {str(N): list(v) for N, v in rec.residues.items()},
        "degenerate": rec.degenerate,
    }


def _undo_float(v) -> float:
    return float("-inf") if v is None else float(v)


def record_from_dict(obj: dict) -> BestApprox:
    return BestApprox(
        p=tuple(int(x) for x in obj["p"]),
        q=tuple(int(x) for x in obj["q"]),
        index=int(obj["index"]),
        m_norms=tuple(0.0 if v is None else float(v) for v in obj["m_norms"]),
        n_norms=tuple(0.0 if v is None else float(v) for v in obj["n_norms"]),
        m_log_norms=tuple(_undo_float(v) for v in obj["m_log_norms"]),
        n_log_norms=tuple(_undo_float(v) for v in obj["n_log_norms"]),
        error=0.0 if obj["error"] is None else float(obj["error"]),
        log_error=_undo_float(obj["log_error"]),
        q_norm=0.0 if obj["q_norm"] is None else float(obj["q_norm"]),
        log_q_norm=_undo_float(obj["log_q_norm"]),
        degenerate=bool(obj.get("degenerate", False)),
        zero_m_blocks=tuple(i for i, v in enumerate(obj["m_log_norms"]) if v is None),
        zero_n_blocks=tuple(j for j, v in enumerate(obj["n_log_norms"]) if v is None),
        t=None if obj.get("t") is None else tuple(float(v) for v in obj["t"]),
        proj=None if obj.get("proj") is None else
            tuple(tuple(float(c) for c in b) for b in obj["proj"]),
        residues=None if obj.get("residues") is None else
            {int(N): tuple(int(x) for x in v) for N, v in obj["residues"].items()},
    )
