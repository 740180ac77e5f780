"""Empirical distributions and the limit-law estimators.

Estimators fold over record streams and merge associatively, so partial
results from parallel workers combine without coordination.  Tail summaries
use the last half of the index range; the limits come with no rates, so the
window is a reporting choice, not a tuning knob.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import ApproxSpace

LN2 = math.log(2.0)
LEVY_CONSTANT = math.pi ** 2 / (12.0 * LN2)


@dataclass
class EmpiricalDistribution:
    """Weighted sample set with CDF / histogram / KS queries."""

    samples: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        order = np.argsort(self.samples, kind="mergesort")
        self.samples = np.asarray(self.samples, dtype=float)[order]
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)[order]
            self.weights = w / w.sum()

    @classmethod
    def from_samples(cls, xs: Iterable[float], weights=None) -> "EmpiricalDistribution":
        return cls(np.asarray(list(xs), dtype=float),
                   None if weights is None else np.asarray(list(weights), dtype=float))

    def __len__(self) -> int:
        return len(self.samples)

    def _cum(self) -> np.ndarray:
        if self.weights is None:
            return np.arange(1, len(self.samples) + 1) / len(self.samples)
        return np.cumsum(self.weights)

    def cdf(self, x: float) -> float:
        idx = np.searchsorted(self.samples, x, side="right")
        if idx == 0:
            return 0.0
        return float(self._cum()[idx - 1])

    def mean(self) -> float:
        if self.weights is None:
            return float(np.mean(self.samples))
        return float(np.sum(self.samples * self.weights))

    def histogram(self, edges: Sequence[float]) -> Dict[str, list]:
        counts, edges = np.histogram(self.samples, bins=np.asarray(edges),
                                     weights=self.weights)
        return {"edges": [float(e) for e in edges],
                "counts": [float(c) for c in counts]}

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        if (self.weights is None) != (other.weights is None):
            raise ValueError("cannot merge weighted with unweighted samples")
        w = None
        if self.weights is not None:
            w = np.concatenate([self.weights * len(self.samples),
                                other.weights * len(other.samples)])
        return EmpiricalDistribution(
            np.concatenate([self.samples, other.samples]), w)


def ks_distance(emp: EmpiricalDistribution, cdf: Callable[[float], float]) -> float:
    """sup |F_emp - cdf| over the sample points and their left limits."""
    xs = emp.samples
    if len(xs) == 0:
        raise ValueError("empty sample")
    cum = emp._cum()
    ref = np.array([cdf(float(x)) for x in xs])
    left = np.concatenate([[0.0], cum[:-1]])
    return float(max(np.max(np.abs(cum - ref)), np.max(np.abs(left - ref))))


def dl_reference_cdf(z: float) -> float:
    """Limiting CDF of q_l |theta q_l - p_l| (sign-corrected density).

    Density 1/ln2 on [0, 1/2] and (1/z - 1)/ln2 on (1/2, 1]; the second
    branch integrates the CDF to (1 - z + ln 2z)/ln 2, hitting 1 at z = 1.
    """
    if z <= 0.0:
        return 0.0
    if z <= 0.5:
        return z / LN2
    if z >= 1.0:
        return 1.0
    return (1.0 - z + math.log(2.0 * z)) / LN2


def dl_reference_density(z: float) -> float:
    if z < 0.0 or z > 1.0:
        return 0.0
    if z <= 0.5:
        return 1.0 / LN2
    return (1.0 / z - 1.0) / LN2


# ---------------------------------------------------------------------------
# estimators over record streams


def nondegenerate(records) -> list:
    return [r for r in records if not r.degenerate]


@dataclass
class LevyResult:
    series: List[Tuple[int, float]]     # (l, (log||q_l||)^(k+r-1) / l)
    tail_mean: float
    tail_stderr: float
    power: int

    def final(self) -> float:
        return self.series[-1][1]


def tail_stats(values: Sequence[float]) -> Tuple[float, float]:
    tail = list(values)[len(values) // 2:]
    arr = np.asarray(tail, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, stderr


def levy_series(records, power: Optional[int] = None,
                space: Optional[ApproxSpace] = None) -> LevyResult:
    """Running (log||q_l||)^(k+r-1)/l with a tail summary over the last half."""
    recs = nondegenerate(records)
    if not recs:
        raise ValueError("no nondegenerate records")
    if power is None:
        if space is None:
            raise ValueError("need the power or the space")
        power = space.decomp.k + space.decomp.r - 1
    series = [(i + 1, rec.log_q_norm ** power / (i + 1))
              for i, rec in enumerate(recs)]
    mean, err = tail_stats([v for _, v in series])
    return LevyResult(series, mean, err, power)


def dl_samples(records, s: int = 0, space: Optional[ApproxSpace] = None) -> List[float]:
    """Approximation qualities ||q_{i+s}||^n ||p_i + theta q_i||^m (k = r = 1)."""
    if space is None:
        raise ValueError("space required")
    dec = space.decomp
    if dec.k != 1 or dec.r != 1:
        raise ValueError("the shifted quality law is stated for k = r = 1")
    recs = nondegenerate(records)
    out = []
    for i in range(len(recs) - s):
        lg = dec.n * recs[i + s].log_q_norm + dec.m * recs[i].m_log_norms[0]
        out.append(math.exp(lg) if lg > -math.inf else 0.0)
    return out


def dl_distribution(records, s: int = 0,
                    space: Optional[ApproxSpace] = None) -> EmpiricalDistribution:
    return EmpiricalDistribution.from_samples(dl_samples(records, s, space))


def gap_samples(records) -> List[float]:
    recs = nondegenerate(records)
    return [recs[i + 1].log_q_norm - recs[i].log_q_norm
            for i in range(len(recs) - 1)]


def gap_distribution(records, depth: int = 1):
    """Gap samples log(||q_{l+1}||/||q_l||); joint s-blocks up to ``depth``."""
    gaps = gap_samples(records)
    dist = EmpiricalDistribution.from_samples(gaps)
    joints = {s: [tuple(gaps[i:i + s]) for i in range(len(gaps) - s + 1)]
              for s in range(2, depth + 1)}
    return dist, joints


def _int_det(mat: List[List[int]]) -> int:
    """Fraction-free Gaussian elimination (Bareiss); exact for big integers."""
    a = [row[:] for row in mat]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def determinant_samples(records, space: ApproxSpace) -> List[int]:
    """Determinants of d consecutive (p, q) columns (d = m + n)."""
    dec = space.decomp
    d = dec.d
    recs = nondegenerate(records)
    out = []
    for i in range(len(recs) - d + 1):
        cols = recs[i:i + d]
        mat = [[int(c.p[row]) for c in cols] for row in range(dec.m)]
        mat += [[int(c.q[row]) for c in cols] for row in range(dec.n)]
        out.append(_int_det(mat))
    return out


def determinant_distribution(records, space: ApproxSpace) -> Dict[int, float]:
    vals = determinant_samples(records, space)
    if not vals:
        return {}
    total = len(vals)
    out: Dict[int, float] = {}
    for v in vals:
        out[v] = out.get(v, 0.0) + 1.0 / total
    return dict(sorted(out.items()))


def residue_distribution(records, N: int) -> Dict[Tuple[int, ...], float]:
    """Empirical frequencies of (p, q) mod N over nondegenerate records."""
    recs = nondegenerate(records)
    if not recs:
        return {}
    counts: Dict[Tuple[int, ...], int] = {}
    for rec in recs:
        if rec.residues and N in rec.residues:
            cls = rec.residues[N]
        else:
            cls = tuple(x % N for x in rec.p) + tuple(x % N for x in rec.q)
        counts[cls] = counts.get(cls, 0) + 1
    total = sum(counts.values())
    return {k: v / total for k, v in sorted(counts.items())}


def tv_distance(fa: Dict, fb: Dict) -> float:
    keys = set(fa) | set(fb)
    return 0.5 * sum(abs(fa.get(k, 0.0) - fb.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# constrained counting


@dataclass(frozen=True)
class ConstraintSet:
    """Finite-boundary constraint on renormalized records.

    Only products of coordinate boxes and residue cylinders are accepted, so
    the boundary is null for every reference measure in play; arbitrary
    predicates are rejected at construction.
    """

    error_interval: Optional[Tuple[float, float]] = None
    direction_boxes: Optional[Tuple[Optional[Tuple[Tuple[float, float], ...]], ...]] = None
    residue_classes: Optional[Tuple[int, frozenset]] = None
    sign_coordinate: Optional[int] = None
    shortest_vector_band: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.error_interval is not None:
            a, b = self.error_interval
            if not (0 <= a <= b):
                raise ValueError("error interval must satisfy 0 <= a <= b")

    def contains(self, rec, space: ApproxSpace,
                 shortest_len: Optional[float] = None) -> bool:
        if rec.degenerate:
            return False
        if self.error_interval is not None:
            a, b = self.error_interval
            if not (a <= rec.error <= b):
                return False
        if self.direction_boxes is not None:
            if rec.proj is None:
                raise ValueError("records lack direction data; enrich them first")
            for box, blk in zip(self.direction_boxes, rec.proj):
                if box is None:
                    continue
                for (lo, hi), c in zip(box, blk):
                    if not (lo <= c <= hi):
                        return False
        if self.residue_classes is not None:
            N, allowed = self.residue_classes
            if rec.residues and N in rec.residues:
                cls = rec.residues[N]
            else:
                cls = tuple(x % N for x in rec.p) + tuple(x % N for x in rec.q)
            if cls not in allowed:
                return False
        if self.shortest_vector_band is not None:
            if shortest_len is None:
                raise ValueError("constraint needs the lattice shortest length")
            lo, hi = self.shortest_vector_band
            if not (lo <= shortest_len <= hi):
                return False
        return True


def count_constrained(records, constraint: ConstraintSet, T: float,
                      space: ApproxSpace,
                      shortest_lens: Optional[Sequence[float]] = None) -> Tuple[int, float]:
    """(N, N / T^(k+r-1)) over records with Theta_j data in the constraint."""
    dec = space.decomp
    power = dec.k + dec.r - 1
    n = 0
    for i, rec in enumerate(records):
        if rec.degenerate:
            continue
        if rec.log_q_norm > T + 1e-12:
            continue
        sl = None if shortest_lens is None else shortest_lens[i]
        if constraint.contains(rec, space, shortest_len=sl):
            n += 1
    return n, n / T ** power


# ---------------------------------------------------------------------------
# consistency identities


def telescoping_gap_check(records) -> float:
    """|mean gap - (log||q_L|| - log||q_1||)/(L-1)|; zero up to roundoff."""
    recs = nondegenerate(records)
    gaps = gap_samples(recs)
    if not gaps:
        return 0.0
    direct = (recs[-1].log_q_norm - recs[0].log_q_norm) / len(gaps)
    return abs(float(np.mean(gaps)) - direct)


def duality_estimates(records, space: ApproxSpace) -> Tuple[float, float]:
    """Tail estimates of log||q_l||/l and -(n/m) adjusted -log||p+theta q||/l.

    The two agree in the limit (the growth duality); the caller compares.
    """
    dec = space.decomp
    recs = nondegenerate(records)
    qs = [(i + 1, rec.log_q_norm / (i + 1)) for i, rec in enumerate(recs)]
    ps = [(i + 1, -rec.m_log_norms[0] / (i + 1)) for i, rec in enumerate(recs)]
    q_mean, _ = tail_stats([v for _, v in qs])
    p_mean, _ = tail_stats([v for _, v in ps])
    return q_mean, (dec.m / dec.n) * p_mean
