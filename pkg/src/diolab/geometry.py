"""Block decompositions, monotone norms, product regions, and volume constants.

The ambient configuration for every engine is an :class:`ApproxSpace`: a
decomposition m = m_1+..+m_k, n = n_1+..+n_r together with one monotone norm
per block and the Minkowski bound epsilon.  All norms here are monotone in
coordinate absolute values, which is what lets componentwise rounding
minimize every block norm at once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gamma
from typing import Optional, Sequence, Tuple, Union

from .numerics import Rat

SUP = "sup"
EUCLIDEAN = "euclidean"
PNORM = "p"
WSUP = "wsup"

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class NormSpec:
    """One block norm: sup, Euclidean, an l^p norm (integer p), or weighted sup.

    Comparisons between vectors under the same spec go through ``power``:
    an order-isomorphic exact value (max|x_i|, sum x_i^2, sum |x_i|^p, ...)
    that stays rational for rational input.
    """

    kind: str = SUP
    p: Optional[int] = None
    weights: Optional[Tuple[Rat, ...]] = None

    def __post_init__(self) -> None:
        if self.kind not in (SUP, EUCLIDEAN, PNORM, WSUP):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == PNORM:
            if self.p is None or self.p < 1 or int(self.p) != self.p:
                raise ValueError("p-norm needs an integer p >= 1")
        if self.kind == WSUP:
            if not self.weights or any(w <= 0 for w in self.weights):
                raise ValueError("weighted sup needs positive weights")

    # exponent e with power(v) = norm(v)**e
    @property
    def power_exponent(self) -> int:
        if self.kind == EUCLIDEAN:
            return 2
        if self.kind == PNORM:
            return self.p
        return 1

    def norm(self, v: Sequence[Number]) -> float:
        xs = [abs(float(c)) for c in v]
        if not xs:
            return 0.0
        if self.kind == SUP:
            return max(xs)
        if self.kind == WSUP:
            return max(float(w) * x for w, x in zip(self.weights, xs))
        if self.kind == EUCLIDEAN:
            return math.hypot(*xs)
        return sum(x ** self.p for x in xs) ** (1.0 / self.p)

    def power(self, v: Sequence[Number]):
        """Exact order-isomorphic value of the norm (rational for rational v)."""
        xs = [abs(c) for c in v]
        if not xs:
            return 0
        if self.kind == SUP:
            return max(xs)
        if self.kind == WSUP:
            return max(w * x for w, x in zip(self.weights, xs))
        if self.kind == EUCLIDEAN:
            return sum(x * x for x in xs)
        return sum(x ** self.p for x in xs)

    def radius_power(self, r):
        return r ** self.power_exponent

    def norm_from_power(self, pw) -> float:
        e = self.power_exponent
        pw = float(pw)
        return pw if e == 1 else pw ** (1.0 / e)

    def unit_ball_volume(self, dim: int) -> float:
        if self.kind == SUP:
            return 2.0 ** dim
        if self.kind == WSUP:
            vol = 2.0 ** dim
            for w in self.weights:
                vol /= float(w)
            return vol
        if dim == 1:
            return 2.0  # every 1-dim unit ball is [-1, 1]
        if self.kind == EUCLIDEAN:
            return math.pi ** (dim / 2.0) / gamma(dim / 2.0 + 1.0)
        p = self.p
        return (2.0 * gamma(1.0 + 1.0 / p)) ** dim / gamma(1.0 + dim / p)

    def coord_bounds(self, r: float, dim: int) -> Tuple[float, ...]:
        """Per-coordinate half-widths of the bounding box of the r-ball."""
        if self.kind == WSUP:
            return tuple(r / float(w) for w in self.weights)
        # |x_c| <= ||x|| for sup, euclidean and every p >= 1
        return (r,) * dim

    def min_unit_power(self, dim: int):
        """Smallest ``power`` of a nonzero integer vector of the block."""
        if self.kind == WSUP:
            return min(self.weights)
        return 1

    def m_scale(self, dim: int) -> float:
        """Rescaling that fits the sup unit ball inside this block's unit ball."""
        if self.kind == SUP:
            return 1.0
        if self.kind == WSUP:
            return 1.0 / float(max(self.weights))
        if self.kind == EUCLIDEAN:
            return dim ** -0.5
        return dim ** (-1.0 / self.p)

    def n_scale(self, dim: int) -> float:
        """Rescaling that lifts the minimal nonzero integer norm to 1."""
        if self.kind == WSUP:
            return 1.0 / float(min(self.weights))
        return 1.0

    def describe(self) -> str:
        if self.kind == SUP:
            return "s"
        if self.kind == EUCLIDEAN:
            return "e"
        if self.kind == PNORM:
            return f"p{self.p}"
        return "w(" + ",".join(str(w) for w in self.weights) + ")"


def sup_norm() -> NormSpec:
    return NormSpec(SUP)


def euclidean_norm() -> NormSpec:
    return NormSpec(EUCLIDEAN)


def p_norm(p: int) -> NormSpec:
    return NormSpec(PNORM, p=int(p))


def weighted_sup_norm(weights) -> NormSpec:
    return NormSpec(WSUP, weights=tuple(Rat(w) for w in weights))


@dataclass(frozen=True)
class Decomposition:
    m_parts: Tuple[int, ...]
    n_parts: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.m_parts or not self.n_parts:
            raise ValueError("need at least one block on each side")
        if any(x < 1 for x in self.m_parts + self.n_parts):
            raise ValueError("block dimensions must be positive")

    @property
    def k(self) -> int:
        return len(self.m_parts)

    @property
    def r(self) -> int:
        return len(self.n_parts)

    @property
    def m(self) -> int:
        return sum(self.m_parts)

    @property
    def n(self) -> int:
        return sum(self.n_parts)

    @property
    def d(self) -> int:
        return self.m + self.n

    def m_slices(self) -> Tuple[Tuple[int, int], ...]:
        out, start = [], 0
        for part in self.m_parts:
            out.append((start, start + part))
            start += part
        return tuple(out)

    def n_slices(self) -> Tuple[Tuple[int, int], ...]:
        out, start = [], 0
        for part in self.n_parts:
            out.append((start, start + part))
            start += part
        return tuple(out)


@dataclass(frozen=True)
class ApproxSpace:
    """Decomposition + per-block norms + the Minkowski bound epsilon."""

    decomp: Decomposition
    m_norms: Tuple[NormSpec, ...]
    n_norms: Tuple[NormSpec, ...]
    epsilon: float = field(default=0.0)

    def __post_init__(self) -> None:
        if len(self.m_norms) != self.decomp.k or len(self.n_norms) != self.decomp.r:
            raise ValueError("one norm per block required")
        if self.epsilon == 0.0:
            object.__setattr__(self, "epsilon", compute_epsilon(self))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def create(cls, m_parts, n_parts, m_norms=None, n_norms=None,
               epsilon: float = 0.0) -> "ApproxSpace":
        dec = Decomposition(tuple(m_parts), tuple(n_parts))
        mn = tuple(m_norms) if m_norms else (sup_norm(),) * dec.k
        nn = tuple(n_norms) if n_norms else (sup_norm(),) * dec.r
        return cls(dec, mn, nn, epsilon)

    # exact Minkowski bound when every block volume is rational (sup/wsup)
    def epsilon_exact(self) -> Optional[Rat]:
        vol = Rat(1)
        for spec, dim in self.iter_blocks():
            if spec.kind == SUP:
                vol *= Rat(2) ** dim
            elif spec.kind == WSUP:
                v = Rat(2) ** dim
                for w in spec.weights:
                    v /= Rat(w)
                vol *= v
            else:
                return None
        return Rat(2) ** self.decomp.d / vol

    def iter_blocks(self):
        for spec, dim in zip(self.m_norms, self.decomp.m_parts):
            yield spec, dim
        for spec, dim in zip(self.n_norms, self.decomp.n_parts):
            yield spec, dim

    def m_blocks(self, x: Sequence[Number]):
        return [x[a:b] for a, b in self.decomp.m_slices()]

    def n_blocks(self, y: Sequence[Number]):
        return [y[a:b] for a, b in self.decomp.n_slices()]

    def m_block_norms(self, x: Sequence[Number]) -> Tuple[float, ...]:
        return tuple(spec.norm(blk)
                     for spec, blk in zip(self.m_norms, self.m_blocks(x)))

    def n_block_norms(self, y: Sequence[Number]) -> Tuple[float, ...]:
        return tuple(spec.norm(blk)
                     for spec, blk in zip(self.n_norms, self.n_blocks(y)))

    def q_norm(self, y: Sequence[Number]) -> float:
        return max(self.n_block_norms(y))

    def describe(self) -> str:
        ms = ",".join(f"{d}{s.describe()}"
                      for d, s in zip(self.decomp.m_parts, self.m_norms))
        ns = ",".join(f"{d}{s.describe()}"
                      for d, s in zip(self.decomp.n_parts, self.n_norms))
        return f"{ms}|{ns}"


@dataclass(frozen=True)
class ProductRegion:
    """Product of closed per-block norm balls; one radius per block."""

    radii: Tuple[Number, ...]


def block_norm(x: Sequence[Number], spec: NormSpec) -> float:
    return spec.norm(x)


def unit_ball_volume(spec: NormSpec, dim: int) -> float:
    return spec.unit_ball_volume(dim)


def region_contains(region: ProductRegion, v: Sequence[Number],
                    space: ApproxSpace, tol: float = 0.0) -> bool:
    """Closed membership test; exact when v and the radii are rational."""
    dec = space.decomp
    if len(region.radii) != dec.k + dec.r:
        raise ValueError("one radius per block required")
    x, y = v[:dec.m], v[dec.m:]
    blocks = list(zip(space.m_norms, space.m_blocks(x))) + \
        list(zip(space.n_norms, space.n_blocks(y)))
    exact = all(isinstance(c, (int, Fraction)) for c in v) and \
        all(isinstance(rr, (int, Fraction)) for rr in region.radii) and tol == 0.0
    for (spec, blk), r in zip(blocks, region.radii):
        if exact:
            if spec.power(blk) > spec.radius_power(Rat(r)):
                return False
        else:
            if spec.norm(blk) > float(r) + tol:
                return False
    return True


def compute_epsilon(space: ApproxSpace) -> float:
    """Minkowski bound: every best approximation has Error < epsilon."""
    vol = 1.0
    for spec, dim in space.iter_blocks():
        vol *= spec.unit_ball_volume(dim)
    return 2.0 ** space.decomp.d / vol


def c_constant(k: int, n_parts: Sequence[int]) -> int:
    """Alternating sum over {0,1}^r of (sum n_j x_j)^(k+r-1), signed by parity."""
    n_parts = tuple(int(x) for x in n_parts)
    r = len(n_parts)
    if k < 1 or r < 1:
        raise ValueError("need k >= 1 and r >= 1")
    e = k + r - 1
    total = 0
    for xs in itertools.product((0, 1), repeat=r):
        s = sum(n * x for n, x in zip(n_parts, xs))
        total += (-1) ** (r - sum(xs)) * s ** e
    if total <= 0:
        raise ArithmeticError("alternating sum failed positivity")
    return total


def jt_volume(T: float, space: ApproxSpace) -> float:
    """Volume of the time polytope over which section visits are counted."""
    if T <= 0:
        raise ValueError("T must be positive")
    dec = space.decomp
    e = dec.k + dec.r - 1
    denom = 1
    for mi in dec.m_parts:
        denom *= mi
    for nj in dec.n_parts[:-1]:
        denom *= nj
    return T ** e * c_constant(dec.k, dec.n_parts) / (denom * math.factorial(e))


def jt_contains(space: ApproxSpace, t: Sequence[float], T: float,
                tol: float = 1e-12) -> bool:
    """Closed membership of a time vector in the counting polytope."""
    dec = space.decomp
    k, r = dec.k, dec.r
    t = list(t)
    if len(t) != k + r - 1:
        raise ValueError("time vector has wrong dimension")
    if any(ti < -tol for ti in t):
        return False
    if any(t[k + j] > T + tol for j in range(r - 1)):
        return False
    s = sum(mi * t[i] for i, mi in enumerate(dec.m_parts))
    s -= sum(dec.n_parts[j] * t[k + j] for j in range(r - 1))
    return -tol <= s <= dec.n_parts[-1] * T + tol


def jt_bounding_box(space: ApproxSpace, T: float) -> Tuple[Tuple[float, float], ...]:
    """Axis-aligned box containing the time polytope (for sampling oracles)."""
    dec = space.decomp
    k, r = dec.k, dec.r
    budget = dec.n_parts[-1] * T + sum(dec.n_parts[:-1]) * T
    box = [(0.0, budget / dec.m_parts[i]) for i in range(k)]
    box += [(0.0, float(T))] * (r - 1)
    return tuple(box)


# -- CLI descriptor syntax ----------------------------------------------------
#
# "2e,1s|1s" : blocks with dimension + norm letter; "p3" for the l^3 norm.
# "m:2e,1s|n:1s" is accepted as well; a bare "2,1|1" defaults every block to sup.

def _parse_block(token: str) -> Tuple[int, NormSpec]:
    token = token.strip()
    i = 0
    while i < len(token) and token[i].isdigit():
        i += 1
    if i == 0:
        raise ValueError(f"block {token!r} must start with its dimension")
    dim = int(token[:i])
    suffix = token[i:].strip()
    if suffix in ("", "s"):
        return dim, sup_norm()
    if suffix == "e":
        return dim, euclidean_norm()
    if suffix.startswith("p"):
        return dim, p_norm(int(suffix[1:]))
    raise ValueError(f"unknown norm suffix {suffix!r}")


def parse_space(text: str, epsilon: float = 0.0) -> ApproxSpace:
    text = text.strip()
    if "|" not in text:
        raise ValueError("space descriptor needs 'm-blocks|n-blocks'")
    left, right = text.split("|", 1)
    left = left.split(":", 1)[1] if left.startswith("m:") else left
    right = right.split(":", 1)[1] if right.startswith("n:") else right
    m_parsed = [_parse_block(tok) for tok in left.split(",") if tok.strip()]
    n_parsed = [_parse_block(tok) for tok in right.split(",") if tok.strip()]
    return ApproxSpace.create(
        [d for d, _ in m_parsed], [d for d, _ in n_parsed],
        [s for _, s in m_parsed], [s for _, s in n_parsed],
        epsilon=epsilon)
