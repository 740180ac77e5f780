"""Exact rationals, validated intervals, and the guarded-float comparison rule.

Every engine in this package selects best approximations purely through
comparisons, so numerical soundness reduces to comparison soundness.  Three
layers provide it:

* exact values are ``fractions.Fraction`` (arbitrary precision, reduced);
* a real known only through a finite sample is a :class:`ValidatedReal`
  interval with exact rational endpoints and an optional refinement hook;
* float fast paths compare through a guard tolerance and escalate to exact
  arithmetic whenever two floats land within the guard of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

Rat = Fraction

LN2 = math.log(2.0)

#: absolute tolerance below which float comparisons are escalated to exact ones
DEFAULT_GUARD = 1e-9


class RefinementExhausted(Exception):
    """A refinement hook ran out of digits before reaching the target width."""


class PrecisionExhausted(Exception):
    """A certified computation needs more digits than the sample can provide."""


class UndecidedComparison(Exception):
    """A guarded comparison landed in the guard band with no exact fallback."""


class Cmp(Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ValidatedReal:
    """Closed interval [lo, hi] with exact endpoints, certifying one real.

    ``refine_fn`` maps a target width to a tighter interval for the same
    real; it raises :class:`RefinementExhausted` once the underlying sample
    has no digits left.
    """

    lo: Rat
    hi: Rat
    refine_fn: Optional[Callable[[Rat], "ValidatedReal"]] = None

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("interval endpoints out of order")

    @classmethod
    def exact(cls, value) -> "ValidatedReal":
        v = Rat(value)
        return cls(v, v)

    @property
    def width(self) -> Rat:
        return self.hi - self.lo

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def midpoint(self) -> Rat:
        return (self.lo + self.hi) / 2

    def __float__(self) -> float:
        return float(self.midpoint())


def cmp_validated(a: ValidatedReal, b: ValidatedReal) -> Cmp:
    """Order two validated reals; Undecided whenever the intervals overlap."""
    if a.hi < b.lo:
        return Cmp.LESS
    if b.hi < a.lo:
        return Cmp.GREATER
    if a.is_exact and b.is_exact and a.lo == b.lo:
        return Cmp.EQUAL
    return Cmp.UNDECIDED


def refine(x: ValidatedReal, target_width) -> ValidatedReal:
    """Shrink ``x`` to width <= target_width, pulling digits from its source."""
    target = Rat(target_width)
    if target < 0:
        raise ValueError("target width must be nonnegative")
    if x.width <= target:
        return x
    if x.refine_fn is None:
        raise RefinementExhausted("value has no refinement source")
    y = x.refine_fn(target)
    if y.width > target:
        raise RefinementExhausted(
            f"refinement stalled at width {float(y.width):.3g}"
        )
    if y.lo > x.hi or y.hi < x.lo:
        raise ValueError("refinement left the original interval")
    return y


@dataclass(frozen=True)
class GuardedFloat:
    """Float with an absolute guard; ambiguous comparisons must escalate."""

    value: float
    guard: float = DEFAULT_GUARD

    def cmp(self, other: "GuardedFloat", exact: Optional[Callable[[], int]] = None) -> int:
        return guarded_cmp(self.value, other.value,
                           guard=max(self.guard, other.guard), exact=exact)


def guarded_cmp(a: float, b: float, guard: float = DEFAULT_GUARD,
                exact: Optional[Callable[[], int]] = None) -> int:
    """Three-way compare of floats; within the guard, defer to ``exact``.

    ``exact`` returns -1/0/+1 from arbitrary-precision data.  Raising when it
    is missing keeps silently wrong orderings out of the engines.
    """
    d = a - b
    if d > guard:
        return 1
    if d < -guard:
        return -1
    if exact is None:
        raise UndecidedComparison("guard band reached with no exact fallback")
    return exact()


# -- logарithms of huge exact values ----------------------------------------
#
# Convergent denominators overflow floats after ~300 decimal digits, so logs
# are taken through bit-length scaling.

def log_int(n: int) -> float:
    if n <= 0:
        raise ValueError("log_int needs a positive integer")
    s = n.bit_length() - 53
    if s <= 0:
        return math.log(n)
    return math.log(n >> s) + s * LN2


def log_fraction(x: Rat) -> float:
    if x <= 0:
        raise ValueError("log_fraction needs a positive rational")
    return log_int(x.numerator) - log_int(x.denominator)


def log_fraction_or_ninf(x: Rat) -> float:
    return float("-inf") if x == 0 else log_fraction(x)


def round_half_down(x: Rat) -> int:
    """Nearest integer; exact halves round toward -inf (deterministic ties)."""
    return math.ceil(x - Rat(1, 2))


def int_root(n: int, p: int) -> int:
    """floor(n ** (1/p)) for nonnegative integer n."""
    if n < 0:
        raise ValueError("int_root needs n >= 0")
    if p == 1 or n in (0, 1):
        return n
    if p == 2:
        return math.isqrt(n)
    r = int(round(n ** (1.0 / p)))
    while r > 0 and r ** p > n:
        r -= 1
    while (r + 1) ** p <= n:
        r += 1
    return r


def digits_for_convergents(l: int) -> int:
    """Starting decimal-digit budget for certifying ``l`` convergents.

    log10(q_l) grows like 0.515*l for typical numbers; certification refines
    further on demand, so this only has to be a sane opening bid.
    """
    return math.ceil(0.52 * l) + 10
