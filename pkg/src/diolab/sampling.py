"""Matrix samplers: Lebesgue, Cantor, IFS attractors, curves, explicit, quadratic.

Draws are driven by a counter-mode generator (sha256 over seed/stream/counter),
so identical (seed, stream, budget) always reproduce the same digits and
parallel workers consume disjoint streams by construction.  Refinement
extends a draw's digit stream without touching digits already emitted.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

from .bestapprox import Theta
from .numerics import Rat, RefinementExhausted, ValidatedReal

RNG_ALGORITHM = "sha256-ctr"

LEBESGUE = "lebesgue"
CANTOR = "cantor"
IFS = "ifs"
CURVE = "curve"
EXPLICIT = "explicit"
QUADRATIC = "quadratic"


class _DigitStream:
    """Deterministic digit source for one (seed, stream) pair."""

    def __init__(self, seed: int, stream: Tuple[int, ...]):
        tag = ("%d:" % seed) + ":".join(str(s) for s in stream)
        self._key = tag.encode()

    def _block(self, counter: int) -> bytes:
        return hashlib.sha256(self._key + struct.pack("<Q", counter)).digest()

    def bytes_iter(self) -> Iterator[int]:
        for counter in itertools.count():
            yield from self._block(counter)

    def decimal_digits(self, n: int) -> list:
        # bytes >= 250 are rejected so every digit is exactly uniform
        out = []
        for b in self.bytes_iter():
            if b < 250:
                out.append(b % 10)
                if len(out) == n:
                    return out
        raise AssertionError("unreachable")

    def base_digits(self, n: int, base: int) -> list:
        bound = (256 // base) * base
        out = []
        for b in self.bytes_iter():
            if b < bound:
                out.append(b % base)
                if len(out) == n:
                    return out
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class ThetaSource:
    """Description of a measure on matrices plus the seed that samples it."""

    kind: str
    m: int = 1
    n: int = 1
    digit_budget: int = 60
    max_digits: Optional[int] = None  # hard refinement cap; None = generous default
    seed: int = 0
    # IFS data: maps x -> ratio*x + translation, chosen by the probabilities
    ratios: Tuple[Rat, ...] = ()
    translations: Tuple[Rat, ...] = ()
    probabilities: Tuple[Rat, ...] = ()
    depth: int = 0
    # curve data
    degree: int = 0
    # explicit entries / quadratic coefficients
    entries: Tuple[Tuple[Rat, ...], ...] = ()
    quad: Tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self) -> None:
        if self.kind == IFS:
            if not (len(self.ratios) == len(self.translations) == len(self.probabilities)):
                raise ValueError("IFS pieces must align")
            if any(not (0 < r < 1) for r in self.ratios):
                raise ValueError("IFS maps must be strict contractions")
            if sum(self.probabilities) != 1:
                raise ValueError("IFS probabilities must sum to 1")

    @property
    def hard_cap(self) -> int:
        if self.max_digits is not None:
            return self.max_digits
        return 16 * max(self.digit_budget, self.depth, 1) + 64


def lebesgue_source(m: int, n: int, digit_budget: int, seed: int,
                    max_digits: Optional[int] = None) -> ThetaSource:
    return ThetaSource(LEBESGUE, m=m, n=n, digit_budget=digit_budget,
                       seed=seed, max_digits=max_digits)


def cantor_source(ternary_digits: int, seed: int,
                  max_digits: Optional[int] = None) -> ThetaSource:
    return ThetaSource(CANTOR, digit_budget=ternary_digits, seed=seed,
                       max_digits=max_digits)


def ifs_source(ratios, translations, probabilities, depth: int, seed: int) -> ThetaSource:
    return ThetaSource(
        IFS, seed=seed, depth=depth,
        ratios=tuple(Rat(r) for r in ratios),
        translations=tuple(Rat(t) for t in translations),
        probabilities=tuple(Rat(p) for p in probabilities))


def curve_source(degree: int, digit_budget: int, seed: int) -> ThetaSource:
    if degree < 1:
        raise ValueError("curve degree must be >= 1")
    return ThetaSource(CURVE, m=1, n=degree, digit_budget=digit_budget, seed=seed,
                       degree=degree)


def explicit_source(rows) -> ThetaSource:
    entries = tuple(tuple(Rat(x) for x in row) for row in rows)
    return ThetaSource(EXPLICIT, m=len(entries), n=len(entries[0]), entries=entries)


def quadratic_source(a: int, b: int, c: int) -> ThetaSource:
    if a == 0 or b * b - 4 * a * c <= 0:
        raise ValueError("need a real quadratic irrational (positive discriminant)")
    return ThetaSource(QUADRATIC, quad=(int(a), int(b), int(c)))


# -- per-kind draws -----------------------------------------------------------

def _decimal_entry(src: ThetaSource, stream: Tuple[int, ...], digits: int):
    ds = _DigitStream(src.seed, stream).decimal_digits(digits)
    num = 0
    for d in ds:
        num = num * 10 + d
    den = 10 ** digits
    return Rat(num, den), Rat(1, den)


def _cantor_entry(src: ThetaSource, stream: Tuple[int, ...], digits: int):
    bits = _DigitStream(src.seed, stream).base_digits(digits, 2)
    num = 0
    for b in bits:
        num = num * 3 + 2 * b
    den = 3 ** digits
    return Rat(num, den), Rat(1, den)


def _ifs_entry(src: ThetaSource, stream: Tuple[int, ...], depth: int):
    # choose maps by cumulative probability from uniform decimal draws
    res = 10 ** 6
    picks = _DigitStream(src.seed, stream).decimal_digits(6 * depth)
    cum = []
    acc = Rat(0)
    for p in src.probabilities:
        acc += p
        cum.append(acc)
    lo = min(t / (1 - r) for t, r in zip(src.translations, src.ratios))
    hi = max(t / (1 - r) for t, r in zip(src.translations, src.ratios))
    x_lo, x_hi = Rat(lo), Rat(hi)
    seq = []
    for i in range(depth):
        u = Rat(int("".join(str(d) for d in picks[6 * i:6 * i + 6])), res)
        idx = next(j for j, cp in enumerate(cum) if u < cp or j == len(cum) - 1)
        seq.append(idx)
    # apply the composition f_{i_1} o ... o f_{i_depth} to the attractor bracket
    for idx in reversed(seq):
        r, t = src.ratios[idx], src.translations[idx]
        x_lo, x_hi = r * x_lo + t, r * x_hi + t
    return x_lo, x_hi - x_lo


def _quadratic_cf_stream(a: int, b: int, c: int) -> Iterator[int]:
    """Partial quotients of the larger root of a x^2 + b x + c, exactly.

    Standard surd recursion on (P + sqrt(D))/Q with Q | D - P^2 throughout.
    """
    disc = b * b - 4 * a * c
    P, Q = -b, 2 * a
    if Q < 0:
        P, Q = -P, -Q
    D = disc
    if (D - P * P) % Q:
        scale = abs(Q)
        P, D, Q = P * scale, D * scale * scale, Q * scale
    from math import isqrt
    sq = isqrt(D)
    while True:
        ai = (P + sq) // Q
        # floor correction for negative values of the surd
        while P + sq < ai * Q:
            ai -= 1
        while P + sq >= (ai + 1) * Q:
            ai += 1
        yield ai
        P = ai * Q - P
        Q = (D - P * P) // Q


def _quadratic_entry(src: ThetaSource, terms: int):
    # interval between consecutive convergents brackets the root
    a, b, c = src.quad
    gen = _quadratic_cf_stream(a, b, c)
    pm1, qm1, pm2, qm2 = 1, 0, 0, 1
    for _ in range(max(terms, 2)):
        ai = next(gen)
        pm1, pm2 = ai * pm1 + pm2, pm1
        qm1, qm2 = ai * qm1 + qm2, qm1
    lo, hi = Rat(pm2, qm2), Rat(pm1, qm1)
    if lo > hi:
        lo, hi = hi, lo
    return lo, hi - lo


def sample(source: ThetaSource, draw: int = 0) -> Theta:
    """Exact rational truncation of draw number ``draw`` from the measure."""
    return _sample_at(source, draw, source.digit_budget if source.kind != IFS
                      else source.depth)


def _sample_at(source: ThetaSource, draw: int, budget: int) -> Theta:
    if budget > source.hard_cap:
        raise RefinementExhausted(
            f"budget {budget} exceeds the source hard cap {source.hard_cap}")
    kind = source.kind
    if kind == EXPLICIT:
        entries = source.entries
        errs = tuple((Rat(0),) * len(row) for row in entries)
        return Theta(entries=entries, errs=errs, provenance=EXPLICIT, budget=0)

    if kind == QUADRATIC:
        lo, err = _quadratic_entry(source, budget)
        a, b, c = source.quad

        def stream():
            return _quadratic_cf_stream(a, b, c)

        return Theta(entries=((lo,),), errs=((err,),), provenance=QUADRATIC,
                     budget=budget, source=source, draw=draw, cf_stream=stream)

    if kind in (LEBESGUE, CANTOR, CURVE):
        if kind == CANTOR:
            lo, err = _cantor_entry(source, (draw, 0, 0), budget)
            rows, errs = ((lo,),), ((err,),)
        elif kind == CURVE:
            x, err = _decimal_entry(source, (draw, 0, 0), budget)
            hi = x + err
            # theta = (x, x^2, ..., x^degree); monotone powers on [0,1)
            rows = (tuple(x ** j for j in range(1, source.degree + 1)),)
            errs = (tuple(hi ** j - x ** j for j in range(1, source.degree + 1)),)
        else:
            rows, errs = [], []
            for i in range(source.m):
                row, erow = [], []
                for j in range(source.n):
                    lo, err = _decimal_entry(source, (draw, i, j), budget)
                    row.append(lo)
                    erow.append(err)
                rows.append(tuple(row))
                errs.append(tuple(erow))
            rows, errs = tuple(rows), tuple(errs)
        return Theta(entries=rows, errs=errs, provenance=kind, budget=budget,
                     source=source, draw=draw)

    if kind == IFS:
        lo, err = _ifs_entry(source, (draw, 0, 0), budget)
        return Theta(entries=((lo,),), errs=((err,),), provenance=IFS,
                     budget=budget, source=source, draw=draw)

    raise ValueError(f"unknown source kind {kind!r}")


def refine_sample(theta: Theta, extra_digits: int) -> Theta:
    """Tighter truncation of the same draw; emitted digits never change."""
    if extra_digits <= 0:
        raise ValueError("extra_digits must be positive")
    if theta.source is None or theta.provenance == EXPLICIT:
        return theta
    return _sample_at(theta.source, theta.draw, theta.budget + extra_digits)


def entry_interval(theta: Theta, i: int = 0, j: int = 0) -> ValidatedReal:
    """Validated view of one entry, refinable through the sampler."""
    lo = theta.entries[i][j]
    err = theta.errs[i][j]

    def refine_fn(target: Rat) -> ValidatedReal:
        th, guard = theta, 0
        while th.errs[i][j] > target:
            src = th.source
            if src is None:
                raise RefinementExhausted("entry has no refinement source")
            step = max(th.budget, 8)
            if th.budget + step > src.hard_cap:
                step = src.hard_cap - th.budget
                if step <= 0:
                    raise RefinementExhausted("sampler digit budget spent")
            th = refine_sample(th, step)
            guard += 1
            if guard > 64:
                raise RefinementExhausted("refinement failed to converge")
        return entry_interval(th, i, j)

    if theta.source is None:
        return ValidatedReal(lo, lo + err)
    return ValidatedReal(lo, lo + err, refine_fn=refine_fn)
