"""Exact combinatorics modulo p: digit sums, carry counting, multinomials,
and the coefficients produced by repeated unit-step differencing.

Multinomial residues are computed digit-wise in base p (generalised Lucas),
never through big factorials; the carry count of the parts equals the p-adic
valuation of the integer multinomial, so a coefficient survives mod p exactly
when the parts add without carries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence


class _ZeroFunction:
    """Marker result: the difference is the identically zero function."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO_FUNCTION"


ZERO_FUNCTION = _ZeroFunction()


def digits(a: int, p: int) -> list[int]:
    """Base-p digits of a, least significant first; [0] for a = 0."""
    if a < 0:
        raise ValueError("negative argument")
    if a == 0:
        return [0]
    out = []
    while a:
        out.append(a % p)
        a //= p
    return out


def digit_sum(a: int, p: int) -> int:
    """S_p(a), the sum of the base-p digits of a."""
    return sum(digits(a, p))


def carry_count(parts: Sequence[int], p: int) -> int:
    """Total carry mass when adding all parts in base p.

    A position whose digit sum overflows k*p contributes k, so the result
    equals the p-adic valuation of the multinomial coefficient of the parts.
    """
    if not parts:
        raise ValueError("parts must be nonempty")
    cols = [digits(a, p) for a in parts]
    width = max(len(c) for c in cols)
    carry = 0
    total = 0
    for pos in range(width):
        s = carry + sum(c[pos] for c in cols if pos < len(c))
        carry = s // p
        total += carry
    while carry:
        total += carry // p
        carry //= p
    return total


def _factorials_mod(p: int) -> list[int]:
    out = [1] * p
    for i in range(2, p):
        out[i] = out[i - 1] * i % p
    return out


_FACT_CACHE: dict[int, list[int]] = {}


def _fact(p: int) -> list[int]:
    table = _FACT_CACHE.get(p)
    if table is None:
        table = _FACT_CACHE[p] = _factorials_mod(p)
    return table


def _digit_multinomial(total: int, parts: Sequence[int], p: int) -> int:
    """Multinomial of single base-p digits (no carries by construction)."""
    fact = _fact(p)
    num = fact[total]
    den = 1
    for k in parts:
        den = den * fact[k] % p
    return num * pow(den, -1, p) % p


def binomial_mod(n: int, k: int, p: int) -> int:
    """C(n, k) mod p by Lucas' theorem."""
    if k < 0 or k > n:
        return 0
    return multinomial_mod(n, (k, n - k), p)


def multinomial_mod(d: int, parts: Sequence[int], p: int) -> int:
    """Multinomial coefficient (d; parts) mod p, digit-wise in base p."""
    if any(k < 0 for k in parts):
        raise ValueError("parts must be nonnegative")
    if sum(parts) != d:
        raise ValueError(f"parts {tuple(parts)} do not sum to {d}")
    d_digits = digits(d, p)
    part_digits = [digits(k, p) for k in parts]
    result = 1
    for pos, dd in enumerate(d_digits):
        col = [c[pos] if pos < len(c) else 0 for c in part_digits]
        if sum(col) != dd:
            return 0  # a carry occurs, so p divides the coefficient
        result = result * _digit_multinomial(dd, col, p) % p
    return result


@dataclass(frozen=True)
class Composition:
    """Ordered parts (i_1, ..., i_k), all >= 1, summing to the target."""

    parts: tuple[int, ...]
    target: int

    def __post_init__(self):
        if any(i < 1 for i in self.parts):
            raise ValueError("composition parts must be >= 1")
        if sum(self.parts) != self.target:
            raise ValueError("composition parts must sum to the target")


def _nonneg_splits(total: int, k: int) -> Iterator[tuple[int, ...]]:
    """All ordered ways to write total as k nonnegative integers."""
    if k == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _nonneg_splits(total - first, k - 1):
            yield (first,) + rest


def _positive_compositions(total: int, k: int) -> Iterator[tuple[int, ...]]:
    if total < k:
        return
    for split in _nonneg_splits(total - k, k):
        yield tuple(s + 1 for s in split)


def _nonzero_composition_items(
    d: int, j: int, k: int, p: int
) -> Iterator[tuple[tuple[int, ...], int]]:
    """Yield (parts, multinomial residue) over ordered compositions of j into
    k positive parts whose multinomial (d; parts..., d-j) is nonzero mod p."""
    if k < 1 or j < k or j > d:
        return
    if d < p:
        # single digit: no carries can occur, every composition survives
        fact = _fact(p)
        base = fact[d] * pow(fact[d - j], -1, p) % p
        for parts in _positive_compositions(j, k):
            den = 1
            for i in parts:
                den = den * fact[i] % p
            yield parts, base * pow(den, -1, p) % p
        return
    rest = d - j
    d_digits = digits(d, p)
    r_digits = digits(rest, p)
    width = len(d_digits)
    need = []
    for pos in range(width):
        rd = r_digits[pos] if pos < len(r_digits) else 0
        e = d_digits[pos] - rd
        if e < 0:
            return  # the fixed part d-j already forces a carry
        need.append(e)
    per_pos = [list(_nonneg_splits(e, k)) for e in need]
    fact = _fact(p)
    for combo in itertools.product(*per_pos):
        parts = [0] * k
        residue = 1
        for pos, split in enumerate(combo):
            for idx, a in enumerate(split):
                parts[idx] += a * p**pos
            den = 1
            for a in split:
                den = den * fact[a] % p
            rd = r_digits[pos] if pos < len(r_digits) else 0
            den = den * fact[rd] % p
            residue = residue * fact[d_digits[pos]] * pow(den, -1, p) % p
        if all(parts):
            yield tuple(parts), residue


def nonzero_compositions(d: int, j: int, k: int, p: int) -> Iterator[Composition]:
    """Ordered compositions of j into k positive parts whose multinomial
    coefficient (d; i_1, ..., i_k, d-j) is nonzero modulo p."""
    if not 1 <= k <= j <= d:
        raise ValueError("need 1 <= k <= j <= d")
    for parts, _ in _nonzero_composition_items(d, j, k, p):
        yield Composition(parts, j)


def diff_coefficient(d: int, j: int, m: int, p: int) -> int:
    """The residue multiplying x^(d-j) after m unit-step differences of x^d.

    Sum of multinomials (d; i_1, ..., i_m, d-j) over ordered compositions
    of j into m positive parts.
    """
    if not 1 <= m <= j <= d:
        raise ValueError("need 1 <= m <= j <= d")
    total = 0
    for _, residue in _nonzero_composition_items(d, j, m, p):
        total += residue
    return total % p


def degree_after_diff(d: int, k: int, p: int):
    """Degree bound for x^d after k differences over a field of characteristic p.

    Zeroes out the low base-p digits of d until k is spent; returns the
    ZERO_FUNCTION sentinel when k exceeds the digit sum of d, since the
    result then vanishes identically for every choice of nonzero steps.
    """
    if d < 0 or k < 1:
        raise ValueError("need d >= 0 and k >= 1")
    ds = digits(d, p)
    if k > sum(ds):
        return ZERO_FUNCTION
    spent = 0
    out = list(ds) + [0]
    for pos, digit in enumerate(ds):
        if spent + digit <= k:
            spent += digit
            out[pos] = 0
            if spent == k:
                break
        else:
            out[pos] = digit - (k - spent)
            break
    value = 0
    for pos, digit in enumerate(out):
        value += digit * p**pos
    return value
