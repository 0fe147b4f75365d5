"""Exact arithmetic in GF(p) and GF(p^m) with a fixed polynomial basis.

Extension elements are length-m coordinate vectors over GF(p) in the basis
1, a, ..., a^(m-1), where a is a root of a monic irreducible modulus.
Specs and elements are immutable after construction and safe to share
between any number of threads.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterator, Sequence, Union


class FieldError(ValueError):
    """Bad field construction, or an operation across mismatched fields."""


# ---------------------------------------------------------------------------
# primality

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for everything below 3.3e24."""
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# univariate polynomial helpers over GF(p); coefficient tuples, ascending,
# normalized with no trailing zeros (the zero polynomial is ())


def _ptrim(c: list) -> tuple:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _pmul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _ptrim(out)


def _psub(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i in range(n):
        ai = a[i] if i < len(a) else 0
        bi = b[i] if i < len(b) else 0
        out[i] = (ai - bi) % p
    return _ptrim(out)


def _pdivmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], -1, p)
    rem = list(a)
    quo = [0] * max(len(a) - len(b) + 1, 0)
    for i in range(len(a) - len(b), -1, -1):
        c = rem[i + len(b) - 1] * inv_lead % p
        if c:
            quo[i] = c
            for j, bj in enumerate(b):
                rem[i + j] = (rem[i + j] - c * bj) % p
    return _ptrim(quo), _ptrim(rem)


def _pmod(a, mod, p):
    return _pdivmod(a, mod, p)[1]


def _ppowmod(a, e, mod, p):
    result = (1,)
    base = _pmod(a, mod, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), mod, p)
        base = _pmod(_pmul(base, base, p), mod, p)
        e >>= 1
    return result


def _pgcd(a, b, p):
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _pxgcd(a, b, p):
    """Extended Euclid: returns (g, u, v) with u*a + v*b = g."""
    r0, r1 = a, b
    u0, u1 = (1,), ()
    v0, v1 = (), (1,)
    while r1:
        q, r = _pdivmod(r0, r1, p)
        r0, r1 = r1, r
        u0, u1 = u1, _psub(u0, _pmul(q, u1, p), p)
        v0, v1 = v1, _psub(v0, _pmul(q, v1, p), p)
    return r0, u0, v0


def _small_prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _poly_is_irreducible(mod, p):
    """Rabin's irreducibility test for a monic modulus over GF(p)."""
    m = len(mod) - 1
    if m == 1:
        return True
    x = (0, 1)
    if _ppowmod(x, p**m, mod, p) != x:
        return False
    for q in _small_prime_factors(m):
        g = _pgcd(_psub(_ppowmod(x, p ** (m // q), mod, p), x, p), mod, p)
        if len(g) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# field specs


class FieldSpec:
    """Common interface of prime and extension field specs."""

    p: int
    m: int
    order: int

    def element(self, value) -> "FieldElement":
        """Coerce an int (embedded constant), coordinate sequence, or element."""
        if isinstance(value, FieldElement):
            if value.spec is not self and value.spec != self:
                raise FieldError("element belongs to a different field")
            return value
        if isinstance(value, int):
            coords = (value % self.p,) + (0,) * (self.m - 1)
            return FieldElement(self, coords)
        coords = tuple(int(c) % self.p for c in value)
        if len(coords) != self.m:
            raise FieldError(f"expected {self.m} coordinates, got {len(coords)}")
        return FieldElement(self, coords)

    @property
    def zero(self) -> "FieldElement":
        return self._zero

    @property
    def one(self) -> "FieldElement":
        return self._one

    def from_index(self, idx: int) -> "FieldElement":
        """Element number idx in the canonical enumeration, 0 <= idx < order."""
        if not 0 <= idx < self.order:
            raise FieldError(f"index {idx} out of range for GF({self.order})")
        coords = []
        for _ in range(self.m):
            coords.append(idx % self.p)
            idx //= self.p
        return FieldElement(self, tuple(coords))

    def index_of(self, el: "FieldElement") -> int:
        idx = 0
        for c in reversed(el.coeffs):
            idx = idx * self.p + c
        return idx

    def elements(self) -> Iterator["FieldElement"]:
        for idx in range(self.order):
            yield self.from_index(idx)

    def random_element(self, rng, nonzero: bool = False) -> "FieldElement":
        lo = 1 if nonzero else 0
        return self.from_index(rng.randrange(lo, self.order))

    # arithmetic kernels used by FieldElement -----------------------------

    def _mul_coords(self, a: tuple, b: tuple) -> tuple:
        raise NotImplementedError

    def _inv_coords(self, a: tuple) -> tuple:
        raise NotImplementedError

    def format_element(self, el: "FieldElement") -> str:
        """Render in the basis generator syntax: '2*a+1', 'a^2', '7', '0'."""
        if self.m == 1:
            return str(el.coeffs[0])
        parts = []
        for i in range(self.m - 1, -1, -1):
            c = el.coeffs[i]
            if c == 0:
                continue
            if i == 0:
                parts.append(str(c))
            else:
                a = "a" if i == 1 else f"a^{i}"
                parts.append(a if c == 1 else f"{c}*{a}")
        return "+".join(parts) if parts else "0"


class PrimeFieldSpec(FieldSpec):
    """GF(p) for a word-sized prime p."""

    def __init__(self, p: int):
        if not isinstance(p, int) or not is_prime(p):
            raise FieldError(f"{p!r} is not prime")
        if p.bit_length() > 63:
            raise FieldError("p must fit in one machine word")
        self.p = p
        self.m = 1
        self.order = p
        self._zero = FieldElement(self, (0,))
        self._one = FieldElement(self, (1 % p,))

    @property
    def text(self) -> str:
        return str(self.p)

    def __repr__(self):
        return f"GF({self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeFieldSpec) and other.p == self.p

    def __hash__(self):
        return hash(("prime", self.p))

    def _mul_coords(self, a, b):
        return (a[0] * b[0] % self.p,)

    def _inv_coords(self, a):
        return (pow(a[0], -1, self.p),)


class ExtFieldSpec(FieldSpec):
    """GF(p^m) with a monic irreducible modulus; coordinates in basis 1..a^(m-1).

    The modulus is given most-significant coefficient first, matching the
    textual form 'p^m/c_m,...,c_0' (so (1, 2, 2) over p=3 is x^2+2x+2).
    """

    def __init__(self, p: int, m: int, modulus: Sequence[int]):
        if not is_prime(p):
            raise FieldError(f"{p!r} is not prime")
        if m < 1:
            raise FieldError("extension degree must be >= 1")
        mod_desc = [int(c) % p for c in modulus]
        if len(mod_desc) != m + 1:
            raise FieldError(f"modulus must have degree {m}")
        if mod_desc[0] != 1:
            raise FieldError("modulus must be monic")
        mod_asc = tuple(reversed(mod_desc))
        if not _poly_is_irreducible(mod_asc, p):
            raise FieldError(f"modulus {tuple(mod_desc)} is reducible over GF({p})")
        self.p = p
        self.m = m
        self.order = p**m
        self.modulus = tuple(mod_desc)
        self._mod_asc = mod_asc
        self._zero = FieldElement(self, (0,) * m)
        one = [0] * m
        one[0] = 1 % p
        self._one = FieldElement(self, tuple(one))

    @property
    def text(self) -> str:
        return f"{self.p}^{self.m}/" + ",".join(str(c) for c in self.modulus)

    @property
    def generator(self) -> "FieldElement":
        """The basis generator a (the class of x modulo the modulus)."""
        if self.m == 1:
            # degenerate: a is the residue -c0 of the degree-1 modulus
            return self.element(-self.modulus[1])
        coords = [0] * self.m
        coords[1] = 1
        return FieldElement(self, tuple(coords))

    def __repr__(self):
        return f"GF({self.p}^{self.m})"

    def __eq__(self, other):
        return (
            isinstance(other, ExtFieldSpec)
            and other.p == self.p
            and other.m == self.m
            and other.modulus == self.modulus
        )

    def __hash__(self):
        return hash(("ext", self.p, self.m, self.modulus))

    def _mul_coords(self, a, b):
        p, m = self.p, self.m
        conv = [0] * (2 * m - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    conv[i + j] += ai * bj
        mod = self._mod_asc
        for i in range(2 * m - 2, m - 1, -1):
            c = conv[i] % p
            if c:
                for j in range(m):
                    conv[i - m + j] -= c * mod[j]
            conv[i] = 0
        return tuple(c % p for c in conv[:m])

    def _inv_coords(self, a):
        g, u, _ = _pxgcd(_ptrim(list(a)), self._mod_asc, self.p)
        if len(g) != 1:
            raise FieldError("element is not invertible")
        scale = pow(g[0], -1, self.p)
        coords = [0] * self.m
        for i, c in enumerate(u):
            coords[i] = c * scale % self.p
        return tuple(coords)


# ---------------------------------------------------------------------------
# elements


class FieldElement:
    """Immutable element of GF(p) or GF(p^m), stored as basis coordinates."""

    __slots__ = ("spec", "coeffs")

    def __init__(self, spec: FieldSpec, coeffs: tuple):
        self.spec = spec
        self.coeffs = coeffs

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.spec is not self.spec and other.spec != self.spec:
                raise FieldError("operands belong to different fields")
            return other
        if isinstance(other, int):
            return self.spec.element(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = self.spec.p
        return FieldElement(
            self.spec, tuple((x + y) % p for x, y in zip(self.coeffs, o.coeffs))
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = self.spec.p
        return FieldElement(
            self.spec, tuple((x - y) % p for x, y in zip(self.coeffs, o.coeffs))
        )

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __neg__(self):
        p = self.spec.p
        return FieldElement(self.spec, tuple((-x) % p for x in self.coeffs))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.spec, self.spec._mul_coords(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        base = self
        if e < 0:
            base = self.inverse()
            e = -e
        acc = self.spec.one
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    def inverse(self) -> "FieldElement":
        if not any(self.coeffs):
            raise FieldError("inversion of zero")
        return FieldElement(self.spec, self.spec._inv_coords(self.coeffs))

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.spec.element(other)
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.coeffs == other.coeffs and self.spec == other.spec

    def __hash__(self):
        return hash((self.coeffs, self.spec))

    def __bool__(self):
        return any(self.coeffs)

    def __int__(self):
        if self.spec.m != 1:
            raise FieldError("only prime-field elements convert to int")
        return self.coeffs[0]

    def __str__(self):
        return self.spec.format_element(self)

    def __repr__(self):
        return self.spec.format_element(self)


def basis_elements(spec: FieldSpec) -> list[FieldElement]:
    """The polynomial basis 1, a, ..., a^(m-1); just [1] for prime fields."""
    out = []
    for i in range(spec.m):
        coords = [0] * spec.m
        coords[i] = 1
        out.append(FieldElement(spec, tuple(coords)))
    return out


# ---------------------------------------------------------------------------
# construction helpers and the textual spec form

# shipped default moduli, most-significant coefficient first
DEFAULT_MODULI = {
    (2, 2): (1, 1, 1),  # x^2+x+1
    (2, 3): (1, 0, 1, 1),  # x^3+x+1
    (3, 2): (1, 2, 2),  # x^2+2x+2, primitive root a with a^2 = a+1
    (3, 3): (1, 0, 2, 1),  # x^3+2x+1
}


@lru_cache(maxsize=None)
def prime_field(p: int) -> PrimeFieldSpec:
    return PrimeFieldSpec(p)


@lru_cache(maxsize=None)
def _ext_field_cached(p: int, m: int, modulus: tuple) -> ExtFieldSpec:
    return ExtFieldSpec(p, m, modulus)


def ext_field(p: int, m: int, modulus: Sequence[int] | None = None) -> ExtFieldSpec:
    """GF(p^m); uses the shipped default modulus when none is supplied."""
    if modulus is None:
        try:
            modulus = DEFAULT_MODULI[(p, m)]
        except KeyError:
            raise FieldError(
                f"no default modulus shipped for GF({p}^{m}); supply one"
            ) from None
    return _ext_field_cached(p, m, tuple(int(c) for c in modulus))


_SPEC_RE = re.compile(r"^(\d+)\^(\d+)/((?:\d+,)*\d+)$")


def parse_field_spec(text: str) -> FieldSpec:
    """Parse 'p' or 'p^m/c_m,...,c_0' (modulus most-significant first)."""
    text = text.strip()
    if re.fullmatch(r"\d+", text):
        return prime_field(int(text))
    match = _SPEC_RE.match(text)
    if not match:
        raise FieldError(f"cannot parse field spec {text!r}")
    p, m = int(match.group(1)), int(match.group(2))
    modulus = tuple(int(c) for c in match.group(3).split(","))
    if len(modulus) != m + 1:
        raise FieldError(f"field spec {text!r}: modulus must list {m + 1} coefficients")
    return _ext_field_cached(p, m, modulus)


_ATERM_RE = re.compile(r"^(?:(\d+)\*?)?(a)?(?:\^(\d+))?$")


def parse_element(text: str, spec: FieldSpec) -> FieldElement:
    """Parse an element literal: an integer, or a polynomial in 'a' like '2*a^3+a+1'."""
    s = text.replace(" ", "")
    if not s:
        raise FieldError("empty element literal")
    # split into signed summands
    out = spec.zero
    pos = 0
    sign = 1
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        pos = 1
    start = pos
    chunks = []
    while pos <= len(s):
        if pos == len(s) or s[pos] in "+-":
            chunks.append((sign, s[start:pos]))
            if pos < len(s):
                sign = -1 if s[pos] == "-" else 1
            start = pos + 1
        pos += 1
    for sgn, chunk in chunks:
        m = _ATERM_RE.match(chunk)
        if not m or (m.group(3) and not m.group(2)) or not chunk:
            raise FieldError(f"bad element literal {text!r}")
        coeff = int(m.group(1)) if m.group(1) else 1
        if m.group(2):
            if spec.m == 1:
                raise FieldError(
                    f"basis symbol 'a' is not a GF({spec.p}) coefficient"
                )
            power = int(m.group(3)) if m.group(3) else 1
            gen = spec.generator  # type: ignore[attr-defined]
            term = spec.element(coeff) * gen**power
        else:
            term = spec.element(coeff)
        out = out + term if sgn > 0 else out - term
    return out


FieldLike = Union[PrimeFieldSpec, ExtFieldSpec]
