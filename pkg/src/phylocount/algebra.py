"""Exact arithmetic tower used by the generating-function machinery.

Layers, bottom up:

* ``Fraction`` (stdlib) holds all coefficient arithmetic.
* ``Poly``: dense univariate polynomials over the rationals.
* ``AlgFun``: elements (p + q*s)/r of the quadratic extension Q(z)[s] with
  the defining relation s**2 = 1 - 2*z**2.  Denominators are plain
  polynomials; division rationalizes by the conjugate.  The canonical form
  (gcd(p, q, r) = 1, r monic, zero = (0, 0, 1)) is unique, so equality is
  component-wise.
* ``MarkerJet``: polynomials in nilpotent markers y_i over AlgFun, with a
  per-marker degree cap (1, or 2 where a squared derivative operator is
  taken).  Multiplication truncates past the caps, which is exactly the
  "differentiate, then set the markers to zero" calculus.
* ``SeriesZ``: truncated Taylor expansions with exact rational
  coefficients, the target of coefficient extraction.
* ``QSqrt2``: elements a + b*sqrt(2) of Q(sqrt 2), used for the asymptotic
  constants.

Everything is immutable and pure; no floating point enters this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

__all__ = [
    "AlgFun",
    "MarkerJet",
    "Poly",
    "QSqrt2",
    "SeriesZ",
    "binom_half",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

class Poly:
    """Dense univariate polynomial over Fraction, trailing zeros stripped."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(c) -> "Poly":
        return Poly([_frac(c)])

    @staticmethod
    def monomial(power: int, c=1) -> "Poly":
        return Poly([0] * power + [c])

    # -- basic queries -----------------------------------------------------

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial at -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else _ZERO

    def lc(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else _ZERO

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        out[i + j] += a * b
        return Poly(out)

    def scale(self, c) -> "Poly":
        c = _frac(c)
        return Poly([a * c for a in self.coeffs])

    def __pow__(self, n: int) -> "Poly":
        result = Poly([1])
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def divmod(self, other: "Poly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quot = [_ZERO] * (dq + 1)
        inv_lc = 1 / other.lc()
        for i in range(dq, -1, -1):
            c = rem[i + other.degree] * inv_lc
            if c:
                quot[i] = c
                for j, b in enumerate(other.coeffs):
                    rem[i + j] -= c * b
        return Poly(quot), Poly(rem)

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ValueError("non-exact polynomial division")
        return q

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self.scale(1 / self.lc())

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
            if not b.is_zero():
                b = b.monic()  # keeps coefficient growth in check
        return a.monic() if not a.is_zero() else a

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x: Fraction) -> Fraction:
        acc = _ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_inv_sqrt2(self) -> "QSqrt2":
        """Exact value at z = 1/sqrt(2), as an element of Q(sqrt 2).

        z**(2j) contributes 2**-j rationally; z**(2j+1) contributes
        2**-(j+1) * sqrt(2).
        """
        rat = _ZERO
        irr = _ZERO
        for i, c in enumerate(self.coeffs):
            if i % 2 == 0:
                rat += c * Fraction(1, 2 ** (i // 2))
            else:
                irr += c * Fraction(1, 2 ** ((i + 1) // 2))
        return QSqrt2(rat, irr)

    def even_part_compressed(self) -> "Poly":
        """For a polynomial with only even-degree terms, return p(w), w = z^2."""
        if any(c for i, c in enumerate(self.coeffs) if i % 2 == 1):
            raise ValueError("polynomial has odd-degree terms")
        return Poly(self.coeffs[::2])

    def expand_w_to_z2(self) -> "Poly":
        """Inverse of even_part_compressed: substitute w = z^2."""
        out = [_ZERO] * (2 * len(self.coeffs))
        for i, c in enumerate(self.coeffs):
            out[2 * i] = c
        return Poly(out)

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            if i == 0:
                parts.append(str(c))
            elif i == 1:
                parts.append(f"{c}*z")
            else:
                parts.append(f"{c}*z^{i}")
        return " + ".join(parts)


P_ZERO = Poly()
P_ONE = Poly([1])
P_Z = Poly([0, 1])
P_S2 = Poly([1, 0, -2])  # 1 - 2 z^2, the square of the radical


def _gcd3(a: Poly, b: Poly, c: Poly) -> Poly:
    return a.gcd(b).gcd(c)


# ---------------------------------------------------------------------------
# The quadratic-radical function field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgFun:
    """(p + q*s)/r with s = sqrt(1 - 2 z^2); canonical on construction.

    Use AlgFun.make (or the arithmetic operators) rather than the raw
    constructor; make() reduces gcd(p, q, r) to 1 and scales r monic.
    """

    p: Poly
    q: Poly
    r: Poly

    @staticmethod
    def make(p: Poly, q: Poly, r: Poly) -> "AlgFun":
        if r.is_zero():
            raise ZeroDivisionError("AlgFun with zero denominator")
        if p.is_zero() and q.is_zero():
            return AlgFun(P_ZERO, P_ZERO, P_ONE)
        g = _gcd3(p, q, r)
        if g.degree > 0:
            p = p.exact_div(g)
            q = q.exact_div(g)
            r = r.exact_div(g)
        lc = r.lc()
        if lc != 1:
            inv = 1 / lc
            p = p.scale(inv)
            q = q.scale(inv)
            r = r.monic()
        return AlgFun(p, q, r)

    # -- constructors --------------------------------------------------------

    @staticmethod
    def from_frac(c) -> "AlgFun":
        return AlgFun.make(Poly.const(c), P_ZERO, P_ONE)

    @staticmethod
    def from_poly(p: Poly) -> "AlgFun":
        return AlgFun.make(p, P_ZERO, P_ONE)

    @staticmethod
    def z_power(k: int) -> "AlgFun":
        return AlgFun.make(Poly.monomial(k), P_ZERO, P_ONE)

    # -- queries --------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.p.is_zero() and self.q.is_zero()

    # -- field operations ------------------------------------------------------

    def __add__(self, other: "AlgFun") -> "AlgFun":
        return AlgFun.make(
            self.p * other.r + other.p * self.r,
            self.q * other.r + other.q * self.r,
            self.r * other.r,
        )

    def __neg__(self) -> "AlgFun":
        return AlgFun(-self.p, -self.q, self.r)

    def __sub__(self, other: "AlgFun") -> "AlgFun":
        return self + (-other)

    def __mul__(self, other: "AlgFun") -> "AlgFun":
        # (p1 + q1 s)(p2 + q2 s) = p1 p2 + q1 q2 (1 - 2 z^2) + (p1 q2 + q1 p2) s
        return AlgFun.make(
            self.p * other.p + (self.q * other.q) * P_S2,
            self.p * other.q + self.q * other.p,
            self.r * other.r,
        )

    def inv(self) -> "AlgFun":
        if self.is_zero():
            raise ZeroDivisionError("inverting zero AlgFun")
        # 1/((p+qs)/r) = r (p - q s) / (p^2 - q^2 (1-2z^2))
        norm = self.p * self.p - (self.q * self.q) * P_S2
        return AlgFun.make(self.r * self.p, -(self.r * self.q), norm)

    def __truediv__(self, other: "AlgFun") -> "AlgFun":
        return self * other.inv()

    def scale(self, c) -> "AlgFun":
        c = _frac(c)
        if c == 0:
            return AF_ZERO
        return AlgFun(self.p.scale(c), self.q.scale(c), self.r)

    def __pow__(self, n: int) -> "AlgFun":
        if n < 0:
            return self.inv() ** (-n)
        result = AF_ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "AlgFun":
        return AlgFun(self.p, -self.q, self.r)

    # -- series expansion -------------------------------------------------------

    def series(self, order: int) -> "SeriesZ":
        """Exact Taylor coefficients through z**order.

        Requires analyticity at 0: the numerator's series must vanish to at
        least the order of the denominator's root at 0 (the normal form
        cannot always keep r(0) != 0, e.g. (1 - s)/z).
        """
        val = 0
        rc = self.r.coeffs
        while val < len(rc) and rc[val] == 0:
            val += 1
        num = _poly_series(self.p, order + val)
        if not self.q.is_zero():
            qs = _series_mul(_poly_series(self.q, order + val), _sqrt_series(order + val), order + val)
            num = [a + b for a, b in zip(num, qs)]
        if any(num[:val]):
            raise ValueError("AlgFun has a pole at z = 0")
        shifted = num[val:]
        den = list(rc[val:]) + [_ZERO] * (order + 1 - (len(rc) - val))
        inv = _series_inv(den[: order + 1], order)
        return SeriesZ(order, _series_mul(shifted[: order + 1], inv, order))

    def __repr__(self):
        return f"(({self.p!r}) + ({self.q!r})*s) / ({self.r!r})"


AF_ZERO = AlgFun(P_ZERO, P_ZERO, P_ONE)
AF_ONE = AlgFun(P_ONE, P_ZERO, P_ONE)
AF_Z = AlgFun(P_Z, P_ZERO, P_ONE)
AF_S = AlgFun(P_ZERO, P_ONE, P_ONE)  # the radical itself
AF_S2 = AlgFun(P_S2, P_ZERO, P_ONE)  # 1 - 2 z^2


# ---------------------------------------------------------------------------
# Series helpers (plain lists of Fractions, length order+1)
# ---------------------------------------------------------------------------

def binom_half(j: int) -> Fraction:
    """Binomial coefficient C(1/2, j), exactly."""
    num = _ONE
    x = Fraction(1, 2)
    for i in range(j):
        num *= (x - i)
    return num / math.factorial(j)


_SQRT_CACHE: list[Fraction] = []


def _sqrt_series(order: int):
    """Coefficients of sqrt(1 - 2 z^2) = sum_j C(1/2, j) (-2)^j z^(2j)."""
    while 2 * len(_SQRT_CACHE) <= order:
        j = len(_SQRT_CACHE)
        _SQRT_CACHE.append(binom_half(j) * Fraction(-2) ** j)
    out = [_ZERO] * (order + 1)
    for j in range(0, order // 2 + 1):
        out[2 * j] = _SQRT_CACHE[j]
    return out


def _poly_series(p: Poly, order: int):
    out = [_ZERO] * (order + 1)
    for i, c in enumerate(p.coeffs[: order + 1]):
        out[i] = c
    return out


def _series_mul(a, b, order: int):
    out = [_ZERO] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if x:
            for j, y in enumerate(b[: order + 1 - i]):
                if y:
                    out[i + j] += x * y
    return out


def _series_inv(a, order: int):
    if not a or a[0] == 0:
        raise ZeroDivisionError("series inversion at a zero constant term")
    inv0 = 1 / a[0]
    out = [inv0] + [_ZERO] * order
    for n in range(1, order + 1):
        acc = _ZERO
        for i in range(1, min(n, len(a) - 1) + 1):
            if a[i]:
                acc += a[i] * out[n - i]
        out[n] = -inv0 * acc
    return out


@dataclass(frozen=True)
class SeriesZ:
    """Truncated series sum_{i<=order} c_i z^i with exact coefficients."""

    order: int
    coeffs: tuple

    def __init__(self, order: int, coeffs):
        cs = list(coeffs) + [_ZERO] * (order + 1 - len(coeffs))
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", tuple(cs[: order + 1]))

    def __getitem__(self, i: int) -> Fraction:
        if i > self.order:
            raise IndexError(f"coefficient {i} beyond truncation order {self.order}")
        return self.coeffs[i]

    def __add__(self, other: "SeriesZ") -> "SeriesZ":
        order = min(self.order, other.order)
        return SeriesZ(order, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "SeriesZ") -> "SeriesZ":
        order = min(self.order, other.order)
        return SeriesZ(order, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, other: "SeriesZ") -> "SeriesZ":
        order = min(self.order, other.order)
        return SeriesZ(order, _series_mul(self.coeffs, other.coeffs, order))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def counts(self):
        """n! * [z^n] for each n through the truncation order."""
        return [math.factorial(n) * c for n, c in enumerate(self.coeffs)]


# ---------------------------------------------------------------------------
# Nilpotent marker jets
# ---------------------------------------------------------------------------

class MarkerJet:
    """Truncated polynomial in markers y_1..y_m over AlgFun.

    markers: tuple of (name, cap) declaring the index space; every jet in
    one expression shares the same declaration.  coeffs maps multi-indices
    (within caps) to nonzero AlgFun values; the zero jet has no entries.
    """

    __slots__ = ("markers", "coeffs")

    def __init__(self, markers, coeffs=None):
        self.markers = tuple((str(n), int(c)) for n, c in markers)
        for _, cap in self.markers:
            if cap not in (1, 2):
                raise ValueError("marker caps must be 1 or 2")
        cleaned = {}
        for idx, val in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != len(self.markers):
                raise ValueError("multi-index arity mismatch")
            if any(i < 0 or i > cap for i, (_, cap) in zip(idx, self.markers)):
                raise ValueError(f"multi-index {idx} exceeds caps")
            if not val.is_zero():
                cleaned[idx] = val
        self.coeffs = cleaned

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, markers, value: AlgFun) -> "MarkerJet":
        zero = (0,) * len(markers)
        return cls(markers, {zero: value})

    @classmethod
    def marker(cls, markers, name: str) -> "MarkerJet":
        names = [n for n, _ in markers]
        idx = [0] * len(names)
        idx[names.index(name)] = 1
        return cls(markers, {tuple(idx): AF_ONE})

    @classmethod
    def marker_sum(cls, markers, names) -> "MarkerJet":
        out = {}
        declared = [n for n, _ in markers]
        for name in names:
            idx = [0] * len(declared)
            idx[declared.index(name)] = 1
            out[tuple(idx)] = AF_ONE
        return cls(markers, out)

    # -- helpers -----------------------------------------------------------------

    def _zero_index(self):
        return (0,) * len(self.markers)

    @property
    def base(self) -> AlgFun:
        """Value with every marker set to 0."""
        return self.coeffs.get(self._zero_index(), AF_ZERO)

    def _check_compatible(self, other: "MarkerJet"):
        if self.markers != other.markers:
            raise ValueError("jet marker declarations differ")

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        return (
            isinstance(other, MarkerJet)
            and self.markers == other.markers
            and self.coeffs == other.coeffs
        )

    # -- arithmetic ----------------------------------------------------------------

    def __add__(self, other: "MarkerJet") -> "MarkerJet":
        self._check_compatible(other)
        out = dict(self.coeffs)
        for idx, val in other.coeffs.items():
            out[idx] = out.get(idx, AF_ZERO) + val
        return MarkerJet(self.markers, out)

    def __neg__(self) -> "MarkerJet":
        return MarkerJet(self.markers, {i: -v for i, v in self.coeffs.items()})

    def __sub__(self, other: "MarkerJet") -> "MarkerJet":
        return self + (-other)

    def __mul__(self, other: "MarkerJet") -> "MarkerJet":
        self._check_compatible(other)
        caps = [cap for _, cap in self.markers]
        out = {}
        for i1, v1 in self.coeffs.items():
            for i2, v2 in other.coeffs.items():
                idx = tuple(a + b for a, b in zip(i1, i2))
                if any(i > c for i, c in zip(idx, caps)):
                    continue
                prod = v1 * v2
                out[idx] = out.get(idx, AF_ZERO) + prod
        return MarkerJet(self.markers, out)

    def scale(self, value: AlgFun) -> "MarkerJet":
        return MarkerJet(self.markers, {i: v * value for i, v in self.coeffs.items()})

    def scale_frac(self, c) -> "MarkerJet":
        c = _frac(c)
        return MarkerJet(self.markers, {i: v.scale(c) for i, v in self.coeffs.items()})

    def __pow__(self, n: int) -> "MarkerJet":
        result = MarkerJet.constant(self.markers, AF_ONE)
        for _ in range(n):
            result = result * self
        return result

    def inv(self) -> "MarkerJet":
        """Multiplicative inverse: geometric series in the nilpotent part."""
        b = self.base
        if b.is_zero():
            raise ZeroDivisionError("jet inverse with zero base coefficient")
        binv = b.inv()
        u = (self.scale(binv)) - MarkerJet.constant(self.markers, AF_ONE)
        depth = sum(cap for _, cap in self.markers)
        acc = MarkerJet.constant(self.markers, AF_ONE)
        power = MarkerJet.constant(self.markers, AF_ONE)
        for _ in range(depth):
            power = power * (-u)
            if power.is_zero():
                break
            acc = acc + power
        return acc.scale(binv)

    def sqrt(self) -> "MarkerJet":
        """Square root of a jet whose base is exactly 1 - 2 z^2.

        The restriction converts malformed radicands (catalog bugs) into
        hard failures instead of silently wrong algebra.  Computed as
        s * sum_j C(1/2, j) eps^j with eps = (x - (1-2z^2))/(1-2z^2).
        """
        if self.base != AF_S2:
            raise ValueError("jet sqrt requires base radicand exactly 1 - 2 z^2")
        eps = (self - MarkerJet.constant(self.markers, AF_S2)).scale(AF_S2.inv())
        depth = sum(cap for _, cap in self.markers)
        acc = MarkerJet.constant(self.markers, AF_ONE)
        power = MarkerJet.constant(self.markers, AF_ONE)
        for j in range(1, depth + 1):
            power = power * eps
            if power.is_zero():
                break
            acc = acc + power.scale_frac(binom_half(j))
        return acc.scale(AF_S)

    # -- extraction -------------------------------------------------------------------

    def extract(self, multi_index) -> AlgFun:
        """Mixed partial derivative at all markers 0.

        Equals the stored coefficient times the product of factorials of
        the index entries.
        """
        idx = tuple(multi_index)
        if len(idx) != len(self.markers):
            raise ValueError("multi-index arity mismatch")
        if any(i < 0 or i > cap for i, (_, cap) in zip(idx, self.markers)):
            raise ValueError(f"multi-index {idx} out of caps")
        coeff = self.coeffs.get(idx, AF_ZERO)
        fact = 1
        for i in idx:
            fact *= math.factorial(i)
        return coeff.scale(fact)

    def extract_names(self, names) -> AlgFun:
        """extract() with the derivative given as a multiset of marker names."""
        declared = [n for n, _ in self.markers]
        idx = [0] * len(declared)
        for name in names:
            idx[declared.index(name)] += 1
        return self.extract(idx)

    def __repr__(self):
        names = [n for n, _ in self.markers]
        terms = []
        for idx in sorted(self.coeffs):
            mon = "*".join(
                f"{n}^{e}" if e > 1 else n for n, e in zip(names, idx) if e
            )
            terms.append(f"[{mon or '1'}] {self.coeffs[idx]!r}")
        return "MarkerJet(" + "; ".join(terms) + ")"


# ---------------------------------------------------------------------------
# Q(sqrt 2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QSqrt2:
    """a + b*sqrt(2) with exact rational a, b."""

    a: Fraction
    b: Fraction

    def __init__(self, a, b=0):
        object.__setattr__(self, "a", _frac(a))
        object.__setattr__(self, "b", _frac(b))

    def __add__(self, other: "QSqrt2") -> "QSqrt2":
        return QSqrt2(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "QSqrt2") -> "QSqrt2":
        return QSqrt2(self.a - other.a, self.b - other.b)

    def __mul__(self, other: "QSqrt2") -> "QSqrt2":
        return QSqrt2(self.a * other.a + 2 * self.b * other.b,
                      self.a * other.b + self.b * other.a)

    def scale(self, c) -> "QSqrt2":
        c = _frac(c)
        return QSqrt2(self.a * c, self.b * c)

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2)

    def __repr__(self):
        return f"{self.a} + {self.b}*sqrt(2)"


def series_product_check(x: AlgFun, y: AlgFun, order: int) -> bool:
    """series is a ring homomorphism: series(x*y) == series(x)*series(y)."""
    lhs = (x * y).series(order)
    rhs = x.series(order) * y.series(order)
    return lhs.coeffs == rhs.coeffs


def poly_from_fracs(*cs) -> Poly:
    return Poly([_frac(c) for c in cs])
