"""Outward-rounded interval arithmetic on binary64 endpoints.

Rounding is done in software: every endpoint is computed in round-to-nearest
and then pushed one step outward with :func:`math.nextafter`, unless an
error-free transformation shows the nearest result is already exact.  No FPU
rounding-mode state is touched, so the module is safe to use from threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .exceptions import DimensionError, DomainError

INF = math.inf
_SPLITTER = 134217729.0  # 2**27 + 1
_TINY = 2.0 ** -900  # below this the Dekker terms may underflow

# math.pi is the double just below pi.
PI_LO = math.pi
PI_HI = math.nextafter(math.pi, INF)

Number = Union[int, float]


def down(x: float) -> float:
    return math.nextafter(x, -INF)


def up(x: float) -> float:
    return math.nextafter(x, INF)


def two_sum(a: float, b: float) -> tuple[float, float]:
    """Return (s, e) with s = fl(a+b) and s + e == a + b exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> tuple[float, float]:
    """Dekker product: p = fl(a*b) and p + e == a*b exactly.

    Outside the range where the split and partial products are exact (huge
    operands, or anything near underflow) ``e`` is NaN, meaning unknown; the
    product is still correctly rounded, so one ulp outward is safe.
    """
    p = a * b
    if not math.isfinite(p) or abs(a) > 1e150 or abs(b) > 1e150:
        return p, math.nan
    if a == 0.0 or b == 0.0:
        return p, 0.0
    if abs(a) < _TINY or abs(b) < _TINY or abs(p) < _TINY:
        return p, math.nan
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _lower(s: float, e: float) -> float:
    if e != e:  # NaN: exactness unknown
        return down(s)
    return s if e >= 0.0 else down(s)


def _upper(s: float, e: float) -> float:
    if e != e:
        return up(s)
    return s if e <= 0.0 else up(s)


def add_down(a: float, b: float) -> float:
    return _lower(*two_sum(a, b))


def add_up(a: float, b: float) -> float:
    return _upper(*two_sum(a, b))


def mul_down(a: float, b: float) -> float:
    return _lower(*two_prod(a, b))


def mul_up(a: float, b: float) -> float:
    return _upper(*two_prod(a, b))


def div_down(a: float, b: float) -> float:
    q = a / b
    if math.isinf(q):
        return q if q < 0 else down(q)
    # a - q*b exactly; sign tells which side of a/b the quotient lies on
    p, e = two_prod(q, b)
    r = (a - p) - e
    if r != r:
        return down(q)
    # a/b = q + r/b; compare signs since r*b may underflow
    return q if r == 0.0 or (r > 0.0) == (b > 0.0) else down(q)


def div_up(a: float, b: float) -> float:
    q = a / b
    if math.isinf(q):
        return q if q > 0 else up(q)
    p, e = two_prod(q, b)
    r = (a - p) - e
    if r != r:
        return up(q)
    return q if r == 0.0 or (r > 0.0) != (b > 0.0) else up(q)


def fsum_up(values: Iterable[float]) -> float:
    """Upper bound of an exact sum (fsum is correctly rounded)."""
    s = math.fsum(values)
    return up(s) if s != 0.0 else 0.0


def fraction_bounds(q: Fraction) -> tuple[float, float]:
    """Tightest binary64 enclosure of a rational number."""
    f = float(q)
    exact = Fraction(f)
    if exact == q:
        return f, f
    if exact < q:
        return f, up(f)
    return down(f), f


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo != self.lo or self.hi != self.hi:
            raise DomainError("interval endpoint is NaN")
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x: Number) -> "Interval":
        return Interval(float(x), float(x))

    @staticmethod
    def around(x: Number, radius: Number) -> "Interval":
        return Interval(add_down(float(x), -float(radius)), add_up(float(x), float(radius)))

    @staticmethod
    def from_fraction(q: Fraction) -> "Interval":
        return Interval(*fraction_bounds(Fraction(q)))

    # -- geometry ---------------------------------------------------------
    @property
    def width(self) -> float:
        return add_up(self.hi, -self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def rad(self) -> float:
        """Radius around :attr:`mid`, rounded up so mid +- rad covers the interval."""
        m = self.mid
        return max(add_up(self.hi, -m), add_up(m, -self.lo))

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, other: Union["Interval", Number]) -> bool:
        if isinstance(other, Interval):
            return self.lo <= other.lo and other.hi <= self.hi
        return self.lo <= other <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise DomainError("intersection is empty")
        return Interval(lo, hi)

    def widen(self, amount: float) -> "Interval":
        return Interval(add_down(self.lo, -amount), add_up(self.hi, amount))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "Interval":
        o = _coerce(other)
        return Interval(add_down(self.lo, o.lo), add_up(self.hi, o.hi))

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        o = _coerce(other)
        return Interval(add_down(self.lo, -o.hi), add_up(self.hi, -o.lo))

    def __rsub__(self, other) -> "Interval":
        return _coerce(other) - self

    def __mul__(self, other) -> "Interval":
        o = _coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        pairs = ((a, c), (a, d), (b, c), (b, d))
        lo = min(mul_down(x, y) for x, y in pairs)
        hi = max(mul_up(x, y) for x, y in pairs)
        return Interval(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = _coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise DomainError(f"division by interval containing zero: [{o.lo}, {o.hi}]")
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        pairs = ((a, c), (a, d), (b, c), (b, d))
        lo = min(div_down(x, y) for x, y in pairs)
        hi = max(div_up(x, y) for x, y in pairs)
        return Interval(lo, hi)

    def __rtruediv__(self, other) -> "Interval":
        return _coerce(other) / self

    def __pow__(self, n: int) -> "Interval":
        return pow_int(self, n)

    def __abs__(self) -> "Interval":
        return Interval(self.mig(), self.mag())

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, Fraction):
        return Interval.from_fraction(x)
    return Interval(float(x), float(x))


def interval_arith(op: str, a: Interval, b: Interval) -> Interval:
    """Dispatch helper used by tests and the CLI: op in add/sub/mul/div."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown interval op {op!r}")


# -- elementary functions -------------------------------------------------
# libm results are within 1 ulp on the platforms we target; two steps outward
# covers that.

def _down2(x: float) -> float:
    return down(down(x))


def _up2(x: float) -> float:
    return up(up(x))


def exp(a: Interval) -> Interval:
    if a.lo > 709.0:
        # e^709 is still finite; past it only the lower end can be kept finite
        return Interval(_down2(math.exp(709.0)), INF)
    lo = 0.0 if a.lo == -INF else max(0.0, _down2(math.exp(a.lo)))
    if a.lo == 0.0:
        lo = 1.0
    try:
        hi = _up2(math.exp(a.hi)) if a.hi != 0.0 else 1.0
    except OverflowError:
        hi = INF
    return Interval(lo, hi)


def sqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        raise DomainError(f"sqrt of interval with negative part: {a!r}")
    # math.sqrt is correctly rounded
    return Interval(_lower_sqrt(a.lo), _upper_sqrt(a.hi))


def _lower_sqrt(x: float) -> float:
    r = math.sqrt(x)
    return r if r * r == x else max(0.0, down(r))


def _upper_sqrt(x: float) -> float:
    r = math.sqrt(x)
    return r if r * r == x else up(r)


def pow_int(a: Interval, n: int) -> Interval:
    if n < 0:
        return Interval.point(1.0) / pow_int(a, -n)
    if n == 0:
        return Interval.point(1.0)
    if n % 2 == 1 or a.lo >= 0.0:
        return Interval(_monotone_pow(a.lo, n)[0], _monotone_pow(a.hi, n)[1])
    if a.hi <= 0.0:
        return pow_int(-a, n)
    m = max(-a.lo, a.hi)
    return Interval(0.0, _pow_pos_bounds(m, n)[1])


def _monotone_pow(x: float, n: int) -> tuple[float, float]:
    if x >= 0.0:
        return _pow_pos_bounds(x, n)
    lo, hi = _pow_pos_bounds(-x, n)
    return -hi, -lo


def _pow_pos_bounds(x: float, n: int) -> tuple[float, float]:
    lo = hi = 1.0
    for _ in range(n):
        lo = max(0.0, mul_down(lo, x))
        hi = mul_up(hi, x)
    return lo, hi


def _hits(a: Interval, offset: float) -> bool:
    """Does [a] contain a point offset*pi + 2*k*pi for some integer k?"""
    two_pi = Interval(2 * PI_LO, 2 * PI_HI)
    base = Interval(offset * PI_LO, offset * PI_HI) if offset >= 0 else Interval(offset * PI_HI, offset * PI_LO)
    k0 = math.floor((a.lo - offset * math.pi) / (2 * math.pi))
    k1 = math.ceil((a.hi - offset * math.pi) / (2 * math.pi))
    for k in range(k0 - 1, k1 + 2):
        if a.overlaps(base + two_pi * k):
            return True
    return False


def sin(a: Interval) -> Interval:
    if a.lo == a.hi == 0.0:
        return Interval(0.0, 0.0)
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)) or a.width >= 2 * PI_HI:
        return Interval(-1.0, 1.0)
    s0, s1 = math.sin(a.lo), math.sin(a.hi)
    lo = max(-1.0, _down2(min(s0, s1)))
    hi = min(1.0, _up2(max(s0, s1)))
    if _hits(a, 0.5):
        hi = 1.0
    if _hits(a, -0.5):
        lo = -1.0
    return Interval(lo, hi)


def cos(a: Interval) -> Interval:
    if a.lo == a.hi == 0.0:
        return Interval(1.0, 1.0)
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)) or a.width >= 2 * PI_HI:
        return Interval(-1.0, 1.0)
    c0, c1 = math.cos(a.lo), math.cos(a.hi)
    lo = max(-1.0, _down2(min(c0, c1)))
    hi = min(1.0, _up2(max(c0, c1)))
    if _hits(a, 0.0):
        hi = 1.0
    if _hits(a, 1.0):
        lo = -1.0
    return Interval(lo, hi)


def interval_transcendental(fn: str, a: Interval, n: int = 2) -> Interval:
    if fn == "exp":
        return exp(a)
    if fn == "sin":
        return sin(a)
    if fn == "cos":
        return cos(a)
    if fn == "sqrt":
        return sqrt(a)
    if fn == "pow_int":
        return pow_int(a, n)
    raise ValueError(f"unknown function {fn!r}")


class IntervalBox(tuple):
    """Immutable n-dimensional box; a tuple of :class:`Interval`."""

    def __new__(cls, components: Iterable[Interval]):
        comps = tuple(c if isinstance(c, Interval) else Interval(*c) for c in components)
        return super().__new__(cls, comps)

    @staticmethod
    def from_bounds(bounds: Sequence[Sequence[float]]) -> "IntervalBox":
        return IntervalBox(Interval(float(lo), float(hi)) for lo, hi in bounds)

    @staticmethod
    def from_point(x: Sequence[float]) -> "IntervalBox":
        return IntervalBox(Interval.point(v) for v in x)

    @property
    def dim(self) -> int:
        return len(self)

    def _check(self, other: "IntervalBox") -> None:
        if len(other) != len(self):
            raise DimensionError(f"box dimensions differ: {len(self)} vs {len(other)}")

    def hull(self, other: "IntervalBox") -> "IntervalBox":
        self._check(other)
        return IntervalBox(a.hull(b) for a, b in zip(self, other))

    def intersect(self, other: "IntervalBox") -> "IntervalBox":
        self._check(other)
        return IntervalBox(a.intersect(b) for a, b in zip(self, other))

    def widen(self, amount: Union[float, Sequence[float]]) -> "IntervalBox":
        if isinstance(amount, (int, float)):
            amount = [float(amount)] * len(self)
        if len(amount) != len(self):
            raise DimensionError("widen amounts do not match box dimension")
        return IntervalBox(a.widen(r) for a, r in zip(self, amount))

    def contains(self, other: Union["IntervalBox", Sequence[float]]) -> bool:
        if len(other) != len(self):
            raise DimensionError(f"box dimensions differ: {len(self)} vs {len(other)}")
        return all(a.contains(b) for a, b in zip(self, other))

    def widths(self) -> tuple[float, ...]:
        return tuple(a.width for a in self)

    def midpoint(self) -> tuple[float, ...]:
        return tuple(a.mid for a in self)

    def __repr__(self) -> str:
        return "IntervalBox(" + ", ".join(repr(c) for c in self) + ")"


def box_ops(op: str, a: IntervalBox, b=None):
    if op == "hull":
        return a.hull(b)
    if op == "intersect":
        return a.intersect(b)
    if op == "widen":
        return a.widen(b)
    if op == "contains":
        return a.contains(b)
    if op == "widths":
        return a.widths()
    raise ValueError(f"unknown box op {op!r}")
