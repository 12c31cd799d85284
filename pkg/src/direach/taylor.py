"""Sparse polynomial models over the unit cube with a uniform error bound.

A :class:`TaylorModel` with polynomial ``p`` and error ``e`` encloses every
function ``f`` on ``[-1, 1]^p`` with ``|f(s) - p(s)| <= e``.  Enclosure is
pointwise, so the calculus is valid for set-valued quantities as well: if
``u(s)`` lies in ``A(s)`` and ``v(s)`` lies in ``B(s)`` then ``u*v`` lies in
``(A*B)(s)``.

Monomials are stored flattened, ``(i0, k0, i1, k1, ...)`` with parameter
indices ascending, so the constant monomial is ``()``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .exceptions import DimensionError
from .interval import Interval, IntervalBox, down, up

Monomial = tuple

UNIT_ROUNDOFF = 2.0 ** -53
# Relative slack covering the rounding of the bookkeeping sums themselves
# (at most ~1e6 additions of non-negative terms per operation).
_BOOK = 1.0 + 1e-9
_TINY = 5e-324


def _ru(x: float) -> float:
    """Round a non-negative bookkeeping quantity up."""
    return x * _BOOK + _TINY if x > 0.0 else 0.0


@lru_cache(maxsize=1 << 20)
def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    la, lb = len(a), len(b)
    i = j = 0
    out = []
    while i < la and j < lb:
        ia, ib = a[i], b[j]
        if ia == ib:
            out.append(ia)
            out.append(a[i + 1] + b[j + 1])
            i += 2
            j += 2
        elif ia < ib:
            out.append(ia)
            out.append(a[i + 1])
            i += 2
        else:
            out.append(ib)
            out.append(b[j + 1])
            j += 2
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def mono_degree(m: Monomial) -> int:
    return sum(m[1::2])


def mono_is_even(m: Monomial) -> bool:
    return all(k % 2 == 0 for k in m[1::2])


@lru_cache(maxsize=1 << 20)
def _range_class(m: Monomial) -> int:
    """0 for the constant, 1 for a nonlinear all-even monomial (range [0, 1]), else 2."""
    if not m:
        return 0
    if (len(m) > 2 or m[1] > 1) and mono_is_even(m):
        return 1
    return 2


def mono_exponent(m: Monomial, index: int) -> int:
    for j in range(0, len(m), 2):
        if m[j] == index:
            return m[j + 1]
    return 0


def mono_params(m: Monomial) -> tuple[int, ...]:
    return m[0::2]


def mono_from_exponents(exponents: Sequence[int]) -> Monomial:
    out = []
    for i, k in enumerate(exponents):
        if k:
            out.append(i)
            out.append(int(k))
    return tuple(out)


def mono_to_exponents(m: Monomial, num_params: int) -> tuple[int, ...]:
    e = [0] * num_params
    for j in range(0, len(m), 2):
        e[m[j]] = m[j + 1]
    return tuple(e)


class TaylorModel:
    """Polynomial on ``[-1, 1]^num_params`` plus a non-negative error bound.

    Values are treated as immutable; every operation returns a new model.
    """

    __slots__ = ("num_params", "terms", "error", "sweep_threshold")

    def __init__(
        self,
        num_params: int,
        terms: Mapping[Monomial, float] | None = None,
        error: float = 0.0,
        sweep_threshold: float = 0.0,
    ):
        if error < 0.0 or error != error:
            raise ValueError(f"Taylor model error must be non-negative, got {error}")
        self.num_params = int(num_params)
        self.terms = {m: float(c) for m, c in (terms or {}).items() if c != 0.0}
        self.error = float(error)
        self.sweep_threshold = float(sweep_threshold)

    @classmethod
    def _raw(cls, num_params: int, terms: dict, error: float, sweep_threshold: float) -> "TaylorModel":
        tm = object.__new__(cls)
        tm.num_params = num_params
        tm.terms = terms
        tm.error = error
        tm.sweep_threshold = sweep_threshold
        return tm

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value: float, num_params: int, sweep_threshold: float = 0.0) -> "TaylorModel":
        return cls._raw(num_params, {(): float(value)} if value else {}, 0.0, sweep_threshold)

    @classmethod
    def from_interval(cls, value: Interval, num_params: int, sweep_threshold: float = 0.0) -> "TaylorModel":
        m = value.mid
        return cls._raw(num_params, {(): m} if m else {}, value.rad, sweep_threshold)

    @classmethod
    def variable(
        cls,
        index: int,
        num_params: int,
        scale: float = 1.0,
        center: float = 0.0,
        sweep_threshold: float = 0.0,
    ) -> "TaylorModel":
        """The affine map ``center + scale * s_index``."""
        if not 0 <= index < num_params:
            raise DimensionError(f"parameter index {index} out of range for {num_params} parameters")
        terms = {}
        if center:
            terms[()] = float(center)
        if scale:
            terms[(index, 1)] = float(scale)
        return cls._raw(num_params, terms, 0.0, sweep_threshold)

    @classmethod
    def from_exponents(
        cls, num_params: int, coeffs: Mapping[Sequence[int], float], error: float = 0.0,
        sweep_threshold: float = 0.0,
    ) -> "TaylorModel":
        terms = {}
        for exps, c in coeffs.items():
            if len(exps) != num_params:
                raise DimensionError("exponent tuple length does not match num_params")
            terms[mono_from_exponents(exps)] = float(c)
        return cls(num_params, terms, error, sweep_threshold)

    def with_threshold(self, sweep_threshold: float) -> "TaylorModel":
        return TaylorModel._raw(self.num_params, dict(self.terms), self.error, sweep_threshold)

    def with_error(self, error: float) -> "TaylorModel":
        return TaylorModel(self.num_params, self.terms, error, self.sweep_threshold)

    # -- inspection ---------------------------------------------------------
    @property
    def constant_term(self) -> float:
        return self.terms.get((), 0.0)

    def __len__(self) -> int:
        return len(self.terms)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], float]]:
        items = [(mono_to_exponents(m, self.num_params), c) for m, c in self.terms.items()]
        items.sort()
        return items

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def coefficient_sum(self) -> float:
        return _ru(math.fsum(abs(c) for c in self.terms.values()))

    def __repr__(self) -> str:
        return f"TaylorModel(p={self.num_params}, terms={len(self.terms)}, error={self.error:.3e})"

    def to_debug_string(self) -> str:
        """One term per line as ``exponents : coefficient``, then ``error : e``."""
        lines = []
        for exps, c in self.sorted_terms():
            lines.append(",".join(str(k) for k in exps) + " : " + repr(c))
        lines.append("error : " + repr(self.error))
        return "\n".join(lines)

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, s: Sequence[float]) -> float:
        """Floating-point value of the polynomial part at ``s`` (not validated)."""
        vals = []
        for m, c in self.terms.items():
            v = c
            for j in range(0, len(m), 2):
                v *= s[m[j]] ** m[j + 1]
            vals.append(v)
        return math.fsum(vals)

    def enclosure(self, s: Sequence[float]) -> Interval:
        """Interval containing every value the model admits at ``s``."""
        vals = []
        mag = 0.0
        deg = 1
        for m, c in self.terms.items():
            v = c
            for j in range(0, len(m), 2):
                v *= s[m[j]] ** m[j + 1]
            vals.append(v)
            mag += abs(v)
            deg = max(deg, mono_degree(m))
        centre = math.fsum(vals)
        slack = _ru(mag * UNIT_ROUNDOFF * (deg + 4) + self.error)
        return Interval(down(centre - slack), up(centre + slack))

    def bound(self) -> Interval:
        """Range enclosure: constant and linear terms exactly, others by magnitude.

        Monomials with only even exponents range over ``[0, 1]``.
        """
        lo_parts = [self.terms.get((), 0.0)]
        hi_parts = [lo_parts[0]]
        for m, c in self.terms.items():
            kind = _range_class(m)
            if kind == 0:
                continue
            if kind == 1:
                (hi_parts if c > 0 else lo_parts).append(c)
                continue
            a = abs(c)
            hi_parts.append(a)
            lo_parts.append(-a)
        lo = math.fsum(lo_parts)
        hi = math.fsum(hi_parts)
        lo = down(lo) if len(lo_parts) > 1 else lo
        hi = up(hi) if len(hi_parts) > 1 else hi
        if self.error:
            lo = down(lo - self.error)
            hi = up(hi + self.error)
        return Interval(lo, hi)

    def poly_magnitude(self) -> float:
        b = self.without_error().bound()
        return b.mag()

    def without_error(self) -> "TaylorModel":
        return TaylorModel._raw(self.num_params, self.terms, 0.0, self.sweep_threshold)

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "TaylorModel") -> None:
        if other.num_params != self.num_params:
            raise DimensionError(
                f"Taylor models live in different parameter spaces ({self.num_params} vs {other.num_params})"
            )

    def __add__(self, other) -> "TaylorModel":
        if isinstance(other, Interval):
            return self + TaylorModel.from_interval(other, self.num_params, self.sweep_threshold)
        if not isinstance(other, TaylorModel):
            return self.add_constant(float(other))
        self._check(other)
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        acc = 0.0
        for m, c in small.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                s = v + c
                acc += abs(s)
                if s == 0.0:
                    del out[m]
                else:
                    out[m] = s
        err = _ru(self.error + other.error + acc * UNIT_ROUNDOFF)
        return TaylorModel._raw(self.num_params, out, err, self.sweep_threshold)

    __radd__ = __add__

    def add_constant(self, value: float) -> "TaylorModel":
        if value == 0.0:
            return self
        out = dict(self.terms)
        v = out.get(())
        err = self.error
        if v is None:
            out[()] = value
        else:
            s = v + value
            err = _ru(err + abs(s) * UNIT_ROUNDOFF)
            if s == 0.0:
                del out[()]
            else:
                out[()] = s
        return TaylorModel._raw(self.num_params, out, err, self.sweep_threshold)

    def __neg__(self) -> "TaylorModel":
        return TaylorModel._raw(
            self.num_params, {m: -c for m, c in self.terms.items()}, self.error, self.sweep_threshold
        )

    def __sub__(self, other) -> "TaylorModel":
        if isinstance(other, (TaylorModel, Interval)):
            return self + (-other)
        return self.add_constant(-float(other))

    def __rsub__(self, other) -> "TaylorModel":
        return (-self) + other

    def scale(self, factor: float) -> "TaylorModel":
        factor = float(factor)
        if factor == 0.0:
            return TaylorModel._raw(self.num_params, {}, 0.0, self.sweep_threshold)
        if factor == 1.0:
            return self
        if factor == -1.0:
            return -self
        out = {}
        acc = 0.0
        for m, c in self.terms.items():
            v = c * factor
            out[m] = v
            acc += abs(v)
        err = _ru(self.error * abs(factor) + acc * UNIT_ROUNDOFF)
        return TaylorModel._raw(self.num_params, out, err, self.sweep_threshold)

    def scale_interval(self, factor: Interval) -> "TaylorModel":
        """Multiply by an uncertain constant: midpoint scaling plus radius times magnitude."""
        base = self.scale(factor.mid)
        extra = factor.rad * self.bound().mag()
        if extra == 0.0:
            return base
        return TaylorModel._raw(base.num_params, base.terms, _ru(base.error + extra), base.sweep_threshold)

    def __mul__(self, other) -> "TaylorModel":
        if isinstance(other, Interval):
            return self.scale_interval(other)
        if not isinstance(other, TaylorModel):
            return self.scale(other)
        self._check(other)
        return _multiply(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "TaylorModel":
        if n < 0:
            raise ValueError("negative powers are not supported on Taylor models")
        result = TaylorModel.constant(1.0, self.num_params, self.sweep_threshold)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- structural operations ----------------------------------------------
    def sweep(self, threshold: float | None = None) -> "TaylorModel":
        """Move every term with ``|c| < threshold`` into the error bound."""
        thr = self.sweep_threshold if threshold is None else threshold
        if thr <= 0.0:
            return self
        kept = {}
        swept = 0.0
        for m, c in self.terms.items():
            if abs(c) < thr:
                swept += abs(c)
            else:
                kept[m] = c
        if swept == 0.0:
            return self
        return TaylorModel._raw(self.num_params, kept, _ru(self.error + swept), self.sweep_threshold)

    def antiderive(self, index: int, radius: float) -> "TaylorModel":
        """Integral from 0 to ``tau`` where ``tau = radius * s_index``."""
        if not 0 <= index < self.num_params:
            raise DimensionError(f"parameter index {index} out of range for {self.num_params} parameters")
        out = {}
        acc = 0.0
        for m, c in self.terms.items():
            k = mono_exponent(m, index)
            v = c * radius / (k + 1)
            out[mono_mul(m, (index, 1))] = v
            acc += abs(v)
        err = _ru(self.error * abs(radius) + 3 * acc * UNIT_ROUNDOFF)
        return TaylorModel._raw(self.num_params, out, err, self.sweep_threshold)

    def substitute(self, index: int, value: float) -> "TaylorModel":
        """Fix ``s_index = value`` (|value| <= 1); the parameter stays but is unused."""
        return self._partial(index, value, drop=False)

    def eliminate(self, index: int, value: float) -> "TaylorModel":
        """Fix ``s_index = value`` and remove the parameter, shifting later indices down."""
        return self._partial(index, value, drop=True)

    def _partial(self, index: int, value: float, drop: bool) -> "TaylorModel":
        if not 0 <= index < self.num_params:
            raise DimensionError(f"parameter index {index} out of range for {self.num_params} parameters")
        if abs(value) > 1.0:
            raise ValueError("substituted value must lie in [-1, 1]")
        out = {}
        acc = 0.0
        exact = value in (-1.0, 0.0, 1.0)
        for m, c in self.terms.items():
            k = 0
            rest = []
            for j in range(0, len(m), 2):
                i = m[j]
                if i == index:
                    k = m[j + 1]
                else:
                    rest.append(i - 1 if (drop and i > index) else i)
                    rest.append(m[j + 1])
            if k:
                if value == 0.0:
                    continue
                v = c * value ** k
                if not exact:
                    acc += abs(v) * (k + 1)
            else:
                v = c
            key = tuple(rest)
            prev = out.get(key)
            if prev is None:
                out[key] = v
            else:
                s = prev + v
                acc += abs(s)
                out[key] = s
        out = {m: c for m, c in out.items() if c != 0.0}
        err = _ru(self.error + acc * UNIT_ROUNDOFF)
        p = self.num_params - 1 if drop else self.num_params
        return TaylorModel._raw(p, out, err, self.sweep_threshold)

    def embed(self, num_params: int) -> "TaylorModel":
        """Same model viewed in a larger parameter space (new parameters appended)."""
        if num_params < self.num_params:
            raise DimensionError("cannot embed into a smaller parameter space")
        return TaylorModel._raw(num_params, self.terms, self.error, self.sweep_threshold)

    def reindex(self, mapping: Mapping[int, int], num_params: int) -> "TaylorModel":
        """Rename parameters; every used parameter must appear in ``mapping``."""
        out = {}
        for m, c in self.terms.items():
            pairs = sorted((mapping[m[j]], m[j + 1]) for j in range(0, len(m), 2))
            out[tuple(x for pair in pairs for x in pair)] = c
        return TaylorModel._raw(num_params, out, self.error, self.sweep_threshold)

    def parameter_masses(self) -> dict[int, float]:
        mass: dict[int, float] = {}
        for m, c in self.terms.items():
            a = abs(c)
            for j in range(0, len(m), 2):
                mass[m[j]] = mass.get(m[j], 0.0) + a
        return mass


def _sorted_operand(b: TaylorModel) -> tuple:
    """Terms by decreasing magnitude, with the magnitudes, their negations and tail sums."""
    B = sorted(b.terms.items(), key=lambda kv: -abs(kv[1]))
    babs = [abs(c) for _, c in B]
    neg_babs = [-x for x in babs]
    tails = [0.0] * (len(B) + 1)
    run = 0.0
    for k in range(len(B) - 1, -1, -1):
        run += babs[k]
        tails[k] = run
    return B, babs, neg_babs, tails


def _multiply(
    a: TaylorModel,
    b: TaylorModel,
    threshold: float | None = None,
    mag_a: float | None = None,
    mag_b: float | None = None,
    b_sorted: tuple | None = None,
) -> TaylorModel:
    # mag_a / mag_b: known upper bounds on the polynomial magnitudes, if the caller has them;
    # b_sorted: _sorted_operand(b) when b is reused across many products
    thr = a.sweep_threshold if threshold is None else threshold
    p = a.num_params
    if mag_a is None:
        mag_a = a.poly_magnitude() if b.error else 0.0
    if mag_b is None:
        mag_b = b.poly_magnitude() if a.error else 0.0
    if not a.terms or not b.terms:
        err = _ru(a.error * (mag_b + b.error) + b.error * mag_a)
        return TaylorModel._raw(p, {}, err, a.sweep_threshold)
    A = sorted(a.terms.items(), key=lambda kv: -abs(kv[1]))
    B, babs, neg_babs, tails = b_sorted if b_sorted is not None else _sorted_operand(b)
    lb = len(B)
    out: dict = {}
    get = out.get
    acc = 0.0
    swept = 0.0
    for ma, ca in A:
        aca = abs(ca)
        if thr > 0.0:
            j = bisect_right(neg_babs, -(thr / aca))
            # guard against the division rounding the cutoff the wrong way
            while j < lb and aca * babs[j] >= thr:
                j += 1
            while j > 0 and aca * babs[j - 1] < thr:
                j -= 1
            if j < lb:
                swept += aca * tails[j]
        else:
            j = lb
        for k in range(j):
            mb, cb = B[k]
            v = ca * cb
            m = mono_mul(ma, mb)
            prev = get(m)
            if prev is None:
                out[m] = v
                acc += abs(v)
            else:
                s = prev + v
                out[m] = s
                acc += abs(v) + abs(s)
    if thr > 0.0:
        kept = {}
        for m, c in out.items():
            if abs(c) < thr:
                swept += abs(c)
            else:
                kept[m] = c
        out = kept
    else:
        out = {m: c for m, c in out.items() if c != 0.0}
    err = swept + 2.0 * acc * UNIT_ROUNDOFF
    if a.error:
        err += a.error * (mag_b + b.error)
    if b.error:
        err += b.error * mag_a
    return TaylorModel._raw(p, out, _ru(_ru(err)), a.sweep_threshold)


def multiply(a: TaylorModel, b: TaylorModel, threshold: float | None = None) -> TaylorModel:
    """Product with an explicit pruning threshold (defaults to ``a.sweep_threshold``)."""
    a._check(b)
    return _multiply(a, b, threshold)


def linear_combination(
    pairs: Iterable[tuple[float, TaylorModel]], num_params: int, sweep_threshold: float = 0.0
) -> TaylorModel:
    """``sum c_j M_j`` accumulated in one pass, then swept."""
    out: dict = {}
    get = out.get
    acc = 0.0
    err = 0.0
    for c, M in pairs:
        if M.num_params != num_params:
            raise DimensionError("linear combination over different parameter spaces")
        ac = abs(c)
        err += ac * M.error
        for m, v in M.terms.items():
            w = c * v
            prev = get(m)
            if prev is None:
                out[m] = w
                acc += abs(w)
            else:
                s = prev + w
                out[m] = s
                acc += abs(w) + abs(s)
    swept = 0.0
    if sweep_threshold > 0.0:
        kept = {}
        for m, v in out.items():
            if abs(v) < sweep_threshold:
                swept += abs(v)
            else:
                kept[m] = v
        out = kept
    else:
        out = {m: v for m, v in out.items() if v != 0.0}
    total = _ru(_ru(err + swept + 2.0 * acc * UNIT_ROUNDOFF))
    return TaylorModel._raw(num_params, out, total, sweep_threshold)


def compose(
    outer: Sequence[TaylorModel], subs: Sequence[TaylorModel], sweep_threshold: float | None = None
) -> list[TaylorModel]:
    """Substitute model ``subs[i]`` for parameter ``i`` of every ``outer`` model.

    Every ``subs[i]`` must take values in ``[-1, 1]``.  Monomial products are
    pruned with the threshold divided by the largest coefficient that will
    multiply them, so the neglected mass stays at the sweep level.
    """
    if not outer:
        return []
    k = outer[0].num_params
    if len(subs) != k:
        raise DimensionError(f"need {k} substitution models, got {len(subs)}")
    P = subs[0].num_params
    thr = outer[0].sweep_threshold if sweep_threshold is None else sweep_threshold
    weight: dict[tuple, float] = {}

    def factors(m: Monomial) -> tuple:
        seq = []
        for j in range(0, len(m), 2):
            seq.extend([m[j]] * m[j + 1])
        return tuple(seq)

    for f in outer:
        for m, c in f.terms.items():
            seq = factors(m)
            a = abs(c)
            for j in range(1, len(seq) + 1):
                key = seq[:j]
                if weight.get(key, 0.0) < a:
                    weight[key] = a
    products: dict[tuple, TaylorModel] = {(): TaylorModel.constant(1.0, P, thr)}
    # the stored polynomial of a product differs from the exact product of its
    # factors' polynomials by at most the product's error
    mags: dict[tuple, float] = {(): 1.0}
    sub_mags = {}
    sub_sorted = {}
    for key in sorted(weight, key=len):
        base = products[key[:-1]]
        last = key[-1]
        nxt = subs[last]
        if last not in sub_mags:
            sub_mags[last] = nxt.poly_magnitude()
            sub_sorted[last] = _sorted_operand(nxt)
        if not key[:-1]:
            products[key] = nxt
            mags[key] = sub_mags[last]
        else:
            t = thr / weight[key] if thr > 0.0 else 0.0
            prod = _multiply(base, nxt, t, mags[key[:-1]], sub_mags[last], sub_sorted[last])
            products[key] = prod
            mags[key] = _ru(_ru(mags[key[:-1]] * sub_mags[last]) + prod.error)
    out = []
    for f in outer:
        pairs = [(c, products[factors(m)]) for m, c in f.terms.items()]
        tm = linear_combination(pairs, P, thr)
        out.append(TaylorModel._raw(P, tm.terms, _ru(tm.error + f.error), thr))
    return out


class TaylorModelVector:
    """Components sharing one parameter space; represents ``{h(s) +- e}``."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[TaylorModel]):
        comps = tuple(components)
        if comps:
            p = comps[0].num_params
            thr = comps[0].sweep_threshold
            for c in comps:
                if c.num_params != p:
                    raise DimensionError("components of a Taylor model vector must share num_params")
                if c.sweep_threshold != thr:
                    raise DimensionError("components of a Taylor model vector must share sweep_threshold")
        self.components = comps

    @classmethod
    def from_box(cls, box: IntervalBox, sweep_threshold: float = 0.0) -> "TaylorModelVector":
        """One parameter per non-degenerate coordinate of ``box``."""
        wide = [i for i, c in enumerate(box) if c.lo != c.hi]
        p = len(wide)
        comps = []
        for i, c in enumerate(box):
            if c.lo == c.hi:
                comps.append(TaylorModel.constant(c.lo, p, sweep_threshold))
            else:
                j = wide.index(i)
                # mid + rad*s covers c; rounding of mid absorbed by rad (rounded up)
                comps.append(TaylorModel.variable(j, p, c.rad, c.mid, sweep_threshold))
        return cls(comps)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[TaylorModel]:
        return iter(self.components)

    def __getitem__(self, i: int) -> TaylorModel:
        return self.components[i]

    @property
    def num_params(self) -> int:
        return self.components[0].num_params if self.components else 0

    @property
    def sweep_threshold(self) -> float:
        return self.components[0].sweep_threshold if self.components else 0.0

    @property
    def errors(self) -> tuple[float, ...]:
        return tuple(c.error for c in self.components)

    def bound(self) -> IntervalBox:
        return IntervalBox(c.bound() for c in self.components)

    def map(self, fn: Callable[[TaylorModel], TaylorModel]) -> "TaylorModelVector":
        return TaylorModelVector(fn(c) for c in self.components)

    def embed(self, num_params: int) -> "TaylorModelVector":
        return self.map(lambda c: c.embed(num_params))

    def enclosure(self, s: Sequence[float]) -> IntervalBox:
        return IntervalBox(c.enclosure(s) for c in self.components)

    def inflate(self, amounts: Sequence[float]) -> "TaylorModelVector":
        return TaylorModelVector(
            c.with_error(_ru(c.error + float(a))) for c, a in zip(self.components, amounts)
        )

    def to_debug_string(self) -> str:
        return "\n".join(f"# component {i}\n{c.to_debug_string()}" for i, c in enumerate(self.components))


def extract_error_parameters(v: TaylorModelVector) -> TaylorModelVector:
    """Turn each component's error into a fresh parameter: ``p +- e -> p + e*s_new``."""
    n = len(v)
    p = v.num_params
    out = []
    for i, c in enumerate(v.components):
        terms = dict(c.terms)
        if c.error > 0.0:
            terms[(p + i, 1)] = c.error
        out.append(TaylorModel._raw(p + n, terms, 0.0, c.sweep_threshold))
    return TaylorModelVector(out)


def simplify_parameters(v: TaylorModelVector, keep: int) -> TaylorModelVector:
    """Keep the ``keep`` parameters with largest coefficient mass; sweep the rest.

    Ties are broken in favour of the lower (older) parameter index.
    """
    p = v.num_params
    if keep >= p:
        return v
    mass = [0.0] * p
    for c in v.components:
        for i, w in c.parameter_masses().items():
            mass[i] += w
    ranked = sorted(range(p), key=lambda i: (-mass[i], i))
    kept = sorted(ranked[:max(keep, 0)])
    mapping = {old: new for new, old in enumerate(kept)}
    out = []
    for c in v.components:
        terms = {}
        dropped = 0.0
        for m, coef in c.terms.items():
            if all(m[j] in mapping for j in range(0, len(m), 2)):
                terms[m] = coef
            else:
                dropped += abs(coef)
        tm = TaylorModel._raw(p, terms, _ru(c.error + dropped), c.sweep_threshold)
        out.append(tm.reindex(mapping, len(kept)))
    return TaylorModelVector(out)
