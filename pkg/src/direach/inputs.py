"""Finitely parameterised stand-ins for the bounded inputs over one step.

Every family is written in unit parameters ``s_a, s_b`` in ``[-1, 1]`` and the
scaled time ``s_t`` with ``t = t_k + (h/2)(1 + s_t)``:

* zero:      ``w = 0``
* constant:  ``w = V s_a``
* affine:    ``w = V s_a + (3/2) V (1 - s_a^2) s_b s_t``
* sinusoid:  ``w = V s_a + p V (1 - s_a^2) s_b sin(gamma s_t / 2)``
* pwc:       ``a0 = V (s_a - (1 - s_a^2) s_b)`` then ``a1 = V (s_a + (1 - s_a^2) s_b)``

With ``mu0 = V s_a`` and ``mu1 = V (1 - s_a^2) s_b`` these reproduce the mean
``mu0`` and the normalised first moment ``(4/h^2) int (t - t_mid) w dt = mu1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from scipy.optimize import minimize_scalar

from . import interval as iv
from .interval import Interval
from .taylor import TaylorModel


@dataclass(frozen=True)
class ApproximationKind:
    tag: str
    letter: str
    params_per_input: int
    amplitude_factor: float
    formula_r: float

    def __str__(self) -> str:
        return self.tag


SINUSOID_GAMMA = 4.163152
SINUSOID_BOUND = 1.364402

ZERO = ApproximationKind("zero", "Z", 0, 0.0, 0.0)
CONSTANT = ApproximationKind("constant", "C", 1, 1.0, 1.0)
AFFINE = ApproximationKind("affine", "A", 2, 5.0 / 3.0, iv.up(5.0 / 3.0))
SINUSOIDAL = ApproximationKind("sinusoidal", "S", 2, SINUSOID_BOUND, 1.3645)
PIECEWISE_CONSTANT = ApproximationKind("pwc", "P", 2, 1.25, 1.25)

KINDS = (ZERO, CONSTANT, AFFINE, SINUSOIDAL, PIECEWISE_CONSTANT)
_BY_NAME = {k.tag: k for k in KINDS}
_BY_NAME.update({"piecewise_constant": PIECEWISE_CONSTANT, "sinusoid": SINUSOIDAL, "sin": SINUSOIDAL})


def kind_by_name(name: str) -> ApproximationKind:
    key = name.strip().lower()
    if key in _BY_NAME:
        return _BY_NAME[key]
    for k in KINDS:
        if key == k.letter.lower():
            return k
    raise ValueError(f"unknown approximation kind '{name}' (choose from {', '.join(k.tag for k in KINDS)})")


def _p_of_gamma(g: float) -> float:
    half = g / 2
    return (g / 4) / (math.sin(half) / half - math.cos(half))


@lru_cache(maxsize=None)
def sinusoid_constants() -> tuple[float, float, float]:
    """Minimiser of ``p(g) + 1/(4 p(g))``: returns ``(gamma, p(gamma), bound)``."""
    res = minimize_scalar(lambda g: _p_of_gamma(g) + 1 / (4 * _p_of_gamma(g)),
                          bracket=(3.0, 4.0, 5.0), tol=1e-12)
    g = float(res.x)
    p = _p_of_gamma(g)
    return g, p, p + 1 / (4 * p)


def p_gamma_enclosure(gamma: float = SINUSOID_GAMMA) -> Interval:
    """Validated ``p(gamma) = (gamma/4) / (sin(gamma/2)/(gamma/2) - cos(gamma/2))``."""
    g = Interval.point(gamma)
    half = g / 2
    denom = iv.sin(half) / half - iv.cos(half)
    return (g / 4) / denom


_ORDER3_PUBLISHED_DEGREE = {1: 1, 2: 2, 3: 2, 4: 3, 5: 3, 6: 4, 10: 5}


def order3_parameter_law(m: int) -> tuple[int, int]:
    """Parameter count and polynomial degree needed for third-order local error.

    Total parameters are ``m(m+3)/2``.  The degree follows the published
    table where it is tabulated and ``ceil((m+1)/2)`` elsewhere; the two
    disagree at ``m = 10`` (table: 5, closed form: 6).
    """
    if m < 1:
        raise ValueError("need at least one input")
    total = m * (m + 3) // 2
    degree = _ORDER3_PUBLISHED_DEGREE.get(m, (m + 2) // 2)
    return total, degree


def order3_degree_closed_form(m: int) -> int:
    return (m + 2) // 2


@dataclass(frozen=True)
class InputRealization:
    """Input models for one step.

    ``segments`` holds one tuple of ``m`` models per time segment; segment
    ``j`` spans the fraction ``spans[j]`` of the step.  Models of single
    segment kinds may depend on the time parameter; pwc segments do not.
    """

    kind: ApproximationKind
    segments: tuple[tuple[TaylorModel, ...], ...]
    spans: tuple[tuple[float, float], ...]
    param_offset: int
    time_index: int

    @property
    def num_added_params(self) -> int:
        if not self.segments or not self.segments[0]:
            return 0
        return self.kind.params_per_input * len(self.segments[0])


@lru_cache(maxsize=64)
def _sin_series(order: int, gamma: float) -> tuple[tuple[tuple[int, float], ...], float]:
    """Coefficients of ``sin(gamma u / 2)`` in ``u`` with a bound on the discarded part.

    Returns ``((k, c_k), ...)`` and an error bound valid for ``|u| <= 1``,
    which covers coefficient rounding and the Lagrange remainder.
    """
    half = Interval.point(gamma) / 2
    coeffs = []
    err = 0.0
    power = Interval.point(1.0)
    fact = Interval.point(1.0)
    for k in range(1, order + 1):
        power = power * half
        fact = fact * k
        if k % 2 == 1:
            c = power / fact
            if (k // 2) % 2 == 1:
                c = -c
            coeffs.append((k, c.mid))
            err = iv.add_up(err, c.rad)
    power = power * half
    fact = fact * (order + 1)
    err = iv.add_up(err, (power / fact).hi)
    return tuple(coeffs), err


SIN_SERIES_ORDER = 21


def realize_inputs(
    kind: ApproximationKind,
    V: Sequence,
    h: float,
    num_params: int,
    param_offset: int,
    time_index: int,
    sweep_threshold: float = 0.0,
) -> InputRealization:
    """Models of ``w_i`` in a parameter space of size ``num_params``.

    Input ``i`` uses parameters ``param_offset + l*i + j`` for ``j < l``; the
    time parameter lives at ``time_index``.  ``V`` entries may be Fractions,
    floats or Intervals; they are enclosed exactly.
    """
    m = len(V)
    ell = kind.params_per_input
    Vi = [v if isinstance(v, Interval) else iv._coerce(v) for v in V]
    P = num_params
    thr = sweep_threshold
    spans_full = ((0.0, 1.0),)
    if kind is ZERO or m == 0:
        zero = tuple(TaylorModel.constant(0.0, P, thr) for _ in range(m))
        return InputRealization(kind, (zero,), spans_full, param_offset, time_index)

    def s(i: int, j: int) -> TaylorModel:
        return TaylorModel.variable(param_offset + ell * i + j, P, sweep_threshold=thr)

    if kind is CONSTANT:
        ws = tuple(s(i, 0).scale_interval(Vi[i]) for i in range(m))
        return InputRealization(kind, (ws,), spans_full, param_offset, time_index)

    st = TaylorModel.variable(time_index, P, sweep_threshold=thr)
    out_a, out_b = [], []
    for i in range(m):
        sa, sb = s(i, 0), s(i, 1)
        spread = sb - sa * sa * sb  # (1 - s_a^2) s_b
        if kind is AFFINE:
            w = sa + (spread * st).scale(1.5)
            out_a.append(w.scale_interval(Vi[i]))
        elif kind is SINUSOIDAL:
            coeffs, err = _sin_series(SIN_SERIES_ORDER, SINUSOID_GAMMA)
            terms = {(time_index, k): c for k, c in coeffs}
            sin_tm = TaylorModel(P, terms, err, thr)
            # the interval factor covers the exact p(gamma), not just its float
            w = sa + (spread * sin_tm).scale_interval(p_gamma_enclosure())
            out_a.append(w.scale_interval(Vi[i]))
        elif kind is PIECEWISE_CONSTANT:
            out_a.append((sa - spread).scale_interval(Vi[i]))
            out_b.append((sa + spread).scale_interval(Vi[i]))
        else:
            raise ValueError(f"unsupported kind {kind}")
    if kind is PIECEWISE_CONSTANT:
        return InputRealization(kind, (tuple(out_a), tuple(out_b)), ((0.0, 0.5), (0.5, 1.0)),
                                param_offset, time_index)
    return InputRealization(kind, (tuple(out_a),), spans_full, param_offset, time_index)


def input_value(kind: ApproximationKind, V: float, sa: float, sb: float, u: float) -> float:
    """Plain float value of the realised input at relative time ``u`` in [0, 1]."""
    if kind is ZERO:
        return 0.0
    if kind is CONSTANT:
        return V * sa
    spread = (1 - sa * sa) * sb
    st = 2 * u - 1
    if kind is AFFINE:
        return V * (sa + 1.5 * spread * st)
    if kind is SINUSOIDAL:
        return V * (sa + _p_of_gamma(SINUSOID_GAMMA) * spread * math.sin(SINUSOID_GAMMA * st / 2))
    if kind is PIECEWISE_CONSTANT:
        return V * (sa - spread) if u < 0.5 else V * (sa + spread)
    raise ValueError(kind)
