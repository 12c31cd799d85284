"""Closed-form bounds on ``|x(t_{k+1}) - y(t_{k+1})|`` for one step.

``x`` solves the inclusion with an arbitrary admissible input and ``y`` the
auxiliary system whose input is the family member matching the moments of
that input.  Every bound is evaluated in interval arithmetic and the upper
endpoint is reported.
"""

from __future__ import annotations

import enum

from .bounds import NormBounds, compute_bounds, phi_upper
from .exceptions import StepTooLarge
from .inputs import CONSTANT, ZERO, ApproximationKind
from .interval import Interval, IntervalBox, div_up, up
from .system import InputAffineSystem


class ErrorFormula(enum.Enum):
    FirstOrderZero = "first_order_zero"
    SecondOrderConstant = "second_order_constant"
    MixedTwoParam = "mixed_two_param"
    AdditiveThirdOrder = "additive_third_order"
    SingleInputThirdOrder = "single_input_third_order"


def classify_system(system: InputAffineSystem, kind: ApproximationKind) -> ErrorFormula:
    if kind is ZERO:
        return ErrorFormula.FirstOrderZero
    if kind is CONSTANT:
        return ErrorFormula.SecondOrderConstant
    if system.additive:
        return ErrorFormula.AdditiveThirdOrder
    if system.m == 1:
        return ErrorFormula.SingleInputThirdOrder
    return ErrorFormula.MixedTwoParam


# The printed mixed bound carries (h^2/4)(1+r^2) L'K'; the term it comes from
# integrates to (h^2/2)(1+r^2) L'K', so the larger constant is used.
MIXED_H2_COEFFICIENT = 0.5


def _phi(b: NormBounds, h: Interval) -> Interval:
    return phi_upper(Interval.point(b.Lambda) * h)


def analytic_error(formula: ErrorFormula, b: NormBounds, h: float) -> float:
    if h <= 0:
        raise ValueError("step size must be positive")
    I = Interval.point
    H_ = I(h)
    K, Kp, L, Lp, H, Hp, r = (I(x) for x in (b.K, b.Kp, b.L, b.Lp, b.H, b.Hp, b.r))
    phi = _phi(b, H_)
    one = I(1.0)
    if formula is ErrorFormula.FirstOrderZero:
        a = H_ * Kp * phi
        c = H_ * (2 * K + Kp)
        return min(a.hi, c.hi)
    if formula is ErrorFormula.SecondOrderConstant:
        val = H_ ** 2 * ((K + Kp) * Lp / 3 + 2 * Kp * (L + Lp) * phi)
        return val.hi
    h2 = H_ ** 2
    h3 = H_ ** 3
    if formula is ErrorFormula.AdditiveThirdOrder:
        pre = one - H_ * L / 2
        rhs = (h3 / 8) * (1 + r) * Kp * H * (K + Kp) \
            + (h3 / 4) * (1 + r) * Kp * (L ** 2 + H * (K + r * Kp)) * phi
    else:
        pre = one - H_ * L / 2 - H_ * r * Lp
        core = (h3 / 4) * (1 + r) * Kp * (
            (2 * r * Hp + H) * (K + r * Kp) + L ** 2 + (3 * r * L + 2 * r ** 2 * Lp) * Lp
        ) * phi
        if formula is ErrorFormula.MixedTwoParam:
            rhs = MIXED_H2_COEFFICIENT * h2 * (1 + r ** 2) * Lp * Kp + core \
                + (h3 / 24) * (1 + r) * (K + Kp) * (3 * (H * Kp + L * Lp) + 4 * (Hp * K + L * Lp))
        elif formula is ErrorFormula.SingleInputThirdOrder:
            rhs = core + (h3 / 24) * (K + Kp) * (
                (1 + r) * (3 * (H * Kp + L * Lp) + 4 * (Hp * K + L * Lp))
                + 8 * (1 + r ** 2) * (Hp * Kp + Lp ** 2)
            )
        else:  # pragma: no cover
            raise ValueError(formula)
    if pre.lo <= 0.0:
        raise StepTooLarge(
            f"{formula.value}: prefactor 1 - Lh/2 - hrL' = {pre.lo:.3g} is not positive at h={h}"
        )
    return div_up(rhs.hi, pre.lo)


def generic_error(b: NormBounds, h: float) -> float:
    """First-order bound ``h (1 + r) K' phi(Lambda h)``, valid for any ``|w_i| <= r V_i``."""
    H_ = Interval.point(h)
    val = H_ * (1 + Interval.point(b.r)) * Interval.point(b.Kp) * _phi(b, H_)
    return val.hi


def single_step_error(
    system: InputAffineSystem,
    kind: ApproximationKind,
    B: IntervalBox,
    h: float,
    bounds: NormBounds | None = None,
) -> float:
    """Local error bound for one step of ``kind`` over the verified box ``B``.

    The theorem bound is combined with the generic first-order bound by
    taking the minimum; both are valid.
    """
    b = bounds if bounds is not None else compute_bounds(system, B, kind.formula_r)
    if b.r != kind.formula_r:
        b = b.with_r(kind.formula_r)
    formula = classify_system(system, kind)
    eps = analytic_error(formula, b, h)
    return min(eps, generic_error(b, h))
