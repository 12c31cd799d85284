"""Upper bounds on the vector-field norms that drive the analytic local error."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import expr as ex
from . import interval as iv
from .interval import Interval, IntervalBox, fsum_up
from .system import InputAffineSystem


@dataclass(frozen=True)
class NormBounds:
    K: float
    K_i: tuple[float, ...]
    L: float
    L_i: tuple[float, ...]
    H: float
    H_i: tuple[float, ...]
    Lambda: float
    Kp: float
    Lp: float
    Hp: float
    r: float

    def __post_init__(self):
        for name in ("K", "L", "H", "Kp", "Lp", "Hp", "r"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.Lambda > self.L:
            raise ValueError("logarithmic norm bound exceeds the operator norm bound")

    def with_r(self, r: float) -> "NormBounds":
        return NormBounds(self.K, self.K_i, self.L, self.L_i, self.H, self.H_i,
                          self.Lambda, self.Kp, self.Lp, self.Hp, float(r))


def log_norm_inf_upper(matrix: Sequence[Sequence[Interval]]) -> float:
    """Upper bound of ``max_k (q_kk + sum_{i != k} |q_ki|)`` over an interval matrix."""
    n = len(matrix)
    best = -math.inf
    for k in range(n):
        row = matrix[k]
        if len(row) != n:
            raise ValueError("log_norm_inf_upper needs a square matrix")
        parts = [row[k].hi] + [row[i].mag() for i in range(n) if i != k]
        best = max(best, fsum_up(parts))
    return best


def _row_sum_norm(matrix: Sequence[Sequence[Interval]]) -> float:
    return max((fsum_up(q.mag() for q in row) for row in matrix), default=0.0)


_SMALL = 1e-3


def phi_upper(x: Interval) -> Interval:
    """Enclosure of ``phi(x) = (e^x - 1)/x`` with ``phi(0) = 1``; phi is increasing."""
    return Interval(_phi_point(x.lo).lo, _phi_point(x.hi).hi)


def _phi_point(x: float) -> Interval:
    if abs(x) < _SMALL:
        xi = Interval.point(x)
        series = 1 + xi / 2 + iv.pow_int(xi, 2) / 6 + iv.pow_int(xi, 3) / 24
        # Lagrange remainder of the series: x^4 e^xi / 120 <= |x|^4 / 60 here
        rem = iv.up(abs(x) ** 4 / 60.0)
        return series.widen(rem)
    xi = Interval.point(x)
    num = iv.exp(xi) - 1
    return num / xi


def phi_upper_float(x: float) -> float:
    return _phi_point(x).hi


def compute_bounds(system: InputAffineSystem, B: IntervalBox, r: float) -> NormBounds:
    """Sup-norm bounds of ``f``, ``g_i`` and their first two derivatives over ``B``."""
    n, m = system.n, system.m

    def k_of(exprs) -> float:
        vals = ex.eval_interval_many(exprs, B)
        return max((v.mag() for v in vals), default=0.0)

    def l_of(jac) -> tuple[float, list]:
        rows = [ex.eval_interval_many(row, B) for row in jac]
        return _row_sum_norm(rows), rows

    def h_of(hess) -> float:
        best = 0.0
        for comp in hess:
            flat = [e for row in comp for e in row]
            vals = ex.eval_interval_many(flat, B)
            best = max(best, fsum_up(v.mag() for v in vals))
        return best

    K = k_of(system.drift)
    L, jrows = l_of(system.drift_jacobian)
    H = h_of(system.drift_hessian)
    Lam = min(log_norm_inf_upper(jrows), L)
    K_i = tuple(k_of(g) for g in system.input_maps)
    L_i = tuple(l_of(J)[0] for J in system.input_jacobians)
    H_i = tuple(h_of(Hs) for Hs in system.input_hessians)
    V = system.radii_upper
    Kp = fsum_up(iv.mul_up(v, k) for v, k in zip(V, K_i))
    Lp = fsum_up(iv.mul_up(v, k) for v, k in zip(V, L_i))
    Hp = fsum_up(iv.mul_up(v, k) for v, k in zip(V, H_i))
    return NormBounds(K, K_i, L, L_i, H, H_i, Lam, Kp, Lp, Hp, float(r))
