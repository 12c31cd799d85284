import math

import mpmath
import numpy as np
import pytest

from direach import benchmarks as bm
from direach import expr as ex
from direach.bounds import NormBounds, compute_bounds, log_norm_inf_upper, phi_upper, phi_upper_float
from direach.interval import Interval, IntervalBox
from direach.system import InputAffineSystem

mpmath.mp.dps = 50


def phi_exact(x: float) -> mpmath.mpf:
    if x == 0.0:
        return mpmath.mpf(1)
    X = mpmath.mpf(x)
    return mpmath.expm1(X) / X


def phi_points() -> np.ndarray:
    rng = np.random.default_rng(7)
    pts = np.concatenate([
        rng.uniform(-40.0, 40.0, 400),
        rng.uniform(-1e-2, 1e-2, 300),
        rng.uniform(-1e-6, 1e-6, 200),
        [0.0, 1e-3, -1e-3, 5e-324, -5e-324, 1.0, -1.0],
        rng.uniform(-3.0, 3.0, 93),
    ])
    assert len(pts) == 1000
    return pts


def test_phi_encloses_high_precision_value():
    for x in phi_points():
        r = phi_upper(Interval.point(float(x)))
        v = phi_exact(float(x))
        assert mpmath.mpf(r.lo) <= v <= mpmath.mpf(r.hi), x
        assert r.hi - r.lo <= 1e-12 * max(1.0, r.hi)


def test_phi_interval_covers_range():
    r = phi_upper(Interval(-2.0, 0.5))
    assert mpmath.mpf(r.lo) <= phi_exact(-2.0) and phi_exact(0.5) <= mpmath.mpf(r.hi)
    assert phi_upper_float(0.0) >= 1.0


def interval_matrix(rows):
    return [[Interval(lo, hi) for lo, hi in row] for row in rows]


def test_log_norm_examples():
    Q = interval_matrix([[(-1, -1), (0.5, 0.5)], [(-0.25, 0.25), (-3, -2)]])
    # row 0: -1 + 0.5; row 1: -2 + 0.25
    assert log_norm_inf_upper(Q) == pytest.approx(-0.5)
    assert 3.0 <= log_norm_inf_upper(interval_matrix([[(2, 3)]])) <= 3.0 + 1e-15
    with pytest.raises(ValueError):
        log_norm_inf_upper([[Interval.point(1.0), Interval.point(1.0)]])


def test_log_norm_bounds_sampled_matrices():
    rng = np.random.default_rng(3)
    for _ in range(200):
        lo = rng.uniform(-2, 2, (3, 3))
        hi = lo + rng.uniform(0, 1, (3, 3))
        Q = [[Interval(lo[i, j], hi[i, j]) for j in range(3)] for i in range(3)]
        bound = log_norm_inf_upper(Q)
        for _ in range(5):
            M = rng.uniform(lo, hi)
            mu = max(M[k, k] + sum(abs(M[k, i]) for i in range(3) if i != k) for k in range(3))
            assert mu <= bound + 1e-12


def linear_system():
    x = ex.var(0)
    return InputAffineSystem("lin", ("x",), (-x,), ((ex.const(1),),), (1,))


def test_compute_bounds_linear_scalar():
    b = compute_bounds(linear_system(), IntervalBox.from_bounds([(-2.0, 2.0)]), 1.0)
    # sums round upward, so exact values may come back one ulp high
    def tight(got, want):
        return want <= got <= want + 1e-15 * (1 + abs(want))

    assert tight(b.K, 2.0) and tight(b.L, 1.0) and b.H == 0.0
    assert tight(b.Lambda, -1.0)
    assert tight(b.K_i[0], 1.0) and b.L_i == (0.0,)
    assert tight(b.Kp, 1.0) and b.Lp == 0.0 and b.Hp == 0.0


def test_compute_bounds_dominate_samples():
    cfg = bm.get("PI")
    sys_ = cfg.system
    B = IntervalBox.from_bounds([(-0.5, 0.5), (0.5, 1.0)])
    b = compute_bounds(sys_, B, 1.0)
    f, gs = sys_.numpy_rhs
    J = ex.compile_numpy([e for row in sys_.drift_jacobian for e in row], sys_.n)
    rng = np.random.default_rng(0)
    X = np.stack([rng.uniform(iv.lo, iv.hi, 500) for iv in B])
    assert np.abs(f(X)).max() <= b.K
    jac = J(X).reshape(sys_.n, sys_.n, -1)
    assert np.abs(jac).sum(axis=1).max() <= b.L
    mu = max((jac[k, k] + sum(np.abs(jac[k, i]) for i in range(sys_.n) if i != k)).max() for k in range(sys_.n))
    assert mu <= b.Lambda <= b.L
    V = sys_.radii_upper
    Kp = sum(v * np.abs(g(X)).max() for v, g in zip(V, gs))
    assert Kp <= b.Kp * (1 + 1e-12)


def test_norm_bounds_validation():
    with pytest.raises(ValueError):
        NormBounds(-1.0, (), 0, (), 0, (), 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        NormBounds(1.0, (), 1.0, (), 0, (), 2.0, 0, 0, 0, 0)
    b = NormBounds(1.0, (), 1.0, (), 0, (), 0.5, 0, 0, 0, 0).with_r(1.25)
    assert b.r == 1.25
