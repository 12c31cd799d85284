import math

import numpy as np
import pytest

from direach import benchmarks as bm
from direach import expr as ex
from direach.exceptions import BoundingFailed
from direach.flow import compute_bounding_box, flow_composed, flow_map, vector_field_box
from direach.inputs import AFFINE, CONSTANT, ZERO
from direach.interval import Interval, IntervalBox
from direach.system import InputAffineSystem
from direach.taylor import TaylorModelVector

x, y = ex.var(0), ex.var(1)
ROTATION = InputAffineSystem("rot", ("x", "y"), (y, -x), (), ())


def box_inside(inner: IntervalBox, outer: IntervalBox) -> bool:
    return all(o.lo <= i.lo and i.hi <= o.hi for i, o in zip(inner, outer))


@pytest.mark.parametrize("name", ["J16", "PI", "DC", "LV", "CR"])
def test_bounding_box_certificate_holds(name):
    cfg = bm.get(name)
    sys_ = cfg.system
    X0 = cfg.initial.widen(1e-3)
    h = float(cfg.h)
    cert = compute_bounding_box(sys_, X0, h, AFFINE.formula_r)
    F = vector_field_box(sys_, cert.box, max(1.0, AFFINE.formula_r))
    T = Interval(0.0, h)
    image = IntervalBox(a + T * f for a, f in zip(X0, F))
    assert box_inside(image, cert.box)
    assert box_inside(X0, cert.box)


def test_bounding_box_fails_for_blowup():
    # x' = x^2 from x = 1 escapes before t = 1
    sys_ = InputAffineSystem("blow", ("x",), (x * x,), (), ())
    with pytest.raises(BoundingFailed):
        compute_bounding_box(sys_, IntervalBox.from_bounds([(1.0, 1.0)]), 2.0, 0.0)


def test_bounding_box_dimension_checked():
    with pytest.raises(BoundingFailed):
        compute_bounding_box(ROTATION, IntervalBox.from_bounds([(0.0, 1.0)]), 0.1, 0.0)


def test_rotation_flow_encloses_exact_solution():
    h = 0.25
    X0 = IntervalBox.from_bounds([(0.9, 1.1), (-0.1, 0.1)])
    X = TaylorModelVector.from_box(X0, 1e-12)
    cert = compute_bounding_box(ROTATION, X0, h, 0.0)
    Y = flow_composed(ROTATION, X, ZERO, h, cert)
    c, s = math.cos(h), math.sin(h)
    rng = np.random.default_rng(1)
    for p in rng.uniform(-1, 1, (300, 2)):
        x0 = 1.0 + 0.1 * p[0]
        y0 = 0.1 * p[1]
        want = (c * x0 + s * y0, -s * x0 + c * y0)
        got = Y.enclosure(list(p))
        for g, w in zip(got, want):
            assert g.lo - 1e-13 <= w <= g.hi + 1e-13
    # the enclosure is close to the true image, not just valid
    assert max(Y.errors) < 1e-9


def test_flow_map_parameter_layout():
    cfg = bm.get("PI")
    sys_ = cfg.system
    box = cfg.initial.widen(0.01)
    h = float(cfg.h)
    cert = compute_bounding_box(sys_, box, h, AFFINE.formula_r)
    phi = flow_map(sys_, box, AFFINE, h, cert, 1e-10)
    assert phi.num_params == sys_.n + AFFINE.params_per_input * sys_.m
    phi_c = flow_map(sys_, box, CONSTANT, h, compute_bounding_box(sys_, box, h, 1.0), 1e-10)
    assert phi_c.num_params == sys_.n + sys_.m


def test_flow_of_input_system_matches_numerical_solution():
    # x' = -x + v with the affine family member fixed by (s_a, s_b)
    sys_ = InputAffineSystem("lin", ("x",), (-x,), ((ex.const(1),),), (1,))
    h = 0.1
    X0 = IntervalBox.from_bounds([(0.4, 0.6)])
    X = TaylorModelVector.from_box(X0, 1e-12)
    cert = compute_bounding_box(sys_, X0, h, AFFINE.formula_r)
    Y = flow_composed(sys_, X, AFFINE, h, cert)
    from scipy.integrate import quad
    from direach.inputs import input_value

    for s0, sa, sb in [(-1, 0.3, 1.0), (0.5, -1.0, 0.2), (1, 0.0, -1.0)]:
        x0 = 0.5 + 0.1 * s0
        w = lambda t: input_value(AFFINE, 1.0, sa, sb, t / h)
        want = math.exp(-h) * x0 + quad(lambda t: math.exp(-(h - t)) * w(t), 0, h, epsabs=1e-15)[0]
        got = Y.enclosure([s0, sa, sb])[0]
        assert got.lo - 1e-12 <= want <= got.hi + 1e-12
