import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from direach.inputs import (
    AFFINE,
    CONSTANT,
    KINDS,
    PIECEWISE_CONSTANT,
    SINUSOID_BOUND,
    SINUSOID_GAMMA,
    SINUSOIDAL,
    ZERO,
    input_value,
    kind_by_name,
    order3_degree_closed_form,
    order3_parameter_law,
    p_gamma_enclosure,
    realize_inputs,
    sinusoid_constants,
)

unit = st.floats(-1.0, 1.0)


def test_sinusoid_constants_minimise_amplitude():
    g, p, bound = sinusoid_constants()
    assert g == pytest.approx(4.163152, abs=5e-4)
    assert p == pytest.approx(1.146311, abs=5e-4)
    assert bound == pytest.approx(1.364402, abs=5e-4)
    assert abs(g - SINUSOID_GAMMA) < 1e-5 and abs(bound - SINUSOID_BOUND) < 1e-5


def test_p_gamma_enclosure_contains_float_value():
    _, p, _ = sinusoid_constants()
    r = p_gamma_enclosure(sinusoid_constants()[0])
    assert r.lo <= p <= r.hi and r.hi - r.lo < 1e-12


@pytest.mark.parametrize("m,total,degree", [
    (1, 2, 1), (2, 5, 2), (3, 9, 2), (4, 14, 3), (5, 20, 3), (6, 27, 4), (10, 65, 5),
])
def test_order3_parameter_law(m, total, degree):
    assert order3_parameter_law(m) == (total, degree)


def test_order3_closed_form_differs_at_ten():
    assert order3_degree_closed_form(10) == 6
    assert order3_parameter_law(7) == (35, 4)
    with pytest.raises(ValueError):
        order3_parameter_law(0)


def test_kind_lookup():
    assert kind_by_name("Affine") is AFFINE
    assert kind_by_name("S") is SINUSOIDAL
    assert kind_by_name("piecewise_constant") is PIECEWISE_CONSTANT
    with pytest.raises(ValueError):
        kind_by_name("cubic")


def moments(kind, V, sa, sb):
    w = lambda u: input_value(kind, V, sa, sb, u)
    pts = [0.5] if kind is PIECEWISE_CONSTANT else None
    mean = quad(w, 0, 1, points=pts, epsabs=1e-13)[0]
    first = 4 * quad(lambda u: (u - 0.5) * w(u), 0, 1, points=pts, epsabs=1e-13)[0]
    return mean, first


@pytest.mark.parametrize("kind", [AFFINE, SINUSOIDAL, PIECEWISE_CONSTANT])
@given(sa=unit, sb=unit)
def test_two_parameter_families_match_moments(kind, sa, sb):
    V = 0.7
    mean, first = moments(kind, V, sa, sb)
    assert mean == pytest.approx(V * sa, abs=1e-10)
    assert first == pytest.approx(V * (1 - sa * sa) * sb, abs=1e-10)


@given(sa=unit)
def test_constant_family_matches_mean(sa):
    mean, _ = moments(CONSTANT, 2.0, sa, 0.0)
    assert mean == pytest.approx(2.0 * sa, abs=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_amplitude_factor_bounds_family(kind):
    grid = np.linspace(-1, 1, 61)
    peak = 0.0
    for sa in grid:
        for sb in (-1.0, 1.0):
            for u in np.linspace(0, 1, 101):
                peak = max(peak, abs(input_value(kind, 1.0, sa, sb, u)))
    assert peak <= kind.amplitude_factor + 1e-12
    assert kind.amplitude_factor <= kind.formula_r
    # the factor is attained up to grid resolution
    assert peak >= kind.amplitude_factor - 2e-3


def test_affine_factor_is_five_thirds():
    assert input_value(AFFINE, 1.0, 1 / 3, 1.0, 1.0) == pytest.approx(5 / 3)


@pytest.mark.parametrize("kind", [CONSTANT, AFFINE, SINUSOIDAL, PIECEWISE_CONSTANT])
@given(sa=unit, sb=unit, u=st.floats(0.0, 1.0))
def test_realisation_models_enclose_values(kind, sa, sb, u):
    V = [0.3, 1.5]
    P = 6
    real = realize_inputs(kind, V, 0.1, P, param_offset=1, time_index=0)
    assert real.num_added_params == kind.params_per_input * 2
    ell = kind.params_per_input
    for seg, (a, b) in zip(real.segments, real.spans):
        if not (a <= u <= b):
            continue
        s = [0.0] * P
        s[0] = 2 * u - 1
        for i in range(2):
            s[1 + ell * i] = sa
            if ell > 1:
                s[2 + ell * i] = sb
        for i, tm in enumerate(seg):
            want = input_value(kind, V[i], sa, sb, u)
            box = tm.enclosure(s)
            assert box.lo - 1e-12 <= want <= box.hi + 1e-12


def test_zero_realisation_adds_nothing():
    real = realize_inputs(ZERO, [1.0, 2.0], 0.1, 3, 1, 0)
    assert real.num_added_params == 0
    assert all(tm.bound().hi == 0.0 for tm in real.segments[0])


def test_pwc_has_two_half_segments():
    real = realize_inputs(PIECEWISE_CONSTANT, [1.0], 0.1, 3, 1, 0)
    assert real.spans == ((0.0, 0.5), (0.5, 1.0))
    assert len(real.segments) == 2
