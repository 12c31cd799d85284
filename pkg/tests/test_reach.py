import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from direach import benchmarks as bm
from direach import expr as ex
from direach.exceptions import StepFailure
from direach.inputs import AFFINE, CONSTANT, KINDS, PIECEWISE_CONSTANT, SINUSOIDAL, ZERO
from direach.interval import IntervalBox
from direach.reach import (
    EvolutionAborted,
    EvolveConfig,
    ReachStepRecord,
    SelectorState,
    SimplificationPolicy,
    evolve,
    kind_mix,
    select_approximation,
    volume_score,
)
from direach.system import InputAffineSystem
from direach.taylor import TaylorModelVector

x = ex.var(0)
LINEAR = InputAffineSystem("lin", ("x",), (-x,), ((ex.const(1),),), (ex.const(1).payload / 10,))


def run(system, X0, h, steps, kind=AFFINE, policy=None, selector="static"):
    cfg = EvolveConfig(h=h, steps=steps, selector=selector, kind=kind,
                       policy=policy or SimplificationPolicy.disabled())
    return evolve(system, X0, cfg)


def test_parameter_bookkeeping_without_simplification():
    cfg = bm.get("JE")
    sys_ = cfg.system
    recs = run(sys_, cfg.initial, float(cfg.h), 20)
    p0 = recs[0].num_params
    per_step = sys_.n + AFFINE.params_per_input * sys_.m
    assert [r.num_params for r in recs] == [p0 + k * per_step for k in range(21)]


@pytest.mark.parametrize("ns,beta", [(1, 1), (3, 2), (12, 6)])
def test_simplification_bounds_parameter_count(ns, beta):
    cfg = bm.get("PI")
    sys_ = cfg.system
    policy = SimplificationPolicy(ns, beta)
    recs = run(sys_, cfg.initial, float(cfg.h), 30, policy=policy)
    per_step = sys_.n + AFFINE.params_per_input * sys_.m
    cap = (beta + 1) * ns * per_step + sys_.n
    assert max(r.num_params for r in recs) <= cap
    assert [r.simplified for r in recs[1:]] == [(k + 1) % ns == 0 for k in range(30)]


@pytest.mark.parametrize("kind", KINDS)
def test_linear_reach_set_contains_exact_interval(kind):
    # x' = -x + v, |v| <= 1/10: the reachable set is an exactly known interval
    X0 = IntervalBox.from_bounds([(0.4, 0.6)])
    h = 0.1
    recs = run(LINEAR, X0, h, 10, kind=kind)
    for r in recs:
        d = math.exp(-r.time)
        lo = 0.4 * d - 0.1 * (1 - d)
        hi = 0.6 * d + 0.1 * (1 - d)
        assert r.box[0].lo <= lo and r.box[0].hi >= hi
    final = recs[-1].box[0]
    assert final.hi - final.lo < 1.5 * (hi - lo)


def test_zero_kind_is_tight_on_contracting_linear_system():
    # with logarithmic norm -1 the first-order bound h V phi(-h) equals the bang-bang excursion
    X0 = IntervalBox.from_bounds([(0.4, 0.6)])
    z = run(LINEAR, X0, 0.1, 10, kind=ZERO)[-1].box[0]
    d = math.exp(-1.0)
    assert z.lo == pytest.approx(0.4 * d - 0.1 * (1 - d), abs=1e-8)
    assert z.hi == pytest.approx(0.6 * d + 0.1 * (1 - d), abs=1e-8)


def test_volume_score_examples():
    assert volume_score(IntervalBox.from_bounds([(0.0, 2.0), (0.0, 8.0)])) == pytest.approx(0.25)
    assert volume_score(IntervalBox.from_bounds([(0.0, 0.5)])) == 2.0
    assert volume_score(IntervalBox.from_bounds([(1.0, 1.0), (0.0, 1.0)])) == math.inf


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=5), st.floats(1.1, 10.0))
def test_volume_score_decreases_when_a_side_grows(widths, factor):
    b = IntervalBox.from_bounds([(0.0, w) for w in widths])
    grown = IntervalBox.from_bounds([(0.0, widths[0] * factor)] + [(0.0, w) for w in widths[1:]])
    assert volume_score(grown) < volume_score(b)


def test_policy_parse():
    assert SimplificationPolicy.parse("12:6") == SimplificationPolicy(12, 6.0)
    assert not SimplificationPolicy.parse("inf").enabled
    assert not SimplificationPolicy.parse("12:inf").enabled
    assert str(SimplificationPolicy(4, 3)) == "4:3"
    with pytest.raises(ValueError):
        SimplificationPolicy.parse("12")
    with pytest.raises(ValueError):
        SimplificationPolicy(0, 3)


def test_loose_selector_backs_off_exponentially():
    s = SelectorState("loose")
    assert s.due(0) == list(KINDS)
    s.update(0, list(KINDS), AFFINE)
    assert s.due(1) == [AFFINE]
    s.update(1, [AFFINE], AFFINE)
    assert ZERO in s.due(2)
    s.update(2, s.due(2), AFFINE)
    # losers were seen at steps 0 and 2: next look at 2 + 4
    assert s.due(5) == [AFFINE]
    assert set(s.due(6)) == set(KINDS)


def test_tight_and_static_selectors():
    assert SelectorState("tight").due(7) == list(KINDS)
    assert SelectorState("static", CONSTANT).due(3) == [CONSTANT]
    with pytest.raises(ValueError):
        SelectorState("static")
    with pytest.raises(ValueError):
        SelectorState("greedy")


def test_select_approximation_prefers_best_then_catalogue_order():
    scores = {ZERO.tag: 1.0, CONSTANT.tag: 3.0, AFFINE.tag: 3.0, SINUSOIDAL.tag: 2.0,
              PIECEWISE_CONSTANT.tag: 0.0}
    kind, res, _ = select_approximation(SelectorState("tight"), 0, lambda k: k.tag, lambda t: scores[t])
    assert kind is CONSTANT and res == "constant"


def test_select_approximation_skips_failures():
    def ev(k):
        if k is not ZERO:
            raise StepFailure("nope")
        return 1

    kind, _, _ = select_approximation(SelectorState("tight"), 0, ev, float)
    assert kind is ZERO
    with pytest.raises(StepFailure):
        select_approximation(SelectorState("static", AFFINE), 0, ev, float)


def test_evolution_aborts_with_partial_records():
    blow = InputAffineSystem("blow", ("x",), (x * x,), (), ())
    X0 = IntervalBox.from_bounds([(1.0, 1.0)])
    with pytest.raises(EvolutionAborted) as info:
        run(blow, X0, 0.25, 10, kind=ZERO)
    assert 1 <= len(info.value.records) < 11


def test_kind_mix_and_records():
    X0 = IntervalBox.from_bounds([(0.4, 0.6)])
    recs = run(LINEAR, X0, 0.1, 4, kind=AFFINE)
    assert kind_mix(recs) == "A100"
    assert kind_mix(recs[:1]) == ""
    X = TaylorModelVector.from_box(X0)
    with pytest.raises(ValueError):
        ReachStepRecord(0.0, X, -1.0, None, X.num_params, 0.0)
    with pytest.raises(ValueError):
        ReachStepRecord(0.0, X, 0.0, None, X.num_params + 1, 0.0)


def test_loose_selection_on_benchmark_runs():
    cfg = bm.get("J16")
    recs = run(cfg.system, cfg.initial, float(cfg.h), 8, kind=None, selector="loose",
               policy=SimplificationPolicy())
    assert len(recs) == 9
    mix = kind_mix(recs)
    assert sum(int(p) for p in __import__("re").findall(r"\d+", mix)) in (99, 100, 101)
