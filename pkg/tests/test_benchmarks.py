from fractions import Fraction

import pytest

from direach import benchmarks as bm
from direach.system import dumps

# name: (n, m, additive, h, horizon, steps)
CATALOG = {
    "HS": (2, 3, False, Fraction(1, 50), 10, 500),
    "CR": (4, 3, False, Fraction(1, 16), 10, 160),
    "LV": (2, 2, False, Fraction(1, 50), 10, 500),
    "JE": (2, 2, True, Fraction(1, 50), 5, 250),
    "PI": (2, 1, True, Fraction(1, 32), 5, 160),
    "J21": (3, 1, False, Fraction(1, 16), 10, 160),
    "LA": (3, 1, False, Fraction(1, 256), 1, 256),
    "RA": (3, 1, True, Fraction(1, 128), 12, 1536),
    "J16": (3, 1, True, Fraction(1, 16), 10, 160),
    "DC": (2, 2, False, Fraction(1, 10), 5, 50),
}

# nominal input radii in the order the channels are declared
RADII = {
    "HS": (Fraction(1, 5000),) * 3,
    "CR": (Fraction(1, 1000), Fraction(1, 1000), Fraction(1, 5)),
    "J16": (Fraction(1, 1000),),
}


def test_catalog_order_and_size():
    assert [c.name for c in bm.catalog()] == list(CATALOG)


@pytest.mark.parametrize("name", list(CATALOG))
def test_catalog_entry(name):
    n, m, additive, h, horizon, steps = CATALOG[name]
    cfg = bm.get(name)
    sys_ = cfg.system
    assert (sys_.n, sys_.m, sys_.additive) == (n, m, additive)
    assert cfg.h == h and cfg.horizon == horizon and cfg.steps == steps
    assert len(cfg.initial) == n
    if name in RADII:
        assert sys_.input_radii == RADII[name]


def test_lookup_is_case_insensitive_and_accepts_paths(tmp_path):
    assert bm.get("j16").name == "J16"
    path = tmp_path / "mine.sys"
    path.write_text(bm.definition_text("PI"))
    assert dumps(bm.get(str(path)).definition) == dumps(bm.get("PI").definition)
    with pytest.raises(KeyError):
        bm.get("nonexistent")


def test_lorenz_variant_available():
    cfg = bm.get("LA-lorenz")
    assert cfg.system.n == 3 and cfg.system.m == 1


@pytest.mark.parametrize("factor", bm.NOISE_FACTORS)
def test_scale_noise_scales_radii_exactly(factor):
    base = bm.get("CR")
    scaled = bm.scale_noise(base, factor)
    assert scaled.system.input_radii == tuple(V * factor for V in base.system.input_radii)
    # centres are untouched
    assert scaled.definition == base.definition


def test_scale_noise_composes_and_validates():
    cfg = bm.scale_noise(bm.scale_noise(bm.get("PI"), 2), Fraction(1, 4))
    assert cfg.noise_scale == Fraction(1, 2)
    with pytest.raises(ValueError):
        bm.scale_noise(cfg, 0)


def test_with_horizon_rounds_down_to_whole_steps():
    cfg = bm.get("PI").with_horizon(Fraction(1, 10))
    assert cfg.steps == 3 and cfg.horizon == Fraction(3, 32)
    assert bm.get("J16").with_horizon(2).steps == 32


def test_noise_scaling_examples():
    hs = bm.scale_noise(bm.get("HS"), 2).system
    assert hs.input_radii == (Fraction(1, 2500),) * 3
    dc = bm.scale_noise(bm.get("DC"), Fraction(1, 4)).system
    assert dc.input_radii[1] == Fraction(1, 60)
    assert bm.scale_noise(bm.get("DC"), 1).system == bm.get("DC").system


def test_ra_input():
    ch = bm.get("RA").definition.inputs[0]
    assert (ch.center, ch.radius) == (Fraction(1, 10), Fraction(1, 1000))


@pytest.mark.parametrize("widths,score", [((1, 1), 1.0), ((0.5, 0.5), 2.0), ((1, 2, 4), 0.5)])
def test_volume_score_examples(widths, score):
    from direach.interval import IntervalBox

    box = IntervalBox.from_bounds([(0.0, w) for w in widths])
    assert bm.volume_score(box) == pytest.approx(score)


def test_volume_score_scale_covariant():
    from direach.interval import IntervalBox

    base = IntervalBox.from_bounds([(0.0, 0.3), (1.0, 1.7), (-2.0, 2.0)])
    scaled = IntervalBox.from_bounds([(0.0, 0.3 * 8), (1.0, 1.0 + 0.7 * 8), (-16.0, 16.0)])
    assert bm.volume_score(scaled) == pytest.approx(bm.volume_score(base) / 8)
