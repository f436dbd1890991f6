import math
from fractions import Fraction

import numpy as np
import pytest

import metriclab as ml
from metriclab.errors import DepthOverflow


def _families():
    yield ml.make_family("seq_factorial"), 6
    yield ml.make_family("seq_power_tower", s=0.5), 10
    yield ml.make_family("seq_power_tower", s=0.3), 7
    yield ml.make_family("seq_geometric"), 30
    yield ml.make_family("seq_polynomial", s=2), 30
    yield ml.make_family("seq_polynomial", s=3.5), 30
    yield ml.make_family("seq_log"), 30
    yield ml.make_family("product_geometric", t=0.5), 8
    yield ml.make_family("cantor_factorial", r=0.5), 6
    yield ml.make_family("sqrt_ultra"), 30


def test_engine_matches_closed_forms_everywhere():
    for fam, depth in _families():
        space, chain = ml.sample(fam, depth)
        for lid, st in zip(chain.level_ids, chain.stats):
            if lid <= fam.first_index:
                continue
            assert float(st.delta) == pytest.approx(fam.delta(lid), rel=1e-12), fam.kind
            assert float(st.gamma) == pytest.approx(fam.gamma(lid), rel=1e-12), fam.kind
            if math.isfinite(st.log_ratio):
                assert st.log_ratio == pytest.approx(fam.R_level(lid), abs=1e-12), fam.kind


def test_parameter_ranges_rejected():
    with pytest.raises(ValueError):
        ml.make_family("seq_power_tower", s=1.0)
    with pytest.raises(ValueError):
        ml.make_family("seq_polynomial", s=1.0)
    with pytest.raises(ValueError):
        ml.make_family("product_geometric", t=1.5)
    with pytest.raises(ValueError):
        ml.make_family("cantor_factorial", r=0.0)
    with pytest.raises(ValueError):
        ml.make_family("no_such_kind")


def test_realization_of_every_ratio():
    for s in (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 7.0, math.inf):
        fam = ml.family_for_ratio(s)
        assert fam.exact_R == s


def test_power_tower_reference_values():
    fam = ml.make_family("seq_power_tower", s=0.5)
    assert fam.r(5) == 2.0 ** -16
    assert fam.R_level(5) == pytest.approx(0.5004, abs=1e-4)


def test_standing_hypothesis_flags():
    assert ml.make_family("seq_geometric").standing_hypothesis_ok
    assert ml.make_family("seq_polynomial", s=2).standing_hypothesis_ok
    assert ml.make_family("seq_log").standing_hypothesis_ok
    # the fast-decaying cases violate the stated hypothesis; the gap and
    # diameter formulas still hold, so this is a flag rather than an error
    assert not ml.make_family("seq_factorial").standing_hypothesis_ok
    assert not ml.make_family("seq_power_tower", s=0.5).standing_hypothesis_ok


def test_float_depth_overflow_and_exact_rescue():
    pw = ml.make_family("seq_power_tower", s=0.5)
    with pytest.raises(DepthOverflow):
        ml.sample(pw, 12)
    space, chain = ml.sample(pw, 12, exact=True)
    assert space.exact and space.n == 13
    assert space.dist[0, 12] == Fraction(1, 2 ** 2048)
    fac = ml.make_family("seq_factorial")
    with pytest.raises(DepthOverflow):
        ml.sample(fac, 7)
    space, _ = ml.sample(fac, 8, exact=True, chain=False)
    assert space.dist[0, 8] == Fraction(1, 2 ** math.factorial(8))


def test_exact_mode_needs_dyadic_levels():
    pw = ml.make_family("seq_power_tower", s=0.3)
    with pytest.raises(ValueError):
        ml.sample(pw, 6, exact=True)


def test_product_chain_is_ball_chain():
    fam = ml.make_family("product_geometric", t=0.5)
    space, chain = ml.sample(fam, 5)
    assert space.n == 32
    ball = ml.ball_chain(space)
    assert [p.blocks for p in ball.levels] == [p.blocks for p in chain.levels]
    for lid, st in zip(chain.level_ids, chain.stats):
        if lid >= 2:
            assert st.log_ratio == pytest.approx(0.5, abs=1e-12)


def test_cantor_chain_is_ball_chain():
    fam = ml.make_family("cantor_factorial", r=0.5)
    space, chain = ml.sample(fam, 5)
    assert space.n == 32
    ball = ml.ball_chain(space)
    assert [p.blocks for p in ball.levels] == [p.blocks for p in chain.levels]


def test_cantor_exact_depth8_levels():
    fam = ml.make_family("cantor_factorial", r=0.5)
    space, chain = ml.sample(fam, 8, exact=True)
    assert space.n == 256
    for lid, st in zip(chain.level_ids, chain.stats):
        if lid >= 2:
            assert st.log_ratio == pytest.approx(1.0 / lid, abs=1e-12)


def test_sqrt_ultra_is_ultrametric_and_one_lipschitz():
    fam = ml.make_family("sqrt_ultra")
    space, chain = ml.sample(fam, 50)
    assert ml.is_ultrametric(space).ok
    abs_space, _ = ml.sample(ml.make_family("seq_polynomial", s=2), 50, chain=False)
    assert (abs_space.dist <= space.dist + 1e-15).all()
    assert space.dist[2, 3] == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_chain_decay_witnesses_match_paper_constants():
    geo = ml.make_family("seq_geometric")
    for p in (1.5, 2.0, 3.0):
        _, ch = ml.sample(geo, 10)
        assert ml.classify_chain(ch, p).p_witness == pytest.approx(2.0 ** (p - 2), rel=1e-12)
    poly = ml.make_family("seq_polynomial", s=2)
    for p in (1.5, 2.0, 3.0):
        _, ch = ml.sample(poly, 10)
        assert ml.classify_chain(ch, p).p_witness == pytest.approx(0.5, rel=1e-12)
    fac = ml.make_family("seq_factorial")
    witnesses = []
    for depth in (4, 5, 6):
        _, ch = ml.sample(fac, depth)
        witnesses.append(ml.classify_chain(ch, 2.0).p_witness)
    assert witnesses[0] > witnesses[1] > witnesses[2]
    assert witnesses[-1] < 1e-100


def test_comparison_ultrametric_values():
    fam = ml.make_family("seq_geometric")
    rho = ml.comparison_ultrametric(fam, 4)
    assert rho.dist[0, 3] == fam.r(3)       # rho(0, r_n) = r_n
    assert rho.dist[1, 3] == fam.r(1)       # rho(r_m, r_n) = max
    assert ml.is_ultrametric(rho).ok


def test_formula_table_rows():
    fam = ml.make_family("seq_geometric")
    rows = ml.formula_table(fam, 2, 5)
    assert [r["n"] for r in rows] == [2, 3, 4, 5]
    assert all(r["R"] == pytest.approx(1.0, abs=1e-12) for r in rows)


def test_sample_respects_point_cap(monkeypatch):
    monkeypatch.setenv("METRICLAB_MAX_POINTS", "100")
    from metriclab.errors import CapExceeded
    fam = ml.make_family("seq_geometric")
    with pytest.raises(CapExceeded):
        ml.sample(fam, 200, chain=False)
    prod = ml.make_family("product_geometric", t=0.5)
    with pytest.raises(CapExceeded):
        ml.sample(prod, 8, chain=False)


def test_factorial_and_polynomial_reference_ratios():
    fac = ml.make_family("seq_factorial")
    assert fac.R_level(20) == pytest.approx(1.0 / 20, abs=1e-6)
    poly = ml.make_family("seq_polynomial", s=2)
    expected = (math.log(10) + math.log(9)) / math.log(10)
    assert poly.R_level(10) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(1.9543, abs=1e-4)
