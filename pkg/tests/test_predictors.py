import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cilab.automata import EcaRow, eca_evolve, eca_rule_table
from cilab.errors import InvalidInput, PredictorInapplicable
from cilab.predictors import (
    EcaSystem,
    Meter,
    PredictorSpec,
    ResourceExceeded,
    chance_band,
    efficiency_sweep,
    is_sublinear,
    predict,
    prediction_efficiency,
    row_distance,
    state_distance,
    write_curves_csv,
    write_sweep_csv,
)

LINEAR = [0, 60, 90, 102, 150, 170, 204, 240]
blobs = st.binary(max_size=24)


@given(blobs, blobs, blobs)
def test_state_distance_is_a_metric(a, b, c):
    assert state_distance(a, a) == 0.0
    assert state_distance(a, b) == state_distance(b, a)
    assert 0.0 <= state_distance(a, b) <= 1.0
    if a != b:
        assert state_distance(a, b) > 0
    # padding mismatches make lengths comparable; triangle inequality still holds on equal lengths
    if len(a) == len(b) == len(c):
        assert state_distance(a, c) <= state_distance(a, b) + state_distance(b, c) + 1e-12


def test_distance_counts_bits():
    assert state_distance(b"\x00", b"\xff") == 1.0
    assert state_distance(b"\x01\x00", b"\x00\x00") == 1 / 16
    assert state_distance(b"", b"\x00") == 1.0
    assert row_distance(EcaRow.from_string("0000"), EcaRow.from_string("0110")) == 0.5


def test_meter_refuses_overdraft():
    m = Meter(10)
    m.charge(6)
    with pytest.raises(ResourceExceeded):
        m.charge(5)
    assert m.spent == 6


@given(st.sampled_from(LINEAR), st.integers(3, 70), st.integers(0, 3000), st.integers(0, 2 ** 32))
def test_additive_shortcut_matches_full_simulation(rule, width, t, seed):
    s0 = EcaRow.random(width, np.random.default_rng(seed))
    system = EcaSystem(rule, width)
    pred = predict(PredictorSpec("additive-shortcut", width * 12), system, s0, t)
    assert pred.state == eca_evolve(s0, eca_rule_table(rule), t)
    assert pred.resources_spent == width * bin(t).count("1")


def test_shortcut_inapplicable_cases():
    s0 = EcaRow.random(64, np.random.default_rng(0))
    with pytest.raises(PredictorInapplicable, match="not XOR-linear"):
        predict(PredictorSpec("additive-shortcut", 10 ** 6), EcaSystem(110, 64), s0, 5)
    with pytest.raises(PredictorInapplicable, match="needs"):
        predict(PredictorSpec("additive-shortcut", 64 * 2), EcaSystem(90, 64), s0, 7)


def test_shortcut_cost_is_logarithmic():
    hs = [1, 2, 3, 100, 1023, 1024, 10 ** 6]
    spent = [predict(PredictorSpec("additive-shortcut", 64 * 20), EcaSystem(90, 64),
                     EcaRow.zeros(64), t).resources_spent for t in hs]
    assert is_sublinear(spent, hs, 64)
    assert not is_sublinear([64 * t for t in hs], hs, 64)


def test_exact_simulator_threshold():
    s0 = EcaRow.random(32, np.random.default_rng(1))
    sysm = EcaSystem(110, 32)
    assert predict(PredictorSpec("exact-simulator", 32 * 10), sysm, s0, 10).state == \
        eca_evolve(s0, eca_rule_table(110), 10)
    with pytest.raises(PredictorInapplicable):
        predict(PredictorSpec("exact-simulator", 32 * 10 - 1), sysm, s0, 10)


@given(st.integers(0, 255), st.integers(0, 300), st.integers(0, 2000))
def test_truncated_simulator_spends_within_budget(rule, t, r):
    s0 = EcaRow.random(16, np.random.default_rng(t))
    p = predict(PredictorSpec("truncated-simulator", r), EcaSystem(rule, 16), s0, t)
    steps = min(r // 16, t)
    assert p.resources_spent == 16 * steps <= r
    assert p.state == eca_evolve(s0, eca_rule_table(rule), steps)


def test_truncated_is_exact_when_budget_suffices():
    s0 = EcaRow.random(64, np.random.default_rng(2))
    p = predict(PredictorSpec("truncated-simulator", 256), EcaSystem(110, 64), s0, 4)
    assert p.state == eca_evolve(s0, eca_rule_table(110), 4)


def test_coarse_simulator_budget_and_shape():
    s0 = EcaRow.random(64, np.random.default_rng(3))
    p = predict(PredictorSpec("coarse-simulator", 256, (("factor", 2),)), EcaSystem(110, 64), s0, 100)
    assert p.state.width == 64 and p.resources_spent == 256
    with pytest.raises(PredictorInapplicable):
        predict(PredictorSpec("coarse-simulator", 256, (("factor", 32),)), EcaSystem(110, 64), s0, 1)


def test_frozen_and_chance_cost_nothing():
    s0 = EcaRow.random(64, np.random.default_rng(4))
    p = predict(PredictorSpec("frozen", 0), EcaSystem(110, 64), s0, 50)
    assert p.state == s0 and p.resources_spent == 0
    c1 = predict(PredictorSpec("chance-baseline", 0), EcaSystem(110, 64), s0, 50, seed=9)
    c2 = predict(PredictorSpec("chance-baseline", 0), EcaSystem(110, 64), s0, 50, seed=9)
    assert c1 == c2 and c1.resources_spent == 0


def test_efficiency_readings_and_zero_budget():
    a, b = EcaRow.from_string("0000"), EcaRow.from_string("0001")
    rep = prediction_efficiency("p", "s", a, 3, 8, a, b, 4)
    assert rep.distance == 0.25 and rep.accuracy == 0.75
    assert rep.eta_distance == 0.25 / 8 and rep.eta_accuracy == 0.75 / 8
    zero = prediction_efficiency("p", "s", a, 3, 0, a, b, 0)
    assert zero.eta_distance is None and zero.eta_accuracy is None
    with pytest.raises(InvalidInput):
        prediction_efficiency("p", "s", a, 3, 2, a, b, 4)


def test_predictor_validation():
    with pytest.raises(InvalidInput):
        PredictorSpec("oracle", 10)
    with pytest.raises(InvalidInput):
        PredictorSpec("frozen", -1)
    assert PredictorSpec("coarse-simulator", 256, (("factor", 2),)).id == "coarse-simulator[r=256,factor=2]"


def test_sweep_is_deterministic_and_marks_inapplicable(tmp_path):
    systems = [EcaSystem(90, 32), EcaSystem(110, 32)]
    preds = [PredictorSpec("frozen", 0), PredictorSpec("additive-shortcut", 32 * 3)]
    c1, r1 = efficiency_sweep(systems, preds, [1, 7, 8, 64], 5, 42)
    c2, r2 = efficiency_sweep(systems, preds, [1, 7, 8, 64], 5, 42)
    assert c1 == c2 and r1 == r2
    by = {(c.system_id, c.predictor_id): c for c in c1}
    assert by[("rule90-w32", "additive-shortcut[r=96]")].inapplicable == ()
    assert by[("rule110-w32", "additive-shortcut[r=96]")].inapplicable == (1, 7, 8, 64)
    write_sweep_csv(r1, tmp_path / "s.csv")
    write_curves_csv(c1, tmp_path / "c.csv")
    with open(tmp_path / "s.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["eta_distance"] for r in rows if r["predictor"] == "frozen[r=0]"} == {"NA"}


def test_chance_band():
    assert chance_band() == (0.4, 0.6)
