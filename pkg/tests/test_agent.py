import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cilab.agent import (
    AgentSpec,
    CoupledState,
    Diverged,
    EnvironmentSpec,
    ReturnTime,
    Status,
    check_autonomy_conditions,
    copy_environment,
    core_stability_probe,
    counter_agent,
    coupled_step,
    cycle_environment,
    eca_environment,
    identity_agent,
    lfsr_agent,
    perturbation_sensitivity,
    reactive_agent,
    read_state_log,
    replay_witness,
    run_coupled,
    static_environment,
    table_agent,
    write_trace,
)
from cilab.automata import EcaRow, eca_rule_table, eca_step
from cilab.errors import InvalidInput, SpecificationGap
from cilab.predictors import state_distance

rows16 = st.integers(0, 2 ** 16 - 1).map(lambda b: EcaRow(16, b))


def row(seed, width=16):
    return EcaRow.random(width, np.random.default_rng(seed))


@given(st.integers(0, 50), rows16)
def test_updates_read_the_same_snapshot(s_a, s_e):
    # agent sees the old environment; environment sees the old agent's action
    agent, env = counter_agent(), eca_environment(110)
    nxt = coupled_step(agent, env, CoupledState(s_a, s_e, 3))
    assert nxt.s_A == s_a + 1
    expect = eca_step(s_e, eca_rule_table(110))
    if s_a & 1:
        expect = expect.flip(0)
    assert nxt.s_E == expect and nxt.t == 4


def test_agent_input_is_from_time_t():
    seen = []
    agent = AgentSpec("probe", input_map=lambda e: e, g=None,
                      combine=lambda s, i, gv: seen.append(i) or s, output_map=lambda s: 0)
    env = EnvironmentSpec("tick", transition=lambda e, a: e + 1)
    run_coupled(agent, env, CoupledState(0, 10), 5)
    assert seen == [10, 11, 12, 13, 14]


def test_undefined_transition_is_a_specification_gap():
    agent = table_agent({(0, 0): 1, (1, 0): 0}, {0: 0, 1: 1}, (0, 1))
    env = cycle_environment(2)  # reads 1 at odd times; table has no (s, 1) entries
    with pytest.raises(SpecificationGap, match="t=1"):
        run_coupled(agent, env, CoupledState(0, 0), 5)


@given(st.integers(0, 2 ** 32), st.integers(1, 40), st.integers(0, 40))
def test_trace_prefix_property(seed, h1, extra):
    agent, env = counter_agent(), eca_environment(30)
    s0 = CoupledState(0, row(seed))
    short = run_coupled(agent, env, s0, h1)
    long = run_coupled(agent, env, s0, h1 + extra)
    assert long.records[: len(short)] == short.records
    assert len(short) == h1 + 1


@given(st.integers(0, 2 ** 32))
def test_runs_are_deterministic(seed):
    agent, env = lfsr_agent(), eca_environment(110)
    s0 = CoupledState(1, row(seed))
    assert run_coupled(agent, env, s0, 30).records == run_coupled(agent, env, s0, 30).records


def test_early_stop_and_first_hit():
    tr = run_coupled(counter_agent(), static_environment(), CoupledState(0, row(1)), 50,
                     prop=lambda a, e: a == 7, early_stop=True)
    assert tr.first_hit == 7 and len(tr) == 8


def test_horizon_validation():
    with pytest.raises(InvalidInput):
        run_coupled(identity_agent(), static_environment(), CoupledState(0, row(0)), 0)


def test_trace_files_roundtrip(tmp_path):
    agent, env = counter_agent(), eca_environment(110)
    tr = run_coupled(agent, env, CoupledState(0, row(3)), 20)
    bin_path = write_trace(tr, tmp_path / "trace.csv")
    log = read_state_log(bin_path)
    assert [t for t, _, _ in log] == list(range(21))
    for rec, (_, a, e) in zip(tr.records, log):
        assert a == agent.serialize(rec.s_A)
        assert EcaRow.from_bytes(e, 16) == rec.s_E
    with open(tmp_path / "trace.csv", newline="") as fh:
        body = list(csv.DictReader(fh))
    assert len(body) == 21 and body[0].keys() == {"t", "s_A_hash", "s_E_hash", "i_A", "o_A", "prop"}


# --- autonomy predicates ------------------------------------------------------


def test_reactive_agent_is_proven_non_autonomous():
    rep = check_autonomy_conditions(reactive_agent(), eca_environment(110), CoupledState(0, row(0)), 200)
    c1 = rep.condition1_internal_state_independence
    assert not c1.holds and c1.status is Status.PROVEN_FALSE
    assert rep.condition2_generative.status is Status.PROVEN_FALSE
    assert not rep.all_hold


@given(st.integers(0, 2 ** 32))
def test_counter_on_rule110_satisfies_all_with_replayable_witnesses(seed):
    agent, env = counter_agent(), eca_environment(110)
    rep = check_autonomy_conditions(agent, env, CoupledState(0, row(seed)), 200)
    assert rep.all_hold
    for c in rep.conditions():
        assert c.status is Status.WITNESSED
        assert replay_witness(agent, env, c.witness)


def test_forged_witness_fails_replay():
    agent, env = counter_agent(), eca_environment(110)
    rep = check_autonomy_conditions(agent, env, CoupledState(0, row(5)), 200)
    w = rep.condition1_internal_state_independence.witness
    a = w.states[0]
    forged = type(w)(w.kind, (a, a), w.detail)
    assert not replay_witness(agent, env, forged)


def test_inert_action_channel_is_proven_false():
    rep = check_autonomy_conditions(counter_agent(3, act=False), cycle_environment(4), CoupledState(0, 0), 100)
    assert rep.condition1_internal_state_independence.holds
    assert rep.condition3_coupling.status is Status.PROVEN_FALSE


def test_probe_budget_bounds_work():
    rep = check_autonomy_conditions(counter_agent(), eca_environment(110), CoupledState(0, row(2)), 1)
    assert rep.evaluations <= 4
    with pytest.raises(InvalidInput):
        check_autonomy_conditions(counter_agent(), eca_environment(110), CoupledState(0, row(2)), 0)


# --- operational closure probes ----------------------------------------------


def test_perturbation_sensitivity_of_a_blind_agent_is_zero():
    blind = lambda s, e: s + 1
    d = perturbation_sensitivity(blind, 3, row(0), 3, state_distance, 50, seed=1)
    assert d == 0.0


def test_perturbation_sensitivity_exhaustive_single_flip():
    # T(s, e) = e: one flipped cell is one differing bit out of 16
    copy = lambda s, e: e
    d = perturbation_sensitivity(copy, 0, row(0), 1, state_distance, 0, seed=0, exhaustive=True,
                                 serialize=lambda e: e.to_bytes())
    assert d == pytest.approx(1 / 16)


def test_core_stability():
    agent = counter_agent(4)
    ret = core_stability_probe(agent, static_environment(), {0}, CoupledState(0, row(0)),
                               perturb=lambda s: 1, horizon=10)
    assert ret == ReturnTime(3)
    stuck = core_stability_probe(identity_agent(), static_environment(), {0}, CoupledState(0, row(0)),
                                 perturb=lambda s: 5, horizon=10)
    assert stuck == Diverged(10)


def test_copy_environment_follows_action():
    tr = run_coupled(lfsr_agent(), copy_environment(), CoupledState(1, 0), 50)
    for prev, cur in zip(tr.records, tr.records[1:]):
        assert cur.s_E == prev.o_A
