import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cilab.agent import CoupledState, copy_environment, counter_agent, eca_environment, identity_agent, \
    lfsr_agent, run_coupled, static_environment
from cilab.automata import EcaRow
from cilab.errors import InvalidInput
from cilab.info import (
    IDENTITY,
    BitFlipNoise,
    CoarseGrainer,
    autonomy_index,
    complexity_curve,
    conditional_entropy,
    empirical_entropy,
    environment_conditional_entropy,
    fit_slope,
    irreducibility_score,
    mutual_information,
    write_complexity_csv,
)

# largest drop of K-hat between consecutive prefixes, measured over rules
# {18, 30, 45, 54, 62, 73, 90, 105, 110, 150} x widths {5, 13, 32, 64} x 4 seeds: 70 bits
KHAT_DIP_SLACK = 128

symbols = st.lists(st.integers(0, 5), min_size=1, max_size=200)
pairs = st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=200)


def entropy_oracle(xs):
    n = len(xs)
    return -sum(c / n * math.log2(c / n) for c in Counter(xs).values())


@given(symbols)
def test_entropy_bounds(xs):
    h = empirical_entropy(xs)
    assert 0.0 <= h <= math.log2(len(set(xs))) + 1e-12
    assert h == pytest.approx(entropy_oracle(xs), abs=1e-12)


def test_entropy_known_values():
    assert empirical_entropy([0, 1, 2, 3]) == pytest.approx(2.0)
    assert empirical_entropy([7] * 10) == 0.0
    assert empirical_entropy([0, 0, 0, 1]) == pytest.approx(0.8112781244591328)
    with pytest.raises(InvalidInput):
        empirical_entropy([])


@given(pairs)
def test_chain_rule_and_mi_identities(ps):
    xs, ys = [p[0] for p in ps], [p[1] for p in ps]
    hx, hy, hxy = empirical_entropy(xs), empirical_entropy(ys), empirical_entropy(ps)
    assert conditional_entropy(xs, ys) == pytest.approx(hxy - hy, abs=1e-9)
    mi = mutual_information(xs, ys)
    assert mi == pytest.approx(mutual_information(ys, xs), abs=1e-12)
    assert mi == pytest.approx(max(hx - conditional_entropy(xs, ys), 0.0), abs=1e-9)
    assert -1e-12 <= mi <= min(hx, hy) + 1e-9
    assert mutual_information(xs, xs) == pytest.approx(hx, abs=1e-12)


def test_length_mismatch():
    with pytest.raises(InvalidInput):
        mutual_information([1, 2], [1])
    with pytest.raises(InvalidInput):
        conditional_entropy([1, 2], [1])


@given(st.binary(max_size=40))
def test_grainers(payload):
    assert IDENTITY(payload) == payload
    assert 0 <= CoarseGrainer("hash", k=8)(payload) < 256
    assert 0 <= CoarseGrainer("window", window=(2, 5))(payload) < 8


def test_grainer_ids_roundtrip():
    for spec in ("identity", "hash-8", "hash-3", "window-0-8"):
        assert CoarseGrainer.parse(spec).id == spec
    with pytest.raises(InvalidInput):
        CoarseGrainer.parse("fourier-3")
    with pytest.raises(InvalidInput):
        CoarseGrainer("hash", k=0)


def test_deterministic_environment_has_zero_lambda():
    row = EcaRow.random(16, np.random.default_rng(0))
    tr = run_coupled(counter_agent(), eca_environment(110), CoupledState(0, row), 2000)
    assert environment_conditional_entropy(tr, IDENTITY) == 0.0


def test_noise_gives_one_bit_of_lambda():
    tr = run_coupled(identity_agent(), copy_environment(), CoupledState(0, 0), 10_000, noise=BitFlipNoise(11))
    assert environment_conditional_entropy(tr, IDENTITY) == pytest.approx(1.0, abs=0.01)


def test_noise_is_seeded():
    a, b = BitFlipNoise(3), BitFlipNoise(3)
    assert [a.bit(t) for t in range(100)] == [b.bit(t) for t in range(100)]
    assert [a.bit(t) for t in range(100)] != [BitFlipNoise(4).bit(t) for t in range(100)]
    assert a(1, EcaRow.zeros(8)).popcount() == a.bit(1)


def test_copy_channel_mi():
    tr = run_coupled(lfsr_agent(), copy_environment(), CoupledState(1, 0), 10_000)
    rep = autonomy_index(tr, CoarseGrainer("window", window=(0, 1)))
    assert rep.I_agent_to_env == pytest.approx(1.0, abs=0.01)
    assert rep.samples == 10_000


def test_decoupled_system_mi_is_small():
    tr = run_coupled(counter_agent(3, act=False), copy_environment(), CoupledState(0, 0), 10_000,
                     noise=BitFlipNoise(5))
    rep = autonomy_index(tr, IDENTITY)
    assert rep.I_agent_to_env < 0.01 and rep.I_env_to_agent < 0.01


def test_fit_slope_exact_line():
    slope, icpt, resid = fit_slope([0, 1, 2, 3], [1, 3, 5, 7])
    assert slope == pytest.approx(2.0) and icpt == pytest.approx(1.0) and resid == pytest.approx(0, abs=1e-9)


@given(st.sampled_from([0, 30, 90, 110, 150, 184]), st.integers(4, 40), st.integers(0, 2 ** 32))
def test_khat_dips_stay_within_slack(rule, width, seed):
    row = EcaRow.random(width, np.random.default_rng(seed))
    tr = run_coupled(identity_agent(), eca_environment(rule, react=False), CoupledState(0, row), 120)
    ks = [k for _, k in complexity_curve(tr, list(range(0, 121, 4))).points]
    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            assert ks[j] >= ks[i] - KHAT_DIP_SLACK


def test_constant_trace_is_cheaper_than_chaotic():
    row = EcaRow.random(64, np.random.default_rng(1))
    steps = list(range(50, 501, 50))
    flat = complexity_curve(run_coupled(identity_agent(), static_environment(), CoupledState(0, row), 500), steps)
    chaos = complexity_curve(run_coupled(identity_agent(), eca_environment(30, react=False),
                                         CoupledState(0, row), 500), steps)
    assert flat.slope < 0.5 < 50 < chaos.slope
    assert irreducibility_score(chaos, flat) > 100
    with pytest.raises(InvalidInput):
        irreducibility_score(chaos, complexity_curve(
            run_coupled(identity_agent(), static_environment(), CoupledState(0, row), 500), steps, "lz78"))


def test_irreducibility_floor():
    row = EcaRow.zeros(8)
    flat = complexity_curve(run_coupled(identity_agent(), static_environment(), CoupledState(0, row), 10), [10])
    assert flat.slope == 0.0
    assert irreducibility_score(flat, flat) == 0.0


def test_prefix_validation(tmp_path):
    tr = run_coupled(identity_agent(), static_environment(), CoupledState(0, EcaRow.zeros(8)), 10)
    with pytest.raises(InvalidInput):
        complexity_curve(tr, [5, 3])
    with pytest.raises(InvalidInput):
        complexity_curve(tr, [11])
    c = complexity_curve(tr, [2, 4, 6])
    write_complexity_csv({"flat": c}, tmp_path / "k.csv")
    assert (tmp_path / "k.csv").read_text().splitlines()[0] == "system,t,khat_bits,slope,compressor"
