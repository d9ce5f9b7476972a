"""Minimal agent / environment formalism and the coupled dynamics stepper.

Both update equations of a coupled step read the same time-``t`` snapshot::

    s_A(t+1) = T_A(s_A(t), I_A(s_E(t)))
    s_E(t+1) = T_E(s_E(t), O_A(s_A(t)))

``T_A`` is always assembled as ``combine(s, i, g(s))`` so that the generative
component ``g`` is a distinguishable part of the agent's transition.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import itertools
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

from .automata import EcaRow, eca_rule_table, eca_step
from .errors import InvalidInput, SpecificationGap


def _default_serialize(state: Any) -> bytes:
    if isinstance(state, EcaRow):
        return state.to_bytes()
    if isinstance(state, bytes):
        return state
    if isinstance(state, bool):
        return bytes([int(state)])
    if isinstance(state, int):
        return state.to_bytes(max(1, (state.bit_length() + 8) // 8), "little", signed=True)
    return repr(state).encode("utf-8")


@dataclass(frozen=True)
class AgentSpec:
    """Executable ``(S_A, I_A, T_A, O_A, G)`` with a distinguished generative part.

    ``states`` optionally enumerates a finite state space; when given, the
    autonomy checks can prove absence of a property instead of merely failing
    to find a witness.
    """

    name: str
    input_map: Callable[[Any], Hashable]
    g: Callable[[Any], Any] | None
    combine: Callable[[Any, Hashable, Any], Any]
    output_map: Callable[[Any], Hashable]
    goal: Callable[[Any, Any], bool] = lambda s_a, s_e: False
    serialize: Callable[[Any], bytes] = _default_serialize
    states: tuple | None = None

    def transition(self, s_a, i_a):
        gv = None if self.g is None else self.g(s_a)
        return self.combine(s_a, i_a, gv)


@dataclass(frozen=True)
class EnvironmentSpec:
    name: str
    transition: Callable[[Any, Hashable], Any]
    complexity_class: str = "finite"
    serialize: Callable[[Any], bytes] = _default_serialize


@dataclass(frozen=True)
class CoupledState:
    s_A: Any
    s_E: Any
    t: int = 0


def coupled_step(agent: AgentSpec, env: EnvironmentSpec, cs: CoupledState) -> CoupledState:
    try:
        i_a = agent.input_map(cs.s_E)
        o_a = agent.output_map(cs.s_A)
        s_a = agent.transition(cs.s_A, i_a)
        s_e = env.transition(cs.s_E, o_a)
    except (KeyError, IndexError, LookupError) as exc:
        raise SpecificationGap(
            f"transition undefined at t={cs.t} on agent state {cs.s_A!r} / environment state "
            f"{_short(cs.s_E)}: {exc!r}"
        ) from exc
    if s_a is None:
        raise SpecificationGap(f"T_A undefined on agent state {cs.s_A!r} at t={cs.t}")
    if s_e is None:
        raise SpecificationGap(f"T_E undefined on environment state {_short(cs.s_E)} at t={cs.t}")
    return CoupledState(s_a, s_e, cs.t + 1)


def _short(x) -> str:
    text = repr(x)
    return text if len(text) <= 80 else text[:77] + "..."


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    t: int
    s_A: Any
    s_E: Any
    i_A: Hashable
    o_A: Hashable
    prop: bool | None = None


@dataclass
class CoupledTrace:
    records: list[TraceRecord]
    agent: AgentSpec = field(repr=False)
    env: EnvironmentSpec = field(repr=False)
    first_hit: int | None = None
    seed: int | None = None
    config_hash: str | None = None

    def __len__(self):
        return len(self.records)

    def agent_states(self) -> list:
        return [r.s_A for r in self.records]

    def env_states(self) -> list:
        return [r.s_E for r in self.records]

    def actions(self) -> list:
        return [r.o_A for r in self.records]

    def state_bytes(self, k: int) -> bytes:
        rec = self.records[k]
        return _frame(self.agent.serialize(rec.s_A)) + _frame(self.env.serialize(rec.s_E))


def _frame(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


NoiseHook = Callable[[int, Any], Any]


def run_coupled(agent: AgentSpec, env: EnvironmentSpec, s0: CoupledState, horizon: int,
                prop: Callable[[Any, Any], bool] | None = None, early_stop: bool = False,
                noise: NoiseHook | None = None, seed: int | None = None,
                config_hash: str | None = None) -> CoupledTrace:
    """Iterate :func:`coupled_step` ``horizon`` times from ``s0``.

    ``noise(t, s_E)`` if given post-processes each new environment state; it
    is the only entry point for stochasticity and must itself be seeded.
    """
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    records = []
    first_hit = None
    cs = s0
    while True:
        hit = None
        if prop is not None:
            hit = bool(prop(cs.s_A, cs.s_E))
            if hit and first_hit is None:
                first_hit = cs.t
        records.append(TraceRecord(cs.t, cs.s_A, cs.s_E, agent.input_map(cs.s_E),
                                   agent.output_map(cs.s_A), hit))
        if cs.t - s0.t >= horizon or (early_stop and first_hit is not None):
            break
        cs = coupled_step(agent, env, cs)
        if noise is not None:
            cs = CoupledState(cs.s_A, noise(cs.t, cs.s_E), cs.t)
    return CoupledTrace(records, agent, env, first_hit, seed, config_hash)


def state_hash(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


def write_trace(trace: CoupledTrace, csv_path: str | Path) -> Path:
    """Write the CSV view and a sidecar ``.bin`` log of full serialized states.

    The sidecar is a sequence of records ``<u64 t><u32 len><agent bytes><u32 len><env bytes>``.
    """
    csv_path = Path(csv_path)
    bin_path = csv_path.with_suffix(".bin")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh, open(bin_path, "wb") as log:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "s_A_hash", "s_E_hash", "i_A", "o_A", "prop"])
        for rec in trace.records:
            a = trace.agent.serialize(rec.s_A)
            e = trace.env.serialize(rec.s_E)
            prop = "" if rec.prop is None else int(rec.prop)
            w.writerow([rec.t, state_hash(a), state_hash(e), rec.i_A, rec.o_A, prop])
            log.write(struct.pack("<Q", rec.t) + _frame(a) + _frame(e))
    return bin_path


def read_state_log(bin_path: str | Path) -> list[tuple[int, bytes, bytes]]:
    data = Path(bin_path).read_bytes()
    out, pos = [], 0
    while pos < len(data):
        (t,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        parts = []
        for _ in range(2):
            (n,) = struct.unpack_from("<I", data, pos)
            pos += 4
            parts.append(data[pos:pos + n])
            pos += n
        out.append((t, parts[0], parts[1]))
    return out


# ---------------------------------------------------------------------------
# Autonomy predicates
# ---------------------------------------------------------------------------


class Status(str, enum.Enum):
    WITNESSED = "witnessed"
    PROVEN_FALSE = "proven-false"
    NO_WITNESS = "no witness found within budget"


@dataclass(frozen=True)
class Witness:
    """Coupled states whose one-step images demonstrate a condition."""

    kind: str
    states: tuple[CoupledState, ...]
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    status: Status
    witness: Witness | None = None
    evidence: str = ""


@dataclass(frozen=True)
class AutonomyReport:
    condition1_internal_state_independence: ConditionResult
    condition2_generative: ConditionResult
    condition3_coupling: ConditionResult
    evaluations: int = 0

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions())

    def conditions(self) -> tuple[ConditionResult, ...]:
        return (self.condition1_internal_state_independence, self.condition2_generative,
                self.condition3_coupling)


def _distinct(values: Iterable, key=repr) -> list:
    seen, out = set(), []
    for v in values:
        k = key(v)
        if k not in seen:
            seen.add(k)
            out.append(v)
    return out


def check_autonomy_conditions(agent: AgentSpec, env: EnvironmentSpec, s0: CoupledState,
                              probe_budget: int) -> AutonomyReport:
    """Bounded witness search for the three autonomy conditions.

    Candidate states come from the coupled trajectory of ``s0``; at most
    ``probe_budget`` coupled steps are taken and at most ``probe_budget``
    transition evaluations are spent per condition.
    """
    if probe_budget < 1:
        raise InvalidInput("probe_budget must be >= 1")
    trace = run_coupled(agent, env, s0, probe_budget)
    agents = _distinct(trace.agent_states(), key=agent.serialize)
    envs = _distinct(trace.env_states(), key=env.serialize)
    spent = probe_budget

    c1, n1 = _condition1(agent, agents, envs, probe_budget)
    c2, n2 = _condition2(agent, agents, envs, probe_budget)
    c3, n3 = _condition3(agent, env, agents, envs, probe_budget)
    return AutonomyReport(c1, c2, c3, spent + n1 + n2 + n3)


def _pairs(items: list):
    return itertools.combinations(items, 2)


def _condition1(agent, agents, envs, budget):
    if agent.states is not None and len(agent.states) < 2:
        return ConditionResult(False, Status.PROVEN_FALSE,
                               evidence="agent state space has a single state"), 0
    spent = 0
    for e in envs:
        i = agent.input_map(e)
        for a1, a2 in _pairs(agents):
            if spent + 2 > budget:
                return ConditionResult(False, Status.NO_WITNESS), spent
            spent += 2
            if agent.serialize(agent.transition(a1, i)) != agent.serialize(agent.transition(a2, i)):
                w = Witness("internal-state", (CoupledState(a1, e), CoupledState(a2, e)), {"input": i})
                return ConditionResult(True, Status.WITNESSED, w), spent
    return ConditionResult(False, Status.NO_WITNESS), spent


def _condition2(agent, agents, envs, budget):
    if agent.g is None:
        return ConditionResult(False, Status.PROVEN_FALSE,
                               evidence="no generative component declared"), 0
    if agent.states is not None:
        gvals = {repr(agent.g(s)) for s in agent.states}
        if len(gvals) < 2:
            return ConditionResult(False, Status.PROVEN_FALSE,
                                   evidence="generative component constant on the declared state space"), 0
    spent = 0
    for e in envs:
        i = agent.input_map(e)
        for a1, a2 in _pairs(agents):
            if spent + 4 > budget:
                return ConditionResult(False, Status.NO_WITNESS), spent
            spent += 4
            g1, g2 = agent.g(a1), agent.g(a2)
            if repr(g1) == repr(g2):
                continue
            if agent.serialize(agent.transition(a1, i)) != agent.serialize(agent.transition(a2, i)):
                w = Witness("generative", (CoupledState(a1, e), CoupledState(a2, e)),
                            {"input": i, "g": (g1, g2)})
                return ConditionResult(True, Status.WITNESSED, w), spent
    return ConditionResult(False, Status.NO_WITNESS), spent


def _condition3(agent, env, agents, envs, budget):
    if agent.states is not None:
        outs = {repr(agent.output_map(s)) for s in agent.states}
        if len(outs) < 2:
            return ConditionResult(False, Status.PROVEN_FALSE,
                                   evidence="output map constant: action channel inert"), 0
    spent = 0
    read_w = None
    for e1, e2 in _pairs(envs):
        if spent + 2 > budget:
            break
        spent += 2
        if agent.input_map(e1) != agent.input_map(e2):
            a = agents[0]
            read_w = (CoupledState(a, e1), CoupledState(a, e2))
            break
    write_w = None
    if read_w is not None:
        by_action = _distinct(agents, key=lambda a: repr(agent.output_map(a)))
        done = False
        for e in envs:
            for a1, a2 in _pairs(by_action):
                if spent + 2 > budget:
                    done = True
                    break
                spent += 2
                n1 = env.transition(e, agent.output_map(a1))
                n2 = env.transition(e, agent.output_map(a2))
                if env.serialize(n1) != env.serialize(n2):
                    write_w = (CoupledState(a1, e), CoupledState(a2, e))
                    done = True
                    break
            if done:
                break
    if read_w is None or write_w is None:
        missing = "read" if read_w is None else "write"
        return ConditionResult(False, Status.NO_WITNESS, evidence=f"{missing} channel not exercised"), spent
    return ConditionResult(True, Status.WITNESSED, Witness("coupling", read_w + write_w)), spent


def replay_witness(agent: AgentSpec, env: EnvironmentSpec, witness: Witness) -> bool:
    """Re-derive a witness's claimed inequality by stepping its states."""
    nxt = [coupled_step(agent, env, cs) for cs in witness.states]
    ser_a, ser_e = agent.serialize, env.serialize
    if witness.kind in ("internal-state", "generative"):
        (c1, c2), (n1, n2) = witness.states, nxt
        same_input = agent.input_map(c1.s_E) == agent.input_map(c2.s_E)
        ok = same_input and ser_a(c1.s_A) != ser_a(c2.s_A) and ser_a(n1.s_A) != ser_a(n2.s_A)
        if witness.kind == "generative":
            ok = ok and repr(agent.g(c1.s_A)) != repr(agent.g(c2.s_A))
        return ok
    if witness.kind == "coupling":
        r1, r2, w1, w2 = witness.states
        reads = agent.input_map(r1.s_E) != agent.input_map(r2.s_E)
        writes = (ser_e(w1.s_E) == ser_e(w2.s_E)
                  and ser_e(nxt[2].s_E) != ser_e(nxt[3].s_E))
        return reads and writes
    raise InvalidInput(f"unknown witness kind {witness.kind!r}")


# ---------------------------------------------------------------------------
# Operational-closure probes
# ---------------------------------------------------------------------------


def perturbation_sensitivity(transition: Callable[[Any, EcaRow], Any], s: Any, e: EcaRow,
                             delta: int, metric: Callable[[bytes, bytes], float],
                             trials: int, seed: int, serialize: Callable[[Any], bytes] = _default_serialize,
                             exhaustive: bool = False) -> float:
    """Largest output distance over environment states within ``delta`` cell flips of ``e``.

    Perturbed states flip between 1 and ``delta`` distinct cells chosen by a
    seeded generator; ``exhaustive`` instead enumerates every flip set of
    size exactly ``delta``.
    """
    if delta < 1:
        raise InvalidInput("delta must be >= 1 cell")
    base = serialize(transition(s, e))
    if exhaustive:
        candidates = (
            _flip_many(e, cells) for cells in itertools.combinations(range(e.width), delta)
        )
    else:
        rng = np.random.default_rng(seed)

        def sampled():
            for _ in range(trials):
                k = int(rng.integers(1, delta + 1))
                cells = rng.choice(e.width, size=k, replace=False)
                yield _flip_many(e, cells)
        candidates = sampled()
    worst = 0.0
    for e2 in candidates:
        worst = max(worst, metric(base, serialize(transition(s, e2))))
    return worst


def _flip_many(row: EcaRow, cells) -> EcaRow:
    mask = 0
    for c in cells:
        mask |= 1 << int(c)
    return EcaRow(row.width, row.bits ^ mask)


@dataclass(frozen=True)
class ReturnTime:
    t: int


@dataclass(frozen=True)
class Diverged:
    horizon: int


def core_stability_probe(agent: AgentSpec, env: EnvironmentSpec, core: Iterable, s0: CoupledState,
                         perturb: Callable[[Any], Any], horizon: int) -> ReturnTime | Diverged:
    core_keys = {agent.serialize(c) for c in core}
    if not core_keys:
        raise InvalidInput("core set must be non-empty")
    if agent.serialize(s0.s_A) not in core_keys:
        raise InvalidInput("s0 agent state must lie in the core")
    cs = CoupledState(perturb(s0.s_A), s0.s_E, s0.t)
    for k in range(horizon + 1):
        if agent.serialize(cs.s_A) in core_keys:
            return ReturnTime(k)
        if k < horizon:
            cs = coupled_step(agent, env, cs)
    return Diverged(horizon)


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

NOOP = 0


def reactive_agent(action: Hashable = NOOP) -> AgentSpec:
    """Memoryless agent: a single internal state, so its action never varies."""
    return AgentSpec(
        name="reactive",
        input_map=_read_cell0,
        g=None,
        combine=lambda s, i, gv: 0,
        output_map=lambda s: action,
        states=(0,),
    )


def identity_agent() -> AgentSpec:
    return AgentSpec(
        name="identity",
        input_map=_read_cell0,
        g=None,
        combine=lambda s, i, gv: s,
        output_map=lambda s: NOOP,
    )


def counter_agent(modulus: int | None = None, act: bool = True) -> AgentSpec:
    """``s_A`` counts steps; with ``act`` it emits its parity as the action bit."""
    if modulus is None:
        g = lambda s: s + 1
    else:
        g = lambda s: (s + 1) % modulus
    return AgentSpec(
        name="counter" if modulus is None else f"counter-mod-{modulus}",
        input_map=_read_cell0,
        g=g,
        combine=lambda s, i, gv: gv,
        output_map=(lambda s: s & 1) if act else (lambda s: NOOP),
        states=None if modulus is None else tuple(range(modulus)),
    )


def table_agent(table: dict, outputs: dict, states: Sequence, name: str = "table") -> AgentSpec:
    """Finite agent ``T_A(s, i) = table[s, i]``; ``g`` exposes the row of ``s``."""
    states = tuple(states)
    inputs = sorted({i for (_, i) in table}, key=repr)
    return AgentSpec(
        name=name,
        input_map=_read_cell0,
        g=lambda s: tuple(table[(s, i)] for i in inputs),
        combine=lambda s, i, gv: table[(s, i)],
        output_map=lambda s: outputs[s],
        states=states,
    )


def lfsr_agent(taps: int = 0xB400, bits: int = 16) -> AgentSpec:
    """Input-blind Galois LFSR whose low bit is the action; a deterministic bit source."""

    def g(s):
        lsb = s & 1
        s >>= 1
        return s ^ taps if lsb else s

    return AgentSpec(
        name=f"lfsr{bits}",
        input_map=lambda e: 0,
        g=g,
        combine=lambda s, i, gv: gv,
        output_map=lambda s: s & 1,
    )


def _read_cell0(s_e) -> Hashable:
    if isinstance(s_e, EcaRow):
        return s_e[0]
    if isinstance(s_e, tuple) and s_e:
        return s_e[0]
    if isinstance(s_e, int):
        return s_e & 1
    return 0


def static_environment() -> EnvironmentSpec:
    return EnvironmentSpec("static", transition=lambda s, a: s, complexity_class="finite")


def eca_environment(rule_index: int, action_cell: int = 0, react: bool = True) -> EnvironmentSpec:
    """Ring updated by an ECA rule; a truthy action XORs a 1 into ``action_cell`` afterwards."""
    rule = eca_rule_table(rule_index)

    def step(row: EcaRow, action):
        nxt = eca_step(row, rule)
        if react and action:
            nxt = nxt.flip(action_cell)
        return nxt

    return EnvironmentSpec(f"eca-{rule_index}", transition=step, complexity_class=f"CA-rule-{rule_index}")


def cycle_environment(period: int) -> EnvironmentSpec:
    """Integer clock modulo ``period`` that ignores actions."""
    return EnvironmentSpec(f"cycle-{period}", transition=lambda s, a: (s + 1) % period)


def copy_environment() -> EnvironmentSpec:
    """Next environment state is the agent's action bit."""
    return EnvironmentSpec("copy", transition=lambda s, a: int(a) & 1)
