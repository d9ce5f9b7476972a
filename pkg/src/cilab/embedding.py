"""Compile a Turing machine and its input into a coupled agent/environment system.

The agent's state is ``phi(q)``; its generative component returns the row of
the transition table for ``q``. Because both coupled updates read the same
snapshot, the action emitted at time ``t`` cannot depend on the symbol the
agent reads at time ``t``. The action is therefore the whole conditional tape
operation of the current state, ``symbol -> (write, move)``, packed into an
integer by :class:`ActionCodec`; the environment applies the entry matching
the symbol under its head. One coupled step simulates exactly one transition.

The environment is a persistent zipper over the tape. Every cell node carries
an additive 64-bit fingerprint of the non-blank cells below it, so comparing a
decoded tape against an independently maintained one costs O(1) per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .agent import AgentSpec, CoupledState, EnvironmentSpec, coupled_step
from .automata import (
    TapeConfiguration,
    TuringMachine,
    _check_word,
    initial_configuration,
)
from .errors import InvalidInput, MalformedMachine

M64 = (1 << 64) - 1


def cell_hash(idx: int, sym: int) -> int:
    """splitmix64 of a (cell, symbol) pair; symbol 0 is the blank and hashes to 0."""
    if sym == 0:
        return 0
    z = ((idx & M64) * 0x9E3779B97F4A7C15 + sym * 0xD1B54A32D192ED03) & M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


# a node is (cell index, symbol id, next node, fingerprint of this node and below)
def _push(idx: int, sym: int, rest):
    if rest is None and sym == 0:
        return None
    below = 0 if rest is None else rest[3]
    return (idx, sym, rest, (below + cell_hash(idx, sym)) & M64)


@dataclass(frozen=True, slots=True)
class TapeEnvState:
    head: int
    sym: int
    left: Any  # cells head-1, head-2, ...
    right: Any  # cells head+1, head+2, ...

    @property
    def fingerprint(self) -> int:
        lf = 0 if self.left is None else self.left[3]
        rf = 0 if self.right is None else self.right[3]
        return (lf + rf + cell_hash(self.head, self.sym)) & M64

    def cells(self) -> dict[int, int]:
        out = {}
        if self.sym:
            out[self.head] = self.sym
        for lst in (self.left, self.right):
            node = lst
            while node is not None:
                if node[1]:
                    out[node[0]] = node[1]
                node = node[2]
        return out


def tape_state_from_cells(cells: Mapping[int, int], head: int) -> TapeEnvState:
    left = right = None
    for i in sorted((i for i in cells if i < head)):
        left = _push(i, cells[i], left)
    for i in sorted((i for i in cells if i > head), reverse=True):
        right = _push(i, cells[i], right)
    return TapeEnvState(head, cells.get(head, 0), left, right)


@dataclass(frozen=True)
class ActionCodec:
    """Bijection between conditional tape operations and integer action ids.

    An operation is a tuple, indexed by read symbol, of ``(write, move)`` with
    ``move`` 0 for L and 1 for R. Id 0 is the no-op emitted from halting states.
    """

    n_symbols: int

    @property
    def size(self) -> int:
        return (2 * self.n_symbols) ** self.n_symbols + 1

    def encode(self, ops: Sequence[tuple[int, int]] | None) -> int:
        if ops is None:
            return 0
        if len(ops) != self.n_symbols:
            raise InvalidInput("operation table has the wrong arity")
        code, base = 0, 2 * self.n_symbols
        for w, m in reversed(ops):
            if not (0 <= w < self.n_symbols and m in (0, 1)):
                raise InvalidInput(f"bad tape operation {(w, m)!r}")
            code = code * base + 2 * w + m
        return code + 1

    def decode(self, action: int) -> tuple[tuple[int, int], ...] | None:
        if not 0 <= action < self.size:
            raise InvalidInput(f"action id {action} outside codec range")
        if action == 0:
            return None
        code, base = action - 1, 2 * self.n_symbols
        ops = []
        for _ in range(self.n_symbols):
            code, digit = divmod(code, base)
            ops.append((digit // 2, digit % 2))
        return tuple(ops)


@dataclass(frozen=True)
class EmbeddingMap:
    tm: TuringMachine = field(repr=False)
    phi: Mapping[str, int]
    codec: ActionCodec
    phi_inv: dict = field(init=False, repr=False)
    sym_id: dict = field(init=False, repr=False)

    def __post_init__(self):
        ids = list(self.phi.values())
        if set(self.phi) != set(self.tm.states):
            raise MalformedMachine("phi must be defined on every machine state")
        if len(set(ids)) != len(ids):
            raise MalformedMachine("phi is not injective")
        object.__setattr__(self, "phi_inv", {v: k for k, v in self.phi.items()})
        # tape layout: environment symbol id k is tape_alphabet[k] with the blank moved to 0
        order = [self.tm.blank] + [s for s in self.tm.tape_alphabet if s != self.tm.blank]
        object.__setattr__(self, "sym_id", {s: k for k, s in enumerate(order)})

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted(self.sym_id, key=self.sym_id.get))

    def decode_env(self, s_e: TapeEnvState) -> tuple[dict[int, str], int]:
        names = self.symbols
        return {i: names[k] for i, k in s_e.cells().items()}, s_e.head

    def decode(self, cs: CoupledState) -> TapeConfiguration:
        cells, head = self.decode_env(cs.s_E)
        state = self.phi_inv.get(cs.s_A, f"<unmapped {cs.s_A!r}>")
        return TapeConfiguration.from_cells(cells, head, state, cs.t, self.tm.blank)

    def encode_config(self, cfg: TapeConfiguration) -> CoupledState:
        cells = {i: self.sym_id[s] for i, s in cfg.tape}
        return CoupledState(self.phi[cfg.state], tape_state_from_cells(cells, cfg.head), cfg.steps_elapsed)


@dataclass(frozen=True)
class Property:
    name: str
    fn: Callable[[Any, Any], bool] = field(compare=False)

    def __call__(self, s_a, s_e) -> bool:
        return self.fn(s_a, s_e)


@dataclass(frozen=True)
class EmbeddedSystem:
    agent: AgentSpec
    env: EnvironmentSpec
    s0: CoupledState
    map: EmbeddingMap
    source: tuple[TuringMachine, tuple[str, ...]]

    @property
    def goal(self) -> Property:
        acc = self.map.phi[self.source[0].accept]
        return Property("reaches-accept", lambda s_a, s_e: s_a == acc)


def _serialize_tape(s_e: TapeEnvState) -> bytes:
    parts = [s_e.head.to_bytes(8, "little", signed=True)]
    for i, k in sorted(s_e.cells().items()):
        parts.append(i.to_bytes(8, "little", signed=True) + bytes([k]))
    return b"".join(parts)


def build_embedded_machine(tm: TuringMachine, word: Sequence[str],
                           phi: Mapping[str, int] | None = None) -> EmbeddedSystem:
    """Agent/environment pair whose coupled run reproduces ``tm`` on ``word``."""
    errs = tm.violations()
    if errs:
        raise MalformedMachine("; ".join(errs))
    _check_word(tm, word)
    if len(tm.tape_alphabet) > 255:
        raise MalformedMachine("tape alphabets above 255 symbols are not supported")
    if phi is None:
        phi = {q: k for k, q in enumerate(tm.states)}
    emap = EmbeddingMap(tm, dict(phi), ActionCodec(len(tm.tape_alphabet)))
    sid = emap.sym_id
    n_sym = len(sid)
    halting = {emap.phi[tm.accept], emap.phi[tm.reject]}

    rows: dict[int, tuple | None] = {}
    outputs: dict[int, int] = {}
    by_id = sorted(sid, key=sid.get)
    for q in tm.states:
        a = emap.phi[q]
        if a in halting:
            rows[a], outputs[a] = None, 0
            continue
        row = []
        for sym in by_id:
            nxt, w, m = tm.transition(q, sym)
            row.append((emap.phi[nxt], sid[w], 1 if m == "R" else 0))
        rows[a] = tuple(row)
        outputs[a] = emap.codec.encode([(w, m) for _, w, m in row])

    def combine(s_a, i_a, row):
        return s_a if row is None else row[i_a][0]

    agent = AgentSpec(
        name=f"tm-embedded:{tm.name or 'machine'}",
        input_map=lambda s_e: s_e.sym,
        g=rows.__getitem__,
        combine=combine,
        output_map=outputs.__getitem__,
        goal=lambda s_a, s_e: s_a == emap.phi[tm.accept],
        serialize=lambda s_a: s_a.to_bytes(4, "little"),
        states=tuple(sorted(rows)),
    )

    decode_ops = emap.codec.decode

    def tape_step(s: TapeEnvState, action: int) -> TapeEnvState:
        ops = decode_ops(action)
        if ops is None:
            return s
        w, m = ops[s.sym]
        if m:
            left = _push(s.head, w, s.left)
            right = s.right
            if right is not None and right[0] == s.head + 1:
                return TapeEnvState(s.head + 1, right[1], left, right[2])
            return TapeEnvState(s.head + 1, 0, left, right)
        right = _push(s.head, w, s.right)
        left = s.left
        if left is not None and left[0] == s.head - 1:
            return TapeEnvState(s.head - 1, left[1], left[2], right)
        return TapeEnvState(s.head - 1, 0, left, right)

    env = EnvironmentSpec("tm-tape", transition=tape_step, complexity_class="TM-tape",
                          serialize=_serialize_tape)
    s0 = emap.encode_config(initial_configuration(tm, word))
    return EmbeddedSystem(agent, env, s0, emap, (tm, tuple(word)))


def halting_property(sys: EmbeddedSystem) -> Property:
    tm = sys.source[0]
    halt_ids = frozenset((sys.map.phi[tm.accept], sys.map.phi[tm.reject]))
    return Property("halts", lambda s_a, s_e: s_a in halt_ids)


@dataclass(frozen=True)
class EpOutcome:
    kind: str  # "reached" | "unknown"
    t: int | None
    budget: int
    property_id: str
    spent: int

    @property
    def reached(self) -> bool:
        return self.kind == "reached"

    def label(self) -> str:
        return f"Reached{{{self.t}}}" if self.reached else f"Unknown{{{self.budget}}}"


def ep_semi_decide(agent: AgentSpec, env: EnvironmentSpec, s0: CoupledState, prop,
                   budget: int) -> EpOutcome:
    """Step the exact trajectory, answering only when ``prop`` first holds.

    Never returns a negative verdict: exhausting the budget yields Unknown.
    """
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    pid = getattr(prop, "name", getattr(prop, "__name__", "property"))
    cs = s0
    for k in range(budget + 1):
        if prop(cs.s_A, cs.s_E):
            return EpOutcome("reached", k, budget, pid, k)
        if k < budget:
            cs = coupled_step(agent, env, cs)
    return EpOutcome("unknown", None, budget, pid, budget)


@dataclass(frozen=True)
class Divergence:
    step: int
    expected: TapeConfiguration
    got: TapeConfiguration
    reason: str


@dataclass(frozen=True)
class EquivalenceReport:
    ok: bool
    machine: str
    budget: int
    steps_checked: int
    halted_at: int | None
    verdict: str | None
    coupled_steps: int
    divergence: Divergence | None = None

    def as_dict(self) -> dict:
        out = {
            "machine": self.machine, "ok": self.ok, "budget": self.budget,
            "steps_checked": self.steps_checked, "halted_at": self.halted_at,
            "verdict": self.verdict, "coupled_steps": self.coupled_steps,
        }
        if self.divergence is not None:
            d = self.divergence
            out["divergence"] = {"step": d.step, "reason": d.reason,
                                 "expected": d.expected.render(self._blank),
                                 "got": d.got.render(self._blank)}
        return out

    _blank: str = field(default="_", repr=False, compare=False)


def embedding_equivalence_check(tm: TuringMachine, word: Sequence[str], budget: int,
                                system: EmbeddedSystem | None = None) -> EquivalenceReport:
    """Step the embedded system and a direct run of ``tm`` side by side.

    At every step the decoded agent state, head position, symbol under the
    head and whole-tape fingerprint must agree; full decoded configurations
    are compared at step 0, at every power of two, and at the final step.
    The direct run is independent of the embedding: it works on the
    machine's own symbols and maintains its fingerprint incrementally.
    """
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    sys = build_embedded_machine(tm, word) if system is None else system
    emap = sys.map
    sid = emap.sym_id
    blank = tm.blank
    p_halt = halting_property(sys)

    tape = {i: s for i, s in enumerate(word) if s != blank}
    fp = 0
    for i, s in tape.items():
        fp = (fp + cell_hash(i, sid[s])) & M64
    state, head = tm.start, 0
    cs = sys.s0
    coupled = 0
    halted_at = verdict = None

    def direct_cfg(t):
        return TapeConfiguration.from_cells(tape, head, state, t, blank)

    def fail(t, reason):
        return EquivalenceReport(False, tm.name, budget, t, halted_at, verdict, coupled,
                                 Divergence(t, direct_cfg(t), emap.decode(cs), reason), blank)

    t = 0
    while True:
        s_e = cs.s_E
        if emap.phi_inv.get(cs.s_A) != state:
            return fail(t, "agent state")
        if s_e.head != head:
            return fail(t, "head position")
        if s_e.sym != sid[tape.get(head, blank)]:
            return fail(t, "symbol under head")
        if s_e.fingerprint != fp:
            return fail(t, "tape contents")
        if t & (t - 1) == 0 and emap.decode(cs) != direct_cfg(t):
            return fail(t, "full configuration")
        direct_halted = state in (tm.accept, tm.reject)
        if p_halt(cs.s_A, cs.s_E) != direct_halted:
            return fail(t, "halting property")
        if direct_halted:
            halted_at, verdict = t, ("accept" if state == tm.accept else "reject")
            break
        if t >= budget:
            break
        old = tape.get(head, blank)
        nxt, w, m = tm.transition(state, old)
        fp = (fp - cell_hash(head, sid[old]) + cell_hash(head, sid[w])) & M64
        if w == blank:
            tape.pop(head, None)
        else:
            tape[head] = w
        head += 1 if m == "R" else -1
        state = nxt
        cs = coupled_step(sys.agent, sys.env, cs)
        coupled += 1
        t += 1
    if emap.decode(cs) != direct_cfg(t):
        return fail(t, "full configuration")
    if coupled != t:
        return fail(t, "coupled step count differs from machine step count")
    return EquivalenceReport(True, tm.name, budget, t, halted_at, verdict, coupled, None, blank)
