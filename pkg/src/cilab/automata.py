"""Executable substrates: elementary cellular automata, Turing machines and DFAs.

Rows of an ECA are bit-packed into a Python ``int`` (cell ``i`` is bit ``i``)
so that one synchronous update of the whole ring is a handful of word-level
shift/and/or operations, independent of the cell count.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
import yaml

from .errors import InvalidInput, MalformedConfiguration, MalformedMachine

# ---------------------------------------------------------------------------
# Elementary cellular automata
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EcaRule:
    rule_index: int
    table: tuple[int, ...]

    def __post_init__(self):
        if len(self.table) != 8:
            raise InvalidInput("ECA table needs exactly 8 entries")
        for n, out in enumerate(self.table):
            if out != (self.rule_index >> n) & 1:
                raise InvalidInput(f"table[{n}] disagrees with rule {self.rule_index}")

    def __call__(self, left: int, centre: int, right: int) -> int:
        return self.table[4 * left + 2 * centre + right]


def eca_rule_table(rule_index: int) -> EcaRule:
    """Wolfram numbering: the output for neighbourhood ``lcr`` is bit ``4l+2c+r``."""
    if isinstance(rule_index, bool) or not isinstance(rule_index, (int, np.integer)):
        raise InvalidInput(f"rule index must be an integer, got {rule_index!r}")
    if not 0 <= rule_index <= 255:
        raise InvalidInput(f"rule index {rule_index} outside [0, 255]")
    rule_index = int(rule_index)
    return EcaRule(rule_index, tuple((rule_index >> n) & 1 for n in range(8)))


@dataclass(frozen=True)
class EcaRow:
    """A periodic row of ``width`` binary cells packed into ``bits``."""

    width: int
    bits: int

    def __post_init__(self):
        if self.width < 3:
            raise InvalidInput(f"ECA rows need width >= 3, got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise InvalidInput("bit pattern does not fit the row width")

    @classmethod
    def zeros(cls, width: int) -> "EcaRow":
        return cls(width, 0)

    @classmethod
    def from_string(cls, text: str) -> "EcaRow":
        """Character ``k`` of ``text`` becomes cell ``k``."""
        if set(text) - {"0", "1"}:
            raise InvalidInput(f"row strings are over {{0,1}}, got {text!r}")
        bits = 0
        for i, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << i
        return cls(len(text), bits)

    @classmethod
    def from_array(cls, cells: Sequence[int] | np.ndarray) -> "EcaRow":
        cells = np.asarray(cells, dtype=np.uint8)
        packed = np.packbits(cells, bitorder="little").tobytes()
        return cls(len(cells), int.from_bytes(packed, "little"))

    @classmethod
    def random(cls, width: int, rng: np.random.Generator) -> "EcaRow":
        return cls.from_array(rng.integers(0, 2, size=width, dtype=np.uint8))

    @classmethod
    def from_bytes(cls, payload: bytes, width: int) -> "EcaRow":
        return cls(width, int.from_bytes(payload, "little"))

    def __getitem__(self, i: int) -> int:
        return (self.bits >> (i % self.width)) & 1

    def __len__(self) -> int:
        return self.width

    def to_string(self) -> str:
        return "".join(str((self.bits >> i) & 1) for i in range(self.width))

    def to_array(self) -> np.ndarray:
        return np.array([(self.bits >> i) & 1 for i in range(self.width)], dtype=np.uint8)

    def to_bytes(self) -> bytes:
        return self.bits.to_bytes((self.width + 7) // 8, "little")

    def flip(self, i: int) -> "EcaRow":
        return EcaRow(self.width, self.bits ^ (1 << (i % self.width)))

    def xor(self, other: "EcaRow") -> "EcaRow":
        if other.width != self.width:
            raise InvalidInput("rows of different widths")
        return EcaRow(self.width, self.bits ^ other.bits)

    def rotate(self, k: int) -> "EcaRow":
        """Cell ``i`` of the result holds cell ``i - k`` of this row."""
        return EcaRow(self.width, _rotl(self.bits, k % self.width, self.width))

    def popcount(self) -> int:
        return bin(self.bits).count("1")

    def density(self) -> float:
        return self.popcount() / self.width

    def __str__(self) -> str:
        return self.to_string()


def _rotl(x: int, k: int, width: int) -> int:
    if k == 0:
        return x
    mask = (1 << width) - 1
    return ((x << k) | (x >> (width - k))) & mask


def _step_bits(x: int, table: tuple[int, ...], width: int) -> int:
    mask = (1 << width) - 1
    left = ((x << 1) | (x >> (width - 1))) & mask  # bit i holds cell i-1
    right = (x >> 1) | ((x & 1) << (width - 1))  # bit i holds cell i+1
    nl, nc, nr = left ^ mask, x ^ mask, right ^ mask
    out = 0
    for n in range(8):
        if table[n]:
            out |= (left if n & 4 else nl) & (x if n & 2 else nc) & (right if n & 1 else nr)
    return out


def eca_step(row: EcaRow, rule: EcaRule) -> EcaRow:
    return EcaRow(row.width, _step_bits(row.bits, rule.table, row.width))


def eca_evolve(row: EcaRow, rule: EcaRule, steps: int) -> EcaRow:
    bits, table, width = row.bits, rule.table, row.width
    for _ in range(steps):
        bits = _step_bits(bits, table, width)
    return EcaRow(width, bits)


def eca_orbit(row: EcaRow, rule: EcaRule, steps: int) -> Iterator[EcaRow]:
    """Yield ``row`` and its next ``steps`` images (``steps + 1`` rows)."""
    bits, table, width = row.bits, rule.table, row.width
    yield row
    for _ in range(steps):
        bits = _step_bits(bits, table, width)
        yield EcaRow(width, bits)


def linear_coefficients(rule: EcaRule) -> tuple[int, int, int] | None:
    """Return ``(a, b, c)`` if ``rule`` is ``a*l XOR b*c XOR c*r`` over GF(2), else None."""
    a, b, c = rule.table[4], rule.table[2], rule.table[1]
    for n in range(8):
        l, m, r = (n >> 2) & 1, (n >> 1) & 1, n & 1
        if rule.table[n] != (a & l) ^ (b & m) ^ (c & r):
            return None
    return a, b, c


# ---------------------------------------------------------------------------
# Turing machines
# ---------------------------------------------------------------------------

MOVES = ("L", "R")


@dataclass(frozen=True)
class TuringMachine:
    """Single-tape deterministic machine with distinguished accept/reject states.

    ``delta`` maps ``(state, read)`` to ``(next_state, write, move)``. Missing
    entries on non-halting states behave as a transition to ``reject`` that
    rewrites the read symbol and moves right.
    """

    states: tuple[str, ...]
    input_alphabet: tuple[str, ...]
    tape_alphabet: tuple[str, ...]
    blank: str
    start: str
    accept: str
    reject: str
    delta: Mapping[tuple[str, str], tuple[str, str, str]] = field(hash=False)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        errs = self.violations()
        if errs:
            raise MalformedMachine("; ".join(errs))

    def violations(self) -> list[str]:
        errs = []
        q = set(self.states)
        gamma = set(self.tape_alphabet)
        if len(q) != len(self.states):
            errs.append("duplicate state ids")
        if len(gamma) != len(self.tape_alphabet):
            errs.append("duplicate tape symbols")
        for label, s in (("start", self.start), ("accept", self.accept), ("reject", self.reject)):
            if s not in q:
                errs.append(f"{label} state {s!r} not in states")
        if self.accept == self.reject:
            errs.append("accept and reject states coincide")
        if self.blank not in gamma:
            errs.append("blank symbol missing from tape alphabet")
        if self.blank in self.input_alphabet:
            errs.append("blank symbol inside input alphabet")
        if not set(self.input_alphabet) <= gamma:
            errs.append("input alphabet not contained in tape alphabet")
        for (s, a), (nxt, w, mv) in self.delta.items():
            if s not in q or a not in gamma:
                errs.append(f"transition key {(s, a)!r} outside Q x Gamma")
            if s in (self.accept, self.reject):
                errs.append(f"transition defined on halting state {s!r}")
            if nxt not in q:
                errs.append(f"transition target {nxt!r} not in states")
            if w not in gamma:
                errs.append(f"written symbol {w!r} not in tape alphabet")
            if mv not in MOVES:
                errs.append(f"move {mv!r} not in {MOVES}")
        return errs

    @property
    def halting_states(self) -> tuple[str, str]:
        return (self.accept, self.reject)

    def transition(self, state: str, symbol: str) -> tuple[str, str, str]:
        entry = self.delta.get((state, symbol))
        if entry is None:
            return (self.reject, symbol, "R")
        return entry

    def with_delta(self, delta: Mapping, name: str | None = None) -> "TuringMachine":
        return TuringMachine(
            self.states, self.input_alphabet, self.tape_alphabet, self.blank,
            self.start, self.accept, self.reject, dict(delta),
            self.name if name is None else name,
        )


@dataclass(frozen=True)
class TapeConfiguration:
    """Sparse tape snapshot; ``tape`` holds sorted ``(cell, symbol)`` pairs, blanks omitted."""

    tape: tuple[tuple[int, str], ...]
    head: int
    state: str
    steps_elapsed: int = 0

    @classmethod
    def from_cells(cls, cells: Mapping[int, str], head: int, state: str,
                   steps_elapsed: int, blank: str) -> "TapeConfiguration":
        tape = tuple(sorted((i, s) for i, s in cells.items() if s != blank))
        return cls(tape, head, state, steps_elapsed)

    @property
    def cells(self) -> dict[int, str]:
        return dict(self.tape)

    def read(self, blank: str) -> str:
        return self.cells.get(self.head, blank)

    def render(self, blank: str) -> str:
        cells = self.cells
        lo = min([self.head, *cells]) if cells else self.head
        hi = max([self.head, *cells]) if cells else self.head
        parts = []
        for i in range(lo, hi + 1):
            sym = cells.get(i, blank)
            parts.append(f"[{sym}]" if i == self.head else sym)
        return f"{self.state}@{self.head} t={self.steps_elapsed} " + "".join(parts)


@dataclass(frozen=True)
class HaltSignal:
    verdict: str  # "accept" | "reject"


@dataclass(frozen=True)
class Halted:
    at_step: int
    verdict: str
    config: TapeConfiguration


@dataclass(frozen=True)
class OutOfBudget:
    budget: int
    final_cfg: TapeConfiguration


def initial_configuration(tm: TuringMachine, word: Sequence[str]) -> TapeConfiguration:
    _check_word(tm, word)
    cells = {i: s for i, s in enumerate(word)}
    return TapeConfiguration.from_cells(cells, 0, tm.start, 0, tm.blank)


def _check_word(tm: TuringMachine, word: Sequence[str]) -> None:
    bad = [s for s in word if s not in tm.input_alphabet]
    if bad:
        raise InvalidInput(f"input symbols {sorted(set(bad))!r} not in input alphabet")


def tm_step(tm: TuringMachine, cfg: TapeConfiguration) -> TapeConfiguration | HaltSignal:
    if cfg.state not in tm.states:
        raise MalformedConfiguration(f"state {cfg.state!r} not in machine")
    if cfg.state == tm.accept:
        return HaltSignal("accept")
    if cfg.state == tm.reject:
        return HaltSignal("reject")
    cells = cfg.cells
    sym = cells.get(cfg.head, tm.blank)
    if sym not in tm.tape_alphabet:
        raise MalformedConfiguration(f"cell {cfg.head} holds {sym!r}, not in tape alphabet")
    nxt, write, move = tm.transition(cfg.state, sym)
    cells[cfg.head] = write
    head = cfg.head + (1 if move == "R" else -1)
    return TapeConfiguration.from_cells(cells, head, nxt, cfg.steps_elapsed + 1, tm.blank)


def tm_run_bounded(tm: TuringMachine, word: Sequence[str], budget: int) -> Halted | OutOfBudget:
    """Run at most ``budget`` transitions from the standard start configuration.

    Same semantics as iterating :func:`tm_step`, on a mutable tape for speed.
    """
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    _check_word(tm, word)
    tape = {i: s for i, s in enumerate(word)}
    blank, accept, reject = tm.blank, tm.accept, tm.reject
    gamma = set(tm.tape_alphabet)
    state, head, t = tm.start, 0, 0
    delta = tm.delta
    while True:
        if state == accept or state == reject:
            cfg = TapeConfiguration.from_cells(tape, head, state, t, blank)
            return Halted(t, "accept" if state == accept else "reject", cfg)
        if t >= budget:
            return OutOfBudget(budget, TapeConfiguration.from_cells(tape, head, state, t, blank))
        sym = tape.get(head, blank)
        if sym not in gamma:
            raise MalformedConfiguration(f"cell {head} holds {sym!r}")
        entry = delta.get((state, sym))
        if entry is None:
            state, write, move = reject, sym, "R"
        else:
            state, write, move = entry
        if write == blank:
            tape.pop(head, None)
        else:
            tape[head] = write
        head += 1 if move == "R" else -1
        t += 1


# ---------------------------------------------------------------------------
# Canonical <M, w> encoding: b"TMW1" then LEB128-varint sections
# ---------------------------------------------------------------------------

MAGIC = b"TMW1"


def _varint(n: int) -> bytes:
    if n < 0:
        raise InvalidInput("varints encode non-negative integers")
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def varint(self) -> int:
        shift = value = 0
        while True:
            if self.pos >= len(self.data):
                raise InvalidInput("truncated encoding")
            b = self.data[self.pos]
            self.pos += 1
            value |= (b & 0x7F) << shift
            if not b & 0x80:
                return value
            shift += 7

    def text(self) -> str:
        n = self.varint()
        chunk = self.data[self.pos:self.pos + n]
        if len(chunk) != n:
            raise InvalidInput("truncated encoding")
        self.pos += n
        return chunk.decode("utf-8")


def _text(s: str) -> bytes:
    raw = s.encode("utf-8")
    return _varint(len(raw)) + raw


def encode_tm_with_input(tm: TuringMachine, word: Sequence[str]) -> bytes:
    _check_word(tm, word)
    sid = {s: i for i, s in enumerate(tm.states)}
    gid = {s: i for i, s in enumerate(tm.tape_alphabet)}
    out = bytearray(MAGIC)
    out += _varint(len(tm.states))
    for s in tm.states:
        out += _text(s)
    out += _varint(sid[tm.start]) + _varint(sid[tm.accept]) + _varint(sid[tm.reject])
    out += _varint(len(tm.tape_alphabet))
    for s in tm.tape_alphabet:
        out += _text(s)
    out += _varint(gid[tm.blank])
    out += _varint(len(tm.input_alphabet))
    for s in tm.input_alphabet:
        out += _varint(gid[s])
    rows = sorted(
        (sid[q], gid[a], sid[n], gid[w], MOVES.index(m))
        for (q, a), (n, w, m) in tm.delta.items()
    )
    out += _varint(len(rows))
    for row in rows:
        for v in row:
            out += _varint(v)
    out += _varint(len(word))
    for s in word:
        out += _varint(gid[s])
    return bytes(out)


def decode_tm_with_input(data: bytes) -> tuple[TuringMachine, tuple[str, ...]]:
    if data[:4] != MAGIC:
        raise InvalidInput("missing TMW1 magic")
    r = _Reader(data)
    r.pos = 4
    states = tuple(r.text() for _ in range(r.varint()))
    start, accept, reject = (states[r.varint()] for _ in range(3))
    gamma = tuple(r.text() for _ in range(r.varint()))
    blank = gamma[r.varint()]
    sigma = tuple(gamma[r.varint()] for _ in range(r.varint()))
    delta = {}
    for _ in range(r.varint()):
        q, a, n, w, m = (r.varint() for _ in range(5))
        delta[(states[q], gamma[a])] = (states[n], gamma[w], MOVES[m])
    word = tuple(gamma[r.varint()] for _ in range(r.varint()))
    if r.pos != len(data):
        raise InvalidInput(f"{len(data) - r.pos} trailing bytes after encoding")
    tm = TuringMachine(states, sigma, gamma, blank, start, accept, reject, delta)
    return tm, word


# ---------------------------------------------------------------------------
# TM spec files (YAML)
# ---------------------------------------------------------------------------


def tm_from_dict(doc: Mapping) -> TuringMachine:
    required = ("states", "input_alphabet", "tape_alphabet", "blank", "start", "accept", "reject", "delta")
    missing = [k for k in required if k not in doc]
    if missing:
        raise MalformedMachine(f"missing fields: {', '.join(missing)}")
    delta = {}
    for row in doc["delta"] or []:
        if len(row) != 5:
            raise MalformedMachine(f"delta rows are [state, read, next, write, move], got {row!r}")
        q, a, n, w, m = (str(x) for x in row)
        if (q, a) in delta:
            raise MalformedMachine(f"duplicate transition for {(q, a)!r}")
        delta[(q, a)] = (n, w, m)
    return TuringMachine(
        states=tuple(str(s) for s in doc["states"]),
        input_alphabet=tuple(str(s) for s in doc["input_alphabet"]),
        tape_alphabet=tuple(str(s) for s in doc["tape_alphabet"]),
        blank=str(doc["blank"]),
        start=str(doc["start"]),
        accept=str(doc["accept"]),
        reject=str(doc["reject"]),
        delta=delta,
        name=str(doc.get("name", "")),
    )


def tm_to_dict(tm: TuringMachine, word: Sequence[str] | None = None) -> dict:
    doc = {
        "name": tm.name,
        "states": list(tm.states),
        "input_alphabet": list(tm.input_alphabet),
        "tape_alphabet": list(tm.tape_alphabet),
        "blank": tm.blank,
        "start": tm.start,
        "accept": tm.accept,
        "reject": tm.reject,
        "delta": [[q, a, *tm.delta[(q, a)]] for (q, a) in sorted(tm.delta)],
    }
    if word is not None:
        doc["input"] = list(word)
    return doc


def load_tm_spec(path: str | Path) -> tuple[TuringMachine, tuple[str, ...]]:
    """Load a machine and its (optional, default empty) ``input`` word."""
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, Mapping):
        raise MalformedMachine(f"{path}: expected a mapping at top level")
    tm = tm_from_dict(doc)
    if not tm.name:
        tm = tm.with_delta(tm.delta, name=Path(path).stem)
    word = tuple(str(s) for s in doc.get("input") or ())
    _check_word(tm, word)
    return tm, word


def dump_tm_spec(tm: TuringMachine, path: str | Path, word: Sequence[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(tm_to_dict(tm, word), fh, sort_keys=False, default_flow_style=None)


# ---------------------------------------------------------------------------
# Deterministic finite automata
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dfa:
    states: tuple
    alphabet: tuple
    delta: Mapping = field(hash=False)
    start: object = None
    accepting: frozenset = frozenset()

    def __post_init__(self):
        q = set(self.states)
        if self.start not in q:
            raise MalformedMachine(f"start state {self.start!r} not in Q")
        if not set(self.accepting) <= q:
            raise MalformedMachine("accepting states outside Q")
        for s in self.states:
            for a in self.alphabet:
                nxt = self.delta.get((s, a), _MISSING)
                if nxt is _MISSING:
                    raise MalformedMachine(f"delta undefined on {(s, a)!r}")
                if nxt not in q:
                    raise MalformedMachine(f"delta{(s, a)!r} = {nxt!r} not in Q")

    def run(self, word: Sequence, state=None):
        q = self.start if state is None else state
        for a in word:
            q = self.delta[(q, a)]
        return q


_MISSING = object()


def _reach_set(dfa: Dfa, source) -> set:
    seen = {source}
    frontier = deque([source])
    while frontier:
        q = frontier.popleft()
        for a in dfa.alphabet:
            nxt = dfa.delta[(q, a)]
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def dfa_reachable(dfa: Dfa, q1, q2) -> bool:
    """True iff some word (possibly empty) drives ``q1`` to ``q2``.

    Breadth-first search; each state is expanded at most once, so the work is
    O(|Q| * |Sigma|) edge scans and the call always terminates.
    """
    for q in (q1, q2):
        if q not in dfa.states:
            raise InvalidInput(f"unknown state {q!r}")
    if q1 == q2:
        return True
    return q2 in _reach_set(dfa, q1)


def dfa_language_empty(dfa: Dfa) -> bool:
    if not dfa.accepting:
        return True
    return not (_reach_set(dfa, dfa.start) & set(dfa.accepting))


def random_dfa(n_states: int, n_symbols: int, rng: np.random.Generator,
               accept_prob: float = 0.1) -> Dfa:
    states = tuple(range(n_states))
    alphabet = tuple(range(n_symbols))
    targets = rng.integers(0, n_states, size=(n_states, n_symbols))
    delta = {(q, a): int(targets[q, a]) for q in states for a in alphabet}
    accepting = frozenset(int(q) for q in np.flatnonzero(rng.random(n_states) < accept_prob))
    return Dfa(states, alphabet, delta, int(rng.integers(0, n_states)), accepting)
