"""Machine enumeration and the bundled corpus.

Enumerated machines use states ``A, B, C, ...``, the accept state ``H``, the
reject state ``R``, tape symbols ``0`` (blank) ``1`` ... and run on a blank
tape. Each ``(state, symbol)`` entry takes one of ``2 * n_symbols *
(n_states + 1)`` values (write, move, next state including ``H``), so there
are 12**4 = 20736 machines with 2 states and 2 symbols.

:func:`behaviour_classes` partitions that space exactly: it extends partial
transition tables only at the entries a run actually reads, so every full
machine agrees, for the whole budget, with exactly one partial machine of the
partition. ``cylinder`` counts the full machines each class stands for.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator

from .automata import MOVES, TuringMachine, load_tm_spec
from .errors import InvalidInput

ACCEPT = "H"
REJECT = "R"


def state_names(n_states: int) -> tuple[str, ...]:
    if not 1 <= n_states <= 7:
        raise InvalidInput("enumeration supports 1..7 states")
    return tuple("ABCDEFG"[:n_states])


def _frame(n_states: int, n_symbols: int):
    names = state_names(n_states)
    symbols = tuple(str(k) for k in range(n_symbols))
    options = [(nxt, w, m) for nxt in (*names, ACCEPT) for w in symbols for m in MOVES]
    keys = [(q, a) for q in names for a in symbols]
    return names, symbols, options, keys


def machine_from_table(delta: dict, n_states: int = 2, n_symbols: int = 2) -> TuringMachine:
    names, symbols, _, keys = _frame(n_states, n_symbols)
    return TuringMachine(
        states=(*names, ACCEPT, REJECT),
        input_alphabet=symbols[1:],
        tape_alphabet=symbols,
        blank=symbols[0],
        start=names[0],
        accept=ACCEPT,
        reject=REJECT,
        delta=dict(delta),
        name=machine_code(delta, n_states, n_symbols),
    )


def machine_code(delta: dict, n_states: int = 2, n_symbols: int = 2) -> str:
    """Compact ``1RB1LB_1LA1RH`` notation; ``---`` marks an undefined entry."""
    names, symbols, _, _ = _frame(n_states, n_symbols)
    groups = []
    for q in names:
        parts = []
        for a in symbols:
            entry = delta.get((q, a))
            parts.append("---" if entry is None else f"{entry[1]}{entry[2]}{entry[0]}")
        groups.append("".join(parts))
    return "_".join(groups)


def machine_from_code(code: str) -> TuringMachine:
    groups = code.split("_")
    n_states = len(groups)
    if len(groups[0]) % 3:
        raise InvalidInput(f"bad machine code {code!r}")
    n_symbols = len(groups[0]) // 3
    names, symbols, _, _ = _frame(n_states, n_symbols)
    delta = {}
    for q, group in zip(names, groups):
        for k, a in enumerate(symbols):
            chunk = group[3 * k:3 * k + 3]
            if chunk != "---":
                w, m, nxt = chunk[0], chunk[1], chunk[2]
                delta[(q, a)] = (nxt, w, m)
    return machine_from_table(delta, n_states, n_symbols)


def enumerate_machines(n_states: int = 2, n_symbols: int = 2) -> Iterator[TuringMachine]:
    """Every fully specified machine, in lexicographic order of option indices."""
    _, _, options, keys = _frame(n_states, n_symbols)
    for choice in itertools.product(options, repeat=len(keys)):
        yield machine_from_table(dict(zip(keys, choice)), n_states, n_symbols)


def enumeration_size(n_states: int = 2, n_symbols: int = 2) -> int:
    _, _, options, keys = _frame(n_states, n_symbols)
    return len(options) ** len(keys)


@dataclass(frozen=True)
class BehaviourClass:
    machine: TuringMachine
    cylinder: int  # number of full machines sharing this run up to the budget

    @property
    def code(self) -> str:
        return self.machine.name


def behaviour_classes(budget: int, n_states: int = 2, n_symbols: int = 2) -> list[BehaviourClass]:
    names, symbols, options, keys = _frame(n_states, n_symbols)
    blank = symbols[0]
    out: list[BehaviourClass] = []
    # each frame: (partial delta, tape, head, state, steps)
    stack = [({}, {}, 0, names[0], 0)]
    while stack:
        delta, tape, head, state, t = stack.pop()
        tape = dict(tape)
        while state != ACCEPT and t < budget:
            sym = tape.get(head, blank)
            entry = delta.get((state, sym))
            if entry is None:
                break
            state, w, m = entry
            if w == blank:
                tape.pop(head, None)
            else:
                tape[head] = w
            head += 1 if m == "R" else -1
            t += 1
        if state != ACCEPT and t < budget:
            key = (state, tape.get(head, blank))
            for opt in reversed(options):
                stack.append(({**delta, key: opt}, tape, head, state, t))
            continue
        undefined = len(keys) - len(delta)
        out.append(BehaviourClass(machine_from_table(delta, n_states, n_symbols),
                                  len(options) ** undefined))
    out.sort(key=lambda c: c.code)
    return out


def completions(cls: BehaviourClass, n_states: int = 2, n_symbols: int = 2) -> Iterator[TuringMachine]:
    """The full machines represented by ``cls``."""
    _, _, options, keys = _frame(n_states, n_symbols)
    free = [k for k in keys if k not in cls.machine.delta]
    for choice in itertools.product(options, repeat=len(free)):
        yield machine_from_table({**cls.machine.delta, **dict(zip(free, choice))}, n_states, n_symbols)


def corpus_dir() -> Path:
    return Path(str(resources.files("cilab") / "corpus"))


def load_corpus(path: str | Path | None = None) -> list[tuple[TuringMachine, tuple[str, ...]]]:
    root = corpus_dir() if path is None else Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    return [load_tm_spec(p) for p in sorted(root.glob("*.yaml"))]
