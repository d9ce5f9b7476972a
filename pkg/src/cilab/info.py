"""Plug-in information measures over coupled traces and compression-based growth curves."""

from __future__ import annotations

import csv
import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .agent import CoupledTrace
from .automata import EcaRow
from .compression import DEFAULT_COMPRESSOR, Compressor, compress_bound, get_compressor
from .errors import InvalidInput

# Floor on the reference slope in irreducibility_score, bits per step.
SLOPE_FLOOR = 1e-3


def _entropy_from_counts(counts: Iterable[int], n: int) -> float:
    h = 0.0
    for c in counts:
        p = c / n
        h -= p * math.log2(p)
    return max(h, 0.0)


def empirical_entropy(symbols: Sequence[Hashable]) -> float:
    """Plug-in Shannon entropy in bits."""
    n = len(symbols)
    if n == 0:
        raise InvalidInput("entropy of an empty sequence is undefined")
    return _entropy_from_counts(Counter(symbols).values(), n)


def conditional_entropy(targets: Sequence[Hashable], given: Sequence[Hashable]) -> float:
    """H(target | given) = H(target, given) - H(given), plug-in."""
    if len(targets) != len(given):
        raise InvalidInput("sequences differ in length")
    joint = empirical_entropy(list(zip(targets, given)))
    return max(joint - empirical_entropy(list(given)), 0.0)


def mutual_information(xs: Sequence[Hashable], ys: Sequence[Hashable]) -> float:
    if len(xs) != len(ys):
        raise InvalidInput("sequences differ in length")
    mi = empirical_entropy(list(xs)) + empirical_entropy(list(ys)) - empirical_entropy(list(zip(xs, ys)))
    return max(mi, 0.0)


@dataclass(frozen=True)
class CoarseGrainer:
    """Deterministic map from canonical state bytes to a small symbol.

    ``hash-k`` keeps ``k`` bits of a BLAKE2b digest; ``window`` keeps bits
    ``[start, stop)`` of the little-endian bit string.
    """

    kind: str = "identity"
    k: int = 8
    window: tuple[int, int] = (0, 8)

    def __post_init__(self):
        if self.kind not in ("identity", "hash", "window"):
            raise InvalidInput(f"unknown grain kind {self.kind!r}")
        if self.kind == "hash" and not 1 <= self.k <= 64:
            raise InvalidInput("hash grain keeps between 1 and 64 bits")
        if self.kind == "window" and not 0 <= self.window[0] < self.window[1]:
            raise InvalidInput("window must satisfy 0 <= start < stop")

    @property
    def id(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "hash":
            return f"hash-{self.k}"
        return f"window-{self.window[0]}-{self.window[1]}"

    def __call__(self, payload: bytes) -> Hashable:
        if self.kind == "identity":
            return payload
        if self.kind == "hash":
            digest = hashlib.blake2b(payload, digest_size=8).digest()
            return int.from_bytes(digest, "little") & ((1 << self.k) - 1)
        start, stop = self.window
        return (int.from_bytes(payload, "little") >> start) & ((1 << (stop - start)) - 1)

    @classmethod
    def parse(cls, spec: str) -> "CoarseGrainer":
        if spec == "identity":
            return cls()
        if spec.startswith("hash-"):
            return cls("hash", k=int(spec[5:]))
        if spec.startswith("window-"):
            a, b = spec[7:].split("-")
            return cls("window", window=(int(a), int(b)))
        raise InvalidInput(f"cannot parse grain {spec!r}")


IDENTITY = CoarseGrainer()


def _grained(trace: CoupledTrace, grain: CoarseGrainer):
    if len(trace) < 2:
        raise InvalidInput("trace needs at least two records")
    a = [grain(trace.agent.serialize(r.s_A)) for r in trace.records]
    e = [grain(trace.env.serialize(r.s_E)) for r in trace.records]
    return a, e


def environment_conditional_entropy(trace: CoupledTrace, grain: CoarseGrainer = IDENTITY) -> float:
    """Plug-in H(grain(s_E(t+1)) | grain(s_E(t)), o_A(t)) over the trace's transitions."""
    _, e = _grained(trace, grain)
    actions = trace.actions()
    context = list(zip(e[:-1], actions[:-1]))
    return conditional_entropy(e[1:], context)


@dataclass(frozen=True)
class MiReport:
    I_agent_to_env: float
    I_env_to_agent: float
    samples: int
    grain_id: str

    @property
    def autonomy_index(self) -> float:
        return self.I_agent_to_env - self.I_env_to_agent


def autonomy_index(trace: CoupledTrace, grain: CoarseGrainer = IDENTITY) -> MiReport:
    """Lagged plug-in estimates of I(S_A(t); S_E(t+1)) and I(S_E(t); S_A(t+1))."""
    a, e = _grained(trace, grain)
    return MiReport(
        I_agent_to_env=mutual_information(a[:-1], e[1:]),
        I_env_to_agent=mutual_information(e[:-1], a[1:]),
        samples=len(a) - 1,
        grain_id=grain.id,
    )


@dataclass(frozen=True)
class BitFlipNoise:
    """Seeded noise hook: XOR one fair pseudo-random bit into ``cell`` each step."""

    seed: int
    cell: int = 0

    def bit(self, t: int) -> int:
        h = hashlib.blake2b(f"{self.seed}:{t}".encode(), digest_size=1).digest()
        return h[0] & 1

    def __call__(self, t: int, s_e):
        if not self.bit(t):
            return s_e
        if isinstance(s_e, EcaRow):
            return s_e.flip(self.cell)
        if isinstance(s_e, int):
            return s_e ^ (1 << self.cell)
        raise InvalidInput(f"cannot inject noise into {type(s_e).__name__}")


# ---------------------------------------------------------------------------
# Compression curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexityCurve:
    points: tuple[tuple[int, int], ...]  # (t, khat bits)
    slope: float
    intercept: float
    residual: float  # RMS of the least-squares fit, bits
    compressor_id: str
    label: str = ""


def fit_slope(ts: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    if len(ts) < 2:
        return 0.0, float(ys[0]) if ys else 0.0, 0.0
    x = np.asarray(ts, dtype=float)
    y = np.asarray(ys, dtype=float)
    (slope, intercept), *_ = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))


def complexity_curve(trace: CoupledTrace, prefix_steps: Sequence[int],
                     compressor: str | Compressor = DEFAULT_COMPRESSOR, label: str = "") -> ComplexityCurve:
    """K-hat(X_t | s_0) = C(s_0 + X_t) - C(s_0) at each prefix length, with a linear fit.

    ``X_t`` is the serialized trajectory ``s_0 ... s_t``.
    """
    steps = list(prefix_steps)
    if not steps or steps != sorted(set(steps)):
        raise InvalidInput("prefix_steps must be non-empty and strictly increasing")
    if steps[0] < 0 or steps[-1] > len(trace) - 1:
        raise InvalidInput(f"prefix steps must lie within [0, {len(trace) - 1}]")
    coder = get_compressor(compressor)
    s0 = trace.state_bytes(0)
    base = compress_bound(s0, coder)
    chunks = [trace.state_bytes(k) for k in range(steps[-1] + 1)]
    points = []
    for t in steps:
        payload = s0 + b"".join(chunks[: t + 1])
        points.append((t, compress_bound(payload, coder) - base))
    slope, intercept, resid = fit_slope([p[0] for p in points], [p[1] for p in points])
    return ComplexityCurve(tuple(points), slope, intercept, resid, coder.id, label)


def irreducibility_score(curve: ComplexityCurve, reference: ComplexityCurve,
                         floor: float = SLOPE_FLOOR) -> float:
    if curve.compressor_id != reference.compressor_id:
        raise InvalidInput("curves were measured with different compressors")
    return curve.slope / max(reference.slope, floor)


def write_complexity_csv(curves: Mapping[str, ComplexityCurve], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["system", "t", "khat_bits", "slope", "compressor"])
        for name, c in curves.items():
            for t, k in c.points:
                w.writerow([name, t, k, repr(round(c.slope, 9)), c.compressor_id])
