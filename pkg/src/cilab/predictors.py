"""Resource-bounded prediction of ECA rings and the efficiency measure built on it.

Resources are counted in transition evaluations: updating one cell from its
three-cell window costs 1, so a full row update of a width-``W`` ring costs
``W``. Every predictor charges a :class:`Meter` that refuses to exceed the
declared budget.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agent import state_hash
from .automata import EcaRow, _rotl, _step_bits, eca_rule_table, linear_coefficients
from .errors import InvalidInput, PredictorInapplicable

KINDS = ("frozen", "chance-baseline", "truncated-simulator", "coarse-simulator",
         "additive-shortcut", "exact-simulator")

UNDEFINED = "NA"  # CSV marker for eta with r = 0


def state_distance(a: bytes, b: bytes) -> float:
    """Normalised Hamming distance between bit strings.

    The shorter input is padded with sentinel bits that always count as
    mismatches, so states of different lengths are never at distance 0.
    """
    n = max(len(a), len(b))
    if n == 0:
        return 0.0
    common = min(len(a), len(b))
    diff = int.from_bytes(a[:common], "little") ^ int.from_bytes(b[:common], "little")
    mismatches = bin(diff).count("1") + 8 * (n - common)
    return mismatches / (8 * n)


def row_distance(a: EcaRow, b: EcaRow) -> float:
    """Hamming distance normalised by the ring width (not the padded byte length)."""
    if a.width != b.width:
        return state_distance(a.to_bytes(), b.to_bytes())
    return bin(a.bits ^ b.bits).count("1") / a.width


@dataclass(frozen=True)
class EcaSystem:
    rule_index: int
    width: int

    def __post_init__(self):
        eca_rule_table(self.rule_index)
        if self.width < 3:
            raise InvalidInput("width must be >= 3")

    @property
    def rule(self):
        return eca_rule_table(self.rule_index)

    @property
    def id(self) -> str:
        return f"rule{self.rule_index}-w{self.width}"


@dataclass(frozen=True)
class PredictorSpec:
    kind: str
    budget: int
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown predictor kind {self.kind!r}")
        if self.budget < 0:
            raise InvalidInput("resource budget must be >= 0")

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    @property
    def id(self) -> str:
        extra = "".join(f",{k}={v}" for k, v in self.params)
        return f"{self.kind}[r={self.budget}{extra}]"


class ResourceExceeded(PredictorInapplicable):
    pass


class Meter:
    def __init__(self, budget: int):
        self.budget = budget
        self.spent = 0

    def charge(self, n: int) -> None:
        if self.spent + n > self.budget:
            raise ResourceExceeded(f"charging {n} would exceed budget {self.budget} (spent {self.spent})")
        self.spent += n


@dataclass(frozen=True)
class Prediction:
    state: EcaRow
    resources_spent: int


def _simulate(bits: int, table, width: int, steps: int, meter: Meter) -> int:
    for _ in range(steps):
        meter.charge(width)
        bits = _step_bits(bits, table, width)
    return bits


def _coarsen(row: EcaRow, factor: int) -> EcaRow:
    cells = row.to_array()
    wc = row.width // factor
    blocks = cells[: wc * factor].reshape(wc, factor)
    counts = blocks.sum(axis=1)
    majority = np.where(2 * counts == factor, blocks[:, 0], (2 * counts > factor).astype(np.uint8))
    return EcaRow.from_array(majority)


def _refine(row: EcaRow, factor: int, width: int) -> EcaRow:
    cells = np.repeat(row.to_array(), factor)
    if len(cells) < width:
        cells = np.concatenate([cells, np.full(width - len(cells), cells[-1], dtype=np.uint8)])
    return EcaRow.from_array(cells[:width])


def shortcut_steps(t: int) -> int:
    """Row-sized operations the additive shortcut performs for horizon ``t``."""
    return bin(t).count("1")


def predict(pred: PredictorSpec, system: EcaSystem, s0: EcaRow, t: int, seed: int = 0) -> Prediction:
    if t < 0:
        raise InvalidInput("horizon must be >= 0")
    if s0.width != system.width:
        raise InvalidInput("initial row width does not match the system")
    width, table = system.width, system.rule.table
    meter = Meter(pred.budget)
    kind = pred.kind

    if kind == "frozen":
        return Prediction(s0, 0)

    if kind == "chance-baseline":
        rng = np.random.default_rng([seed, t])
        return Prediction(EcaRow.random(width, rng), 0)

    if kind == "truncated-simulator":
        steps = min(pred.budget // width, t)
        return Prediction(EcaRow(width, _simulate(s0.bits, table, width, steps, meter)), meter.spent)

    if kind == "coarse-simulator":
        factor = int(pred.param("factor", 2))
        wc = width // factor
        if factor < 1 or wc < 3:
            raise PredictorInapplicable(f"coarse factor {factor} leaves fewer than 3 cells")
        coarse = _coarsen(s0, factor)
        steps = min(pred.budget // wc, t)
        bits = _simulate(coarse.bits, table, wc, steps, meter)
        return Prediction(_refine(EcaRow(wc, bits), factor, width), meter.spent)

    if kind == "additive-shortcut":
        coeffs = linear_coefficients(system.rule)
        if coeffs is None:
            raise PredictorInapplicable(f"rule {system.rule_index} is not XOR-linear")
        need = width * shortcut_steps(t)
        if need > pred.budget:
            raise PredictorInapplicable(f"shortcut needs {need} evaluations, budget is {pred.budget}")
        a, b, c = coeffs
        bits = s0.bits
        k = 0
        while (1 << k) <= t:
            if t >> k & 1:
                # (a L + b C + c R)^(2^k) = a L^(2^k) + b C + c R^(2^k) over GF(2)
                meter.charge(width)
                shift = (1 << k) % width
                nxt = 0
                if a:
                    nxt ^= _rotl(bits, shift, width)
                if b:
                    nxt ^= bits
                if c:
                    nxt ^= _rotl(bits, (width - shift) % width, width)
                bits = nxt
            k += 1
        return Prediction(EcaRow(width, bits), meter.spent)

    if kind == "exact-simulator":
        if pred.budget < t * width:
            raise PredictorInapplicable(
                f"exact simulation of {t} steps needs {t * width} evaluations, budget is {pred.budget}")
        return Prediction(EcaRow(width, _simulate(s0.bits, table, width, t, meter)), meter.spent)

    raise InvalidInput(kind)


@dataclass(frozen=True)
class PredictionReport:
    predictor_id: str
    system_id: str
    s0_hash: str
    t: int
    budget: int
    resources_spent: int
    distance: float
    accuracy: float
    eta_distance: float | None
    eta_accuracy: float | None
    seed: int = 0


def prediction_efficiency(predictor_id: str, system_id: str, s0: EcaRow, t: int, budget: int,
                          predicted: EcaRow, actual: EcaRow, resources_spent: int,
                          seed: int = 0) -> PredictionReport:
    """Efficiency per unit budget: distance ``D / r`` and accuracy ``(1 - D) / r``.

    ``r = 0`` gives ``None`` for both (undefined, never infinity).
    """
    if resources_spent > budget:
        raise InvalidInput("resources_spent exceeds the declared budget")
    d = row_distance(predicted, actual)
    acc = 1.0 - d
    if budget == 0:
        eta_p = eta_a = None
    else:
        eta_p, eta_a = d / budget, acc / budget
    return PredictionReport(predictor_id, system_id, state_hash(s0.to_bytes()), t, budget,
                            resources_spent, d, acc, eta_p, eta_a, seed)


@dataclass(frozen=True)
class CurvePoint:
    t: int
    mean_accuracy: float
    std_accuracy: float
    mean_eta_distance: float | None
    mean_eta_accuracy: float | None
    n: int


@dataclass(frozen=True)
class EfficiencyCurve:
    system_id: str
    predictor_id: str
    points: tuple[CurvePoint, ...]
    inapplicable: tuple[int, ...] = ()

    def accuracy_at(self, t: int) -> float:
        for p in self.points:
            if p.t == t:
                return p.mean_accuracy
        raise KeyError(t)


def initial_rows(width: int, seeds: int, master_seed: int) -> list[EcaRow]:
    return [EcaRow.random(width, np.random.default_rng([master_seed, width, k])) for k in range(seeds)]


def efficiency_sweep(systems: Sequence[EcaSystem], predictors: Sequence[PredictorSpec],
                     horizons: Sequence[int], seeds: int, master_seed: int
                     ) -> tuple[list[EfficiencyCurve], list[PredictionReport]]:
    """Tabulate accuracy and efficiency per horizon, averaged over seeded initial rows.

    Inadmissible (predictor, horizon) cells are listed on the curve rather
    than silently dropped.
    """
    horizons = list(horizons)
    if not horizons or horizons != sorted(set(horizons)):
        raise InvalidInput("horizons must be non-empty and strictly increasing")
    if seeds < 1:
        raise InvalidInput("need at least one seed")
    curves, reports = [], []
    for system in systems:
        rows = initial_rows(system.width, seeds, master_seed)
        truth = []
        for s0 in rows:
            at = {}
            bits, prev = s0.bits, 0
            for t in horizons:
                for _ in range(t - prev):
                    bits = _step_bits(bits, system.rule.table, system.width)
                prev = t
                at[t] = EcaRow(system.width, bits)
            truth.append(at)
        for pred in predictors:
            points, skipped = [], []
            for t in horizons:
                cell = []
                try:
                    for k, s0 in enumerate(rows):
                        seed = _cell_seed(master_seed, k)
                        p = predict(pred, system, s0, t, seed=seed)
                        cell.append(prediction_efficiency(pred.id, system.id, s0, t, pred.budget,
                                                          p.state, truth[k][t], p.resources_spent, seed))
                except PredictorInapplicable:
                    skipped.append(t)
                    continue
                reports.extend(cell)
                points.append(_aggregate(t, cell))
            curves.append(EfficiencyCurve(system.id, pred.id, tuple(points), tuple(skipped)))
    return curves, reports


def _cell_seed(master_seed: int, k: int) -> int:
    return int(np.random.SeedSequence([master_seed, k]).generate_state(1)[0])


def _aggregate(t: int, cell: list[PredictionReport]) -> CurvePoint:
    acc = np.array([r.accuracy for r in cell])
    ep = [r.eta_distance for r in cell]
    ea = [r.eta_accuracy for r in cell]
    mean_ep = None if any(v is None for v in ep) else float(np.mean(ep))
    mean_ea = None if any(v is None for v in ea) else float(np.mean(ea))
    return CurvePoint(t, float(acc.mean()), float(acc.std(ddof=0)), mean_ep, mean_ea, len(cell))


def _fmt(x) -> str:
    if x is None:
        return UNDEFINED
    if isinstance(x, float):
        return repr(round(x, 12))
    return str(x)


def write_sweep_csv(reports: Iterable[PredictionReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["system", "predictor", "r", "t", "seed", "resources_spent", "distance",
                    "accuracy", "eta_distance", "eta_accuracy"])
        for r in reports:
            w.writerow([r.system_id, r.predictor_id, r.budget, r.t, r.seed, r.resources_spent,
                        _fmt(r.distance), _fmt(r.accuracy), _fmt(r.eta_distance), _fmt(r.eta_accuracy)])


def write_curves_csv(curves: Iterable[EfficiencyCurve], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["system", "predictor", "t", "n", "mean_accuracy", "std_accuracy",
                    "mean_eta_distance", "mean_eta_accuracy"])
        for c in curves:
            for p in c.points:
                w.writerow([c.system_id, c.predictor_id, p.t, p.n, _fmt(p.mean_accuracy),
                            _fmt(p.std_accuracy), _fmt(p.mean_eta_distance), _fmt(p.mean_eta_accuracy)])


def chance_band(half_width: float = 0.1) -> tuple[float, float]:
    return (0.5 - half_width, 0.5 + half_width)


def is_sublinear(spent: Sequence[int], horizons: Sequence[int], width: int) -> bool:
    """Shortcut cost check: spent(t) <= width * (floor(log2 t) + 1) for every t."""
    return all(s <= width * (math.floor(math.log2(t)) + 1) for s, t in zip(spent, horizons) if t >= 1)
