"""Seeded experiment runner: config parsing, run manifests and the bundled experiments.

Config files are YAML::

    experiment: predict-sweep
    seed: 1234            # or pass --seed on the command line
    params:
      rules: [90, 110]
      horizons: [64, 256, 1024]

Every emitted byte is a function of (config, seed); the manifest alone carries
wall-clock timestamps.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__
from .agent import (
    CoupledState,
    check_autonomy_conditions,
    copy_environment,
    counter_agent,
    cycle_environment,
    eca_environment,
    identity_agent,
    lfsr_agent,
    reactive_agent,
    replay_witness,
    run_coupled,
    static_environment,
    table_agent,
    write_trace,
)
from .automata import EcaRow, load_tm_spec, tm_run_bounded
from .compression import COMPRESSORS
from .embedding import (
    build_embedded_machine,
    embedding_equivalence_check,
    ep_semi_decide,
    halting_property,
)
from .errors import CilabError, ConfigError, InvalidInput
from .info import (
    BitFlipNoise,
    CoarseGrainer,
    autonomy_index,
    complexity_curve,
    environment_conditional_entropy,
    irreducibility_score,
    write_complexity_csv,
)
from .machines import behaviour_classes, completions, corpus_dir, load_corpus, machine_from_code
from .predictors import (
    EcaSystem,
    PredictorSpec,
    efficiency_sweep,
    write_curves_csv,
    write_sweep_csv,
)

log = logging.getLogger("cilab")

EXPERIMENTS = ("eca-run", "embed-check", "predict-sweep", "complexity-sweep", "halting-sweep",
               "autonomy-report")

# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------


def _int(lo=None, hi=None):
    def check(v, name):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an integer, got {v!r}")
        if lo is not None and v < lo or hi is not None and v > hi:
            raise ValueError(f"value {v} outside [{lo}, {hi if hi is not None else 'inf'}]")
        return v
    return check


def _int_list(lo=None, hi=None, ascending=False):
    item = _int(lo, hi)

    def check(v, name):
        if not isinstance(v, list) or not v:
            raise ValueError("expected a non-empty list of integers")
        out = [item(x, name) for x in v]
        if ascending and out != sorted(set(out)):
            raise ValueError("values must be strictly increasing")
        return out
    return check


def _choice(*options):
    def check(v, name):
        if v not in options:
            raise ValueError(f"{v!r} not one of {list(options)}")
        return v
    return check


def _bool(v, name):
    if not isinstance(v, bool):
        raise ValueError(f"expected true/false, got {v!r}")
    return v


def _any_list(v, name):
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty list")
    return v


def _corpus(v, name):
    if v == "bundled":
        return v
    if not isinstance(v, str):
        raise ValueError("expected a directory path or 'bundled'")
    return v


def _opt_path(v, name):
    if v is None or isinstance(v, str):
        return v
    raise ValueError("expected a file path")


def _grain(v, name):
    CoarseGrainer.parse(str(v))
    return str(v)


DEFAULT_PREDICTORS = [
    {"kind": "frozen", "r": 256},
    {"kind": "chance-baseline", "r": 256},
    {"kind": "truncated-simulator", "r": 256},
    {"kind": "coarse-simulator", "r": 256, "factor": 2},
    {"kind": "additive-shortcut", "r": 704},
    {"kind": "exact-simulator", "r": 65536},
]

DEFAULT_AGENTS = [
    {"label": "reactive-on-rule110", "agent": {"family": "reactive"},
     "environment": {"family": "eca", "rule": 110, "width": 16}},
    {"label": "counter-on-rule110", "agent": {"family": "counter"},
     "environment": {"family": "eca", "rule": 110, "width": 16}},
    {"label": "lfsr-copy-channel", "agent": {"family": "lfsr"}, "environment": {"family": "copy"},
     "grain": "identity"},
]

SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "eca-run": {
        "rule_index": (_int(0, 255), 110),
        "width": (_int(3), 64),
        "steps": (_int(1), 256),
        "init": (_choice("random", "single"), "random"),
    },
    "embed-check": {
        "corpus": (_corpus, "bundled"),
        "include_enumeration": (_bool, True),
        "n_states": (_int(1, 3), 2),
        "budget": (_int(1), 10_000),
    },
    "predict-sweep": {
        "rules": (_int_list(0, 255), [90, 110]),
        "widths": (_int_list(3), [64]),
        "horizons": (_int_list(0, ascending=True), [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 768, 1024]),
        "seeds": (_int(1), 30),
        "predictors": (_any_list, DEFAULT_PREDICTORS),
    },
    "complexity-sweep": {
        "rules": (_int_list(0, 255), [0, 30, 90, 110, 255]),
        "width": (_int(3), 64),
        "horizon": (_int(2), 2000),
        "prefix_stride": (_int(1), 100),
        "compressor": (_choice(*COMPRESSORS), "lzmw"),
        "include_constant": (_bool, True),
    },
    "halting-sweep": {
        "budget": (_int(1), 10_000),
        "n_states": (_int(1, 3), 2),
        "previous": (_opt_path, None),
    },
    "autonomy-report": {
        "systems": (_any_list, DEFAULT_AGENTS),
        "horizon": (_int(2), 10_000),
        "probe_budget": (_int(1), 200),
        "grain": (_grain, "hash-8"),
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    seed: int | None = None
    output_dir: str | None = None
    path: str | None = None

    def canonical(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "seed": self.seed}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _line_map(node) -> dict[str, int]:
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[k.value] = k.start_mark.line + 1
    return out


def parse_config(path: str | Path) -> ExperimentConfig:
    """Validate a YAML config, filling defaults; errors carry field and line."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", path=path)
    text = path.read_text(encoding="utf-8")
    try:
        root = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"not valid YAML: {exc}", line=None if mark is None else mark.line + 1,
                          path=path) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", path=path)
    top_lines = _line_map(root)
    params_node = None
    for k, v in root.value:
        if k.value == "params":
            params_node = v
    param_lines = _line_map(params_node)

    unknown = set(doc) - {"experiment", "seed", "output_dir", "params"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError("unknown top-level field", field=key, line=top_lines.get(key), path=path)
    exp = doc.get("experiment")
    if exp is None:
        raise ConfigError("missing required field", field="experiment", path=path)
    if exp not in SCHEMAS:
        raise ConfigError(f"unknown experiment id {exp!r}; expected one of {list(EXPERIMENTS)}",
                          field="experiment", line=top_lines.get("experiment"), path=path)
    seed = doc.get("seed")
    if seed is not None:
        try:
            _int(0, 2 ** 64 - 1)(seed, "seed")
        except ValueError as exc:
            raise ConfigError(str(exc), field="seed", line=top_lines.get("seed"), path=path) from None
    raw = doc.get("params") or {}
    if not isinstance(raw, dict):
        raise ConfigError("params must be a mapping", field="params", line=top_lines.get("params"), path=path)
    schema = SCHEMAS[exp]
    params = {}
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown parameter for {exp}", field=f"params.{key}",
                              line=param_lines.get(key), path=path)
    for key, (check, default) in schema.items():
        if key in raw:
            try:
                params[key] = check(raw[key], key)
            except ValueError as exc:
                raise ConfigError(str(exc), field=f"params.{key}", line=param_lines.get(key), path=path) from None
        else:
            params[key] = default
    cfg = ExperimentConfig(exp, params, seed, doc.get("output_dir"), str(path))
    _check_referenced_files(cfg, path, param_lines)
    return cfg


def _check_referenced_files(cfg: ExperimentConfig, path: Path, lines: dict) -> None:
    p = cfg.params
    base = path.parent
    if cfg.experiment == "embed-check" and p["corpus"] != "bundled":
        corpus = (base / p["corpus"]).resolve()
        if not corpus.is_dir():
            raise ConfigError(f"corpus directory not found: {corpus}", field="params.corpus",
                              line=lines.get("corpus"), path=path)
        p["corpus"] = str(corpus)
    if cfg.experiment == "halting-sweep" and p["previous"] is not None:
        prev = (base / p["previous"]).resolve()
        if not prev.is_file():
            raise ConfigError(f"file not found: {prev}", field="params.previous",
                              line=lines.get("previous"), path=path)
        p["previous"] = str(prev)
    if cfg.experiment == "predict-sweep":
        for spec in p["predictors"]:
            try:
                _predictor(spec)
            except (InvalidInput, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad predictor {spec!r}: {exc}", field="params.predictors",
                                  line=lines.get("predictors"), path=path) from None
    if cfg.experiment == "autonomy-report":
        for item in p["systems"]:
            try:
                _resolve_system_files(item, base)
                build_system(item, seed=0)
            except (InvalidInput, KeyError, TypeError, ValueError, FileNotFoundError) as exc:
                raise ConfigError(f"bad system {item!r}: {exc}", field="params.systems",
                                  line=lines.get("systems"), path=path) from None


def _resolve_system_files(item: dict, base: Path) -> None:
    agent = item.get("agent", {})
    machine = agent.get("machine")
    if isinstance(machine, str) and machine.endswith(".yaml"):
        mp = (base / machine).resolve()
        if not mp.is_file():
            raise FileNotFoundError(f"machine spec not found: {mp}")
        agent["machine"] = str(mp)


def _predictor(spec: dict) -> PredictorSpec:
    extra = tuple(sorted((k, v) for k, v in spec.items() if k not in ("kind", "r")))
    return PredictorSpec(spec["kind"], int(spec["r"]), extra)


# ---------------------------------------------------------------------------
# Agent/environment system specs
# ---------------------------------------------------------------------------


def build_system(item: dict, seed: int):
    """Instantiate ``(agent, env, s0, noise)`` from a system spec mapping.

    ``agent.family`` is one of reactive, counter, table-driven, tm-embedded,
    identity, lfsr; ``environment.family`` one of static, eca, cycle, copy
    (tm-embedded agents bring their own tape environment).
    """
    a = dict(item.get("agent", {}))
    e = dict(item.get("environment", {}))
    fam = a.get("family")
    if fam == "tm-embedded":
        machine = a["machine"]
        if str(machine).endswith(".yaml"):
            tm, word = load_tm_spec(machine)
        else:
            tm, word = machine_from_code(machine), ()
        word = tuple(a.get("input", word))
        sys = build_embedded_machine(tm, word)
        return sys.agent, sys.env, sys.s0, None

    if fam == "reactive":
        agent, a0 = reactive_agent(a.get("action", 0)), 0
    elif fam == "counter":
        agent, a0 = counter_agent(a.get("modulus"), a.get("act", True)), 0
    elif fam == "identity":
        agent, a0 = identity_agent(), 0
    elif fam == "lfsr":
        agent, a0 = lfsr_agent(), int(a.get("init", 1))
    elif fam == "table-driven":
        table = {(s, i): n for s, i, n in a["table"]}
        agent = table_agent(table, dict(a["outputs"]), a["states"])
        a0 = a.get("init", a["states"][0])
    else:
        raise InvalidInput(f"unknown agent family {fam!r}")

    efam = e.get("family")
    rng = np.random.default_rng([seed, 0xE0])
    if efam == "eca":
        width = int(e.get("width", 16))
        env = eca_environment(int(e.get("rule", 110)))
        e0 = EcaRow.random(width, rng)
    elif efam == "static":
        env, e0 = static_environment(), EcaRow.random(int(e.get("width", 16)), rng)
    elif efam == "cycle":
        env, e0 = cycle_environment(int(e["period"])), 0
    elif efam == "copy":
        env, e0 = copy_environment(), 0
    else:
        raise InvalidInput(f"unknown environment family {efam!r}")
    noise = None
    if "noise_cell" in e:
        noise = BitFlipNoise(seed, int(e["noise_cell"]))
    return agent, env, CoupledState(a0, e0, 0), noise


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    artifact_version: str
    master_seed: int
    started: str
    finished: str | None = None
    status: str = "running"
    error: str | None = None
    outputs: dict[str, str] = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, out_dir: str | Path) -> "RunManifest":
        return cls(**json.loads((Path(out_dir) / "manifest.json").read_text(encoding="utf-8")))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_manifest(out_dir: str | Path) -> list[str]:
    """Names of outputs whose on-disk checksum no longer matches the manifest."""
    out_dir = Path(out_dir)
    m = RunManifest.read(out_dir)
    return [name for name, digest in m.outputs.items()
            if not (out_dir / name).is_file() or sha256_file(out_dir / name) != digest]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None,
                   seed: int | None = None, budget: int | None = None) -> RunManifest:
    seed = cfg.seed if seed is None else seed
    if seed is None:
        raise ConfigError("no seed given: set 'seed' in the config or pass --seed", field="seed", path=cfg.path)
    cfg.seed = seed
    if budget is not None:
        if "budget" not in cfg.params:
            raise ConfigError(f"--budget does not apply to {cfg.experiment}", field="budget", path=cfg.path)
        if budget < 1:
            raise ConfigError("budget must be >= 1", field="budget", path=cfg.path)
        cfg.params["budget"] = budget
    out = Path(out_dir or cfg.output_dir or f"results/{cfg.experiment}")
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.experiment, cfg.digest(), __version__, seed, _now())
    manifest.write(out)
    (out / "config.resolved.yaml").write_text(yaml.safe_dump(cfg.canonical(), sort_keys=True), encoding="utf-8")
    log.info("running %s seed=%d -> %s", cfg.experiment, seed, out)
    try:
        files = RUNNERS[cfg.experiment](cfg.params, seed, out)
    except Exception as exc:
        manifest.status = "failed"
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.finished = _now()
        manifest.write(out)
        raise
    files = ["config.resolved.yaml", *files]
    manifest.outputs = {name: sha256_file(out / name) for name in sorted(files)}
    manifest.status = "ok"
    manifest.finished = _now()
    manifest.write(out)
    return manifest


def _dump_yaml(doc, path: Path) -> None:
    path.write_text(yaml.safe_dump(doc, sort_keys=False, default_flow_style=False), encoding="utf-8")


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _run_eca(p: dict, seed: int, out: Path) -> list[str]:
    width = p["width"]
    if p["init"] == "single":
        row = EcaRow(width, 1 << (width // 2))
    else:
        row = EcaRow.random(width, np.random.default_rng([seed, width]))
    trace = run_coupled(identity_agent(), eca_environment(p["rule_index"], react=False),
                        CoupledState(0, row, 0), p["steps"], seed=seed)
    stem = f"trace_rule{p['rule_index']}_w{width}"
    write_trace(trace, out / f"{stem}.csv")
    with open(out / f"rows_rule{p['rule_index']}_w{width}.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "row", "density"])
        for rec in trace.records:
            w.writerow([rec.t, rec.s_E.to_string(), repr(round(rec.s_E.density(), 9))])
    return [f"{stem}.csv", f"{stem}.bin", f"rows_rule{p['rule_index']}_w{width}.csv"]


def _run_embed_check(p: dict, seed: int, out: Path) -> list[str]:
    budget = p["budget"]
    rows = []
    corpus_path = corpus_dir() if p["corpus"] == "bundled" else Path(p["corpus"])
    for tm, word in load_corpus(corpus_path):
        rep = embedding_equivalence_check(tm, word, budget)
        rows.append({"source": "corpus", "cylinder": 1, **rep.as_dict()})
    covered = expected = 0
    if p["include_enumeration"]:
        n = p["n_states"]
        for cls in behaviour_classes(budget, n, 2):
            rep = embedding_equivalence_check(cls.machine, (), budget)
            covered += cls.cylinder
            rows.append({"source": f"enum-{n}x2", "cylinder": cls.cylinder, **rep.as_dict()})
        expected = (4 * (n + 1)) ** (2 * n)
    with open(out / "embed_check.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "machine", "cylinder", "ok", "steps_checked", "halted_at", "verdict",
                    "coupled_steps", "divergence_step"])
        for r in rows:
            div = r.get("divergence", {}).get("step", "")
            w.writerow([r["source"], r["machine"], r["cylinder"], int(r["ok"]), r["steps_checked"],
                        "" if r["halted_at"] is None else r["halted_at"], r["verdict"] or "",
                        r["coupled_steps"], div])
    failures = [r for r in rows if not r["ok"]]
    report = {
        "budget": budget,
        "corpus": "bundled" if p["corpus"] == "bundled" else Path(p["corpus"]).name,
        "corpus_machines": sum(1 for r in rows if r["source"] == "corpus"),
        "enumeration": {"classes": sum(1 for r in rows if r["source"] != "corpus"),
                        "machines_covered": covered, "machines_expected": expected},
        "all_pass": not failures,
        "failures": failures,
    }
    _dump_yaml(report, out / "embed_check_report.yaml")
    return ["embed_check.csv", "embed_check_report.yaml"]


def _run_predict_sweep(p: dict, seed: int, out: Path) -> list[str]:
    systems = [EcaSystem(r, w) for w in p["widths"] for r in p["rules"]]
    preds = [_predictor(s) for s in p["predictors"]]
    curves, reports = efficiency_sweep(systems, preds, p["horizons"], p["seeds"], seed)
    write_sweep_csv(reports, out / "sweep.csv")
    write_curves_csv(curves, out / "curves.csv")
    summary = {
        "master_seed": seed,
        "seeds": p["seeds"],
        "curves": [{"system": c.system_id, "predictor": c.predictor_id,
                    "inapplicable_horizons": list(c.inapplicable)} for c in curves],
    }
    _dump_yaml(summary, out / "sweep_summary.yaml")
    return ["sweep.csv", "curves.csv", "sweep_summary.yaml"]


def complexity_prefixes(horizon: int, stride: int) -> list[int]:
    return list(range(stride, horizon + 1, stride)) or [horizon]


def _run_complexity_sweep(p: dict, seed: int, out: Path) -> list[str]:
    width, horizon = p["width"], p["horizon"]
    steps = complexity_prefixes(horizon, p["prefix_stride"])
    row = EcaRow.random(width, np.random.default_rng([seed, width]))
    curves = {}
    for rule in p["rules"]:
        trace = run_coupled(identity_agent(), eca_environment(rule, react=False),
                            CoupledState(0, row, 0), horizon, seed=seed)
        curves[f"rule{rule}"] = complexity_curve(trace, steps, p["compressor"], label=f"rule{rule}")
    if p["include_constant"]:
        trace = run_coupled(identity_agent(), static_environment(), CoupledState(0, row, 0), horizon, seed=seed)
        curves["constant"] = complexity_curve(trace, steps, p["compressor"], label="constant")
    write_complexity_csv(curves, out / "complexity.csv")
    summary = {
        "compressor": p["compressor"],
        "width": width,
        "seed": seed,
        "slopes_bits_per_step": {k: round(c.slope, 9) for k, c in curves.items()},
        "fit_residual_bits": {k: round(c.residual, 6) for k, c in curves.items()},
    }
    if "rule0" in curves:
        summary["irreducibility_vs_rule0"] = {
            k: round(irreducibility_score(c, curves["rule0"]), 6) for k, c in curves.items()}
    _dump_yaml(summary, out / "complexity_summary.yaml")
    return ["complexity.csv", "complexity_summary.yaml"]


def halting_rows(budget: int, n_states: int = 2):
    """One row per full machine: its class, the EP outcome and the direct verdict."""
    rows = []
    for cls in behaviour_classes(budget, n_states, 2):
        sys = build_embedded_machine(cls.machine, ())
        ep = ep_semi_decide(sys.agent, sys.env, sys.s0, halting_property(sys), budget)
        direct = tm_run_bounded(cls.machine, (), budget)
        direct_label = f"Halted{{{direct.at_step}}}" if hasattr(direct, "at_step") else f"OutOfBudget{{{budget}}}"
        agree = (ep.reached and hasattr(direct, "at_step") and direct.at_step == ep.t) or \
                (not ep.reached and not hasattr(direct, "at_step"))
        for full in completions(cls, n_states, 2):
            rows.append({"machine": full.name, "class": cls.code, "outcome": ep.label(),
                         "t": "" if ep.t is None else ep.t, "budget": budget, "spent": ep.spent,
                         "direct": direct_label, "agree": int(agree)})
    rows.sort(key=lambda r: r["machine"])
    return rows


def read_halting_table(path: str | Path) -> dict[str, dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {r["machine"]: r for r in csv.DictReader(fh)}


def halting_refinement_violations(old: dict[str, dict], new: dict[str, dict]) -> list[str]:
    """Machines whose verdict changed other than Unknown -> Reached."""
    bad = []
    for m, row in old.items():
        new_row = new.get(m)
        if new_row is None:
            bad.append(f"{m}: missing from new table")
        elif row["outcome"].startswith("Reached") and new_row["outcome"] != row["outcome"]:
            bad.append(f"{m}: {row['outcome']} -> {new_row['outcome']}")
    return bad


def _run_halting_sweep(p: dict, seed: int, out: Path) -> list[str]:
    rows = halting_rows(p["budget"], p["n_states"])
    fields = ["machine", "class", "outcome", "t", "budget", "spent", "direct", "agree"]
    with open(out / "halting.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    reached = Counter(r["t"] for r in rows if r["outcome"].startswith("Reached"))
    summary = {
        "budget": p["budget"],
        "machines": len(rows),
        "reached": sum(reached.values()),
        "unknown": sum(1 for r in rows if r["outcome"].startswith("Unknown")),
        "disagreements": sum(1 for r in rows if not r["agree"]),
        "halting_step_histogram": {int(k): v for k, v in sorted(reached.items())},
    }
    if p["previous"]:
        old = read_halting_table(p["previous"])
        new = {r["machine"]: {k: str(v) for k, v in r.items()} for r in rows}
        viol = halting_refinement_violations(old, new)
        summary["refinement_violations"] = viol
        summary["refined_unknown_to_reached"] = sum(
            1 for m, r in old.items() if r["outcome"].startswith("Unknown") and m in new
            and new[m]["outcome"].startswith("Reached"))
    _dump_yaml(summary, out / "halting_summary.yaml")
    return ["halting.csv", "halting_summary.yaml"]


def _witness_summary(res) -> dict:
    d = {"holds": res.holds, "status": res.status.value}
    if res.evidence:
        d["evidence"] = res.evidence
    if res.witness is not None:
        d["witness"] = {"kind": res.witness.kind,
                        "states": [f"s_A={cs.s_A!r} s_E={cs.s_E!s}" for cs in res.witness.states]}
    return d


def _run_autonomy_report(p: dict, seed: int, out: Path) -> list[str]:
    report = []
    mi_rows = []
    for k, item in enumerate(p["systems"]):
        label = item.get("label", f"system{k}")
        agent, env, s0, noise = build_system(item, seed)
        grain = CoarseGrainer.parse(item.get("grain", p["grain"]))
        auto = check_autonomy_conditions(agent, env, s0, p["probe_budget"])
        replays = [replay_witness(agent, env, c.witness) for c in auto.conditions() if c.witness is not None]
        trace = run_coupled(agent, env, s0, p["horizon"], noise=noise, seed=seed)
        mi = autonomy_index(trace, grain)
        lam = environment_conditional_entropy(trace, grain)
        report.append({
            "label": label,
            "agent": agent.name,
            "environment": env.name,
            "complexity_class": env.complexity_class,
            "conditions": {
                "internal_state_independence": _witness_summary(auto.condition1_internal_state_independence),
                "generative_decision_making": _witness_summary(auto.condition2_generative),
                "environmental_coupling": _witness_summary(auto.condition3_coupling),
            },
            "witnesses_replayed": all(replays),
            "grain": grain.id,
            "samples": mi.samples,
            "I_agent_to_env_bits": round(mi.I_agent_to_env, 9),
            "I_env_to_agent_bits": round(mi.I_env_to_agent, 9),
            "autonomy_index_bits": round(mi.autonomy_index, 9),
            "lambda_E_bits": round(lam, 9),
        })
        mi_rows.append([label, grain.id, mi.samples, repr(round(mi.I_agent_to_env, 9)),
                        repr(round(mi.I_env_to_agent, 9)), repr(round(mi.autonomy_index, 9)),
                        repr(round(lam, 9))])
    _dump_yaml({"seed": seed, "horizon": p["horizon"], "probe_budget": p["probe_budget"], "systems": report},
               out / "autonomy_report.yaml")
    with open(out / "mi.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["system", "grain", "samples", "I_agent_to_env", "I_env_to_agent", "autonomy_index",
                    "lambda_E"])
        w.writerows(mi_rows)
    return ["autonomy_report.yaml", "mi.csv"]


RUNNERS = {
    "eca-run": _run_eca,
    "embed-check": _run_embed_check,
    "predict-sweep": _run_predict_sweep,
    "complexity-sweep": _run_complexity_sweep,
    "halting-sweep": _run_halting_sweep,
    "autonomy-report": _run_autonomy_report,
}

# ---------------------------------------------------------------------------
# Plot data
# ---------------------------------------------------------------------------

PLOT_SOURCES = ("curves.csv", "complexity.csv", "halting.csv")


def emit_plot_data(results_dir: str | Path) -> list[Path]:
    """Reshape finished results into wide, gnuplot-ready CSVs under ``plot/``."""
    results = Path(results_dir)
    present = [name for name in PLOT_SOURCES if (results / name).is_file()]
    if not present:
        raise CilabError(f"no results in {results}: expected one of {', '.join(PLOT_SOURCES)}")
    plot = results / "plot"
    plot.mkdir(exist_ok=True)
    made = []
    if "curves.csv" in present:
        made += _wide(results / "curves.csv", "system", "predictor", "mean_accuracy", plot, "accuracy_vs_t")
    if "complexity.csv" in present:
        made += _wide(results / "complexity.csv", None, "system", "khat_bits", plot, "khat_vs_t")
    if "halting.csv" in present:
        hist = Counter()
        with open(results / "halting.csv", newline="", encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                if r["outcome"].startswith("Reached"):
                    hist[int(r["t"])] += 1
        path = plot / "halting_histogram.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["halting_step", "machines"])
            for k in sorted(hist):
                w.writerow([k, hist[k]])
        made.append(path)
    return made


def _wide(src: Path, group: str | None, series: str, value: str, plot: Path, stem: str) -> list[Path]:
    with open(src, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    groups: dict[str, list] = {}
    for r in rows:
        groups.setdefault(r[group] if group else "", []).append(r)
    made = []
    for gname, grows in groups.items():
        names = list(dict.fromkeys(r[series] for r in grows))
        table: dict[int, dict] = {}
        for r in grows:
            table.setdefault(int(r["t"]), {})[r[series]] = r[value]
        path = plot / (f"{stem}_{gname}.csv" if gname else f"{stem}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *names])
            for t in sorted(table):
                w.writerow([t, *(table[t].get(n, "") for n in names)])
        made.append(path)
    return made
