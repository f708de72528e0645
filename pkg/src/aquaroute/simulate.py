"""End-to-end windowed experiments: scenario configuration, synthetic
leak generation, the per-window engine shared by batch runs and live
sessions, metric series and report files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .faults import (FaultWeights, LeakEvent, RewardMatrix, WindowBatch,
                     build_reward_matrix, chunk_events, initial_scores,
                     read_leaks_csv, update_fault_scores)
from .learning import (LearningParams, init_learner, kernel_name, train_window)
from .operator import (InterventionCommand, InterventionOverlay,
                       OperatorScriptConfig, ShapingParams, blocked_nodes,
                       empty_overlay, load_intervention_script,
                       scripted_file_step, scripted_operator_step,
                       shape_rewards)
from .planner import (LabelCounts, WindowResult, default_threshold,
                      extract_path, isolation_set, predict_leaks)
from .topology import NetworkGraph, read_topology, validate_route_endpoints


class ScenarioError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid scenario config; message carries field-level diagnostics."""


# -- configuration ---------------------------------------------------------

class LearningConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    alpha: float = 1.0
    recovery_step: float = 0.7
    recovery_decay: float = 0.9
    epochs: int = 100
    big_init: float = 1e6
    greedy_prob: float = 0.0
    step_cap_factor: int = 50
    cold_start: bool = False

    def to_params(self) -> LearningParams:
        return LearningParams(self.alpha, self.recovery_step,
                              self.recovery_decay, self.epochs, self.big_init,
                              self.greedy_prob, self.step_cap_factor)


class FaultConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    w_count: float = 1.0
    w_time: float = 0.1
    w_cost: float = 0.001
    coupling: float = 1.0
    discount: float = 0.9

    def to_weights(self) -> FaultWeights:
        return FaultWeights(self.w_count, self.w_time, self.w_cost,
                            self.coupling, self.discount)


class ShapingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    danger_penalty: float = 1e4
    safe_relief: float = 1.0

    def to_params(self) -> ShapingParams:
        return ShapingParams(self.danger_penalty, self.safe_relief)


class SyntheticEventsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    count: int = Field(ge=0)
    propensity_alpha: float = Field(default=1.2, gt=0)
    repair_hours_scale: float = Field(default=8.0, gt=0)
    repair_hours_sigma: float = Field(default=0.75, ge=0)
    cost_scale: float = Field(default=1000.0, gt=0)
    cost_sigma: float = Field(default=1.0, ge=0)


class EventsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    file: Optional[str] = None
    synthetic: Optional[SyntheticEventsConfig] = None
    window_size: int = Field(default=30, ge=1)
    repeat: bool = False

    @model_validator(mode="after")
    def _one_source(self):
        if (self.file is None) == (self.synthetic is None):
            raise ValueError("give exactly one of 'file' or 'synthetic'")
        return self


class OperatorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    mode: Literal["none", "scripted", "live"] = "none"
    script_file: Optional[str] = None  # deterministic replay script
    intervene_prob: float = 0.3
    max_new_dangerous: int = 3
    max_new_safe: int = 3
    persist_min: int = 3
    persist_max: int = 10

    def to_script_config(self) -> OperatorScriptConfig:
        return OperatorScriptConfig(self.intervene_prob, self.max_new_dangerous,
                                    self.max_new_safe, self.persist_min,
                                    self.persist_max)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    topology: str
    events: EventsConfig
    variant: Literal["plain", "reward_shaping", "action_pruning"] = "plain"
    source: int = 1
    dest: int
    seed: int = 0
    max_windows: Optional[int] = Field(default=None, ge=1)
    learning: LearningConfig = LearningConfig()
    faults: FaultConfig = FaultConfig()
    shaping: ShapingConfig = ShapingConfig()
    operator: OperatorConfig = OperatorConfig()

    @model_validator(mode="after")
    def _consistent(self):
        if self.variant == "plain" and self.operator.mode != "none":
            raise ValueError("variant 'plain' requires operator mode 'none'")
        if self.events.repeat and self.max_windows is None:
            raise ValueError("events.repeat requires max_windows")
        return self


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{loc}: {item['msg']}")
    return "; ".join(lines)


def parse_config(data: dict, base_dir: str | Path | None = None) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_validation_error(err)) from err
    if base_dir is not None:
        base = Path(base_dir)
        updates = {"topology": str(base / cfg.topology)} \
            if not Path(cfg.topology).is_absolute() else {}
        cfg = cfg.model_copy(update=updates)
        if cfg.events.file and not Path(cfg.events.file).is_absolute():
            cfg = cfg.model_copy(update={
                "events": cfg.events.model_copy(
                    update={"file": str(base / cfg.events.file)})})
        if cfg.operator.script_file and not Path(cfg.operator.script_file).is_absolute():
            cfg = cfg.model_copy(update={
                "operator": cfg.operator.model_copy(
                    update={"script_file": str(base / cfg.operator.script_file)})})
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} is not a mapping")
    return parse_config(data, base_dir=path.parent)


def config_hash(cfg: ScenarioConfig) -> str:
    payload = json.dumps(cfg.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


# -- synthetic leak data ----------------------------------------------------

def generate_synthetic_leaks(g, cfg: SyntheticEventsConfig, rng) -> list[LeakEvent]:
    """Random leak events with heavy-tailed per-node propensities, so some
    neighborhoods end up far more leak-prone than others."""
    n_nodes = g.n_nodes if isinstance(g, NetworkGraph) else int(g)
    if n_nodes < 1:
        raise ScenarioError("need at least one node")
    propensity = 1.0 + rng.pareto(cfg.propensity_alpha, n_nodes)
    probs = propensity / propensity.sum()
    nodes = rng.choice(n_nodes, size=cfg.count, p=probs) + 1
    repair = rng.lognormal(math.log(cfg.repair_hours_scale),
                           cfg.repair_hours_sigma, cfg.count)
    cost = rng.lognormal(math.log(cfg.cost_scale), cfg.cost_sigma, cfg.count)
    return [LeakEvent(i + 1, int(nodes[i]), float(repair[i]), float(cost[i]))
            for i in range(cfg.count)]


# -- metrics -----------------------------------------------------------------

def qopt_delta(prev: np.ndarray, cur: np.ndarray) -> float:
    """Summed entrywise absolute difference between two predicted-cost
    tables; zero iff identical."""
    if prev.shape != cur.shape:
        raise ScenarioError(f"table domains differ: {prev.shape} vs {cur.shape}")
    return float(np.abs(cur - prev).sum())


def qopt_delta_max(prev: np.ndarray, cur: np.ndarray) -> float:
    if prev.shape != cur.shape:
        raise ScenarioError(f"table domains differ: {prev.shape} vs {cur.shape}")
    if prev.size == 0:
        return 0.0
    return float(np.abs(cur - prev).max())


# -- window engine -----------------------------------------------------------

class WindowEngine:
    """Owns one scenario's mutable state and advances it window by window.

    Shared by batch runs (operator scripted or none) and live gateway
    sessions (staged commands applied at window boundaries).
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.graph = read_topology(cfg.topology)
        diag = validate_route_endpoints(self.graph, cfg.source, cfg.dest)
        if diag is not None:
            raise ScenarioError(f"bad route endpoints: {diag}")

        events_ss, operator_ss, training_ss = \
            np.random.SeedSequence(cfg.seed).spawn(3)
        if cfg.events.file:
            events = read_leaks_csv(cfg.events.file)
        else:
            events = generate_synthetic_leaks(
                self.graph, cfg.events.synthetic, np.random.default_rng(events_ss))
        self.batches = chunk_events(events, cfg.events.window_size)
        if not self.batches:
            self.max_windows = 0
        elif cfg.events.repeat:
            self.max_windows = cfg.max_windows
        else:
            self.max_windows = min(cfg.max_windows or len(self.batches),
                                   len(self.batches))

        self.operator_rng = np.random.default_rng(operator_ss)
        self.bit_generator = np.random.PCG64(training_ss)
        self.params = cfg.learning.to_params()
        self.weights = cfg.faults.to_weights()
        self.shaping = cfg.shaping.to_params()
        self.script = (load_intervention_script(cfg.operator.script_file)
                       if cfg.operator.script_file else None)
        self.learner = init_learner(self.graph, self.params)
        self.scores = initial_scores(self.graph)
        self.overlay = empty_overlay(
            0, source="live" if cfg.operator.mode == "live" else "scripted")
        self.window_index = 0
        self.prev_qopt: np.ndarray | None = None
        self.last_result: WindowResult | None = None

    @property
    def finished(self) -> bool:
        return self.window_index >= self.max_windows

    @property
    def allow_safe(self) -> bool:
        return self.cfg.variant == "reward_shaping"

    @property
    def protected(self) -> frozenset[int]:
        return frozenset((self.cfg.source, self.cfg.dest))

    def _next_overlay(self, staged: list[InterventionCommand] | None
                      ) -> InterventionOverlay:
        k = self.window_index + 1
        mode = self.cfg.operator.mode
        if mode == "none":
            return empty_overlay(k)
        if mode == "scripted":
            if self.script is not None:
                return scripted_file_step(
                    self.overlay, self.script, g=self.graph,
                    source=self.cfg.source, dest=self.cfg.dest,
                    allow_safe=self.allow_safe)
            return scripted_operator_step(
                self.overlay, self.cfg.operator.to_script_config(),
                self.operator_rng, n_nodes=self.graph.n_nodes,
                protected=self.protected, allow_safe=self.allow_safe)
        overlay = replace(self.overlay, index=k)
        for cmd in staged or ():
            from .operator import apply_live_intervention
            overlay = apply_live_intervention(
                overlay, cmd, g=self.graph, source=self.cfg.source,
                dest=self.cfg.dest, allow_safe=self.allow_safe)
        return overlay

    def next_window(self, staged: list[InterventionCommand] | None = None
                    ) -> WindowResult:
        if self.finished:
            raise ScenarioError("scenario already finished")
        k = self.window_index + 1
        try:
            batch = self.batches[(k - 1) % len(self.batches)]
            if batch.index != k:  # replayed batch: rebase for the recursion
                batch = WindowBatch(k, batch.events, batch.is_partial)

            self.scores = update_fault_scores(self.scores, batch,
                                              self.weights, self.graph)
            ra = build_reward_matrix(self.graph, self.scores, self.weights)
            self.overlay = self._next_overlay(staged)
            if self.cfg.variant == "plain":
                shaped = ra
            else:
                shaped = shape_rewards(self.graph, ra, self.overlay,
                                       self.shaping, self.scores, self.weights)
            blocked = blocked_nodes(self.overlay, self.cfg.variant)

            if self.cfg.learning.cold_start:
                self.learner.reset_tables()
            stats = train_window(self.learner, self.graph, shaped.values,
                                 self.params, blocked, self.cfg.dest,
                                 self.bit_generator)

            qopt = self.learner.qopt.copy()
            delta = delta_max = None
            if self.prev_qopt is not None:
                delta = qopt_delta(self.prev_qopt, qopt)
                delta_max = qopt_delta_max(self.prev_qopt, qopt)
            path = extract_path(self.graph, qopt, self.cfg.source,
                                self.cfg.dest, forbidden=self.overlay.dangerous,
                                rewards=shaped.values)
            leaky = frozenset(ev.node for ev in batch.events)
            tau = default_threshold(self.scores)
            result = WindowResult(
                index=k,
                path=path,
                isolation=isolation_set(path, leaky, self.overlay.dangerous),
                predicted_leaks=predict_leaks(self.scores, tau),
                qopt_delta=delta,
                qopt_delta_max=delta_max,
                path_cost=path.total_cost if path else None,
                label_counts=LabelCounts(len(leaky), len(self.overlay.dangerous),
                                         len(self.overlay.safe)),
                dangerous=self.overlay.dangerous,
                safe=self.overlay.safe,
                leaky=leaky,
                threshold=tau,
                steps=stats.steps,
                trapped=stats.trapped,
                truncated=stats.truncated,
            )
        except ScenarioError:
            raise
        except Exception as err:
            raise ScenarioError(f"window {k} failed: {err}") from err
        self.prev_qopt = qopt
        self.window_index = k
        self.last_result = result
        return result


# -- reports ------------------------------------------------------------------

@dataclass
class RunReport:
    windows: list[WindowResult]
    metadata: dict
    summary: dict
    timings: dict


def result_to_dict(r: WindowResult) -> dict:
    return {
        "window_index": r.index,
        "path": list(r.path.nodes) if r.path else None,
        "path_cost": r.path_cost,
        "isolation": sorted(r.isolation),
        "predicted_leaks": sorted(r.predicted_leaks),
        "qopt_delta": r.qopt_delta,
        "qopt_delta_max": r.qopt_delta_max,
        "label_counts": {"leaks": r.label_counts.leaks,
                         "dangerous": r.label_counts.dangerous,
                         "safe": r.label_counts.safe},
        "dangerous": sorted(r.dangerous),
        "safe": sorted(r.safe),
        "leaky": sorted(r.leaky),
        "threshold": r.threshold if math.isfinite(r.threshold) else None,
        "steps": r.steps,
        "trapped": r.trapped,
        "truncated": r.truncated,
    }


def _prediction_scores(windows: list[WindowResult]) -> tuple[float | None, float | None]:
    precisions, recalls = [], []
    for cur, nxt in zip(windows, windows[1:]):
        predicted, actual = cur.predicted_leaks, nxt.leaky
        if predicted:
            precisions.append(len(predicted & actual) / len(predicted))
        if actual:
            recalls.append(len(predicted & actual) / len(actual))
    precision = float(np.mean(precisions)) if precisions else None
    recall = float(np.mean(recalls)) if recalls else None
    return precision, recall


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Run a full windowed experiment; deterministic for a given config
    and seed (timings aside)."""
    started = time.perf_counter()
    engine = WindowEngine(cfg)
    windows = []
    while not engine.finished:
        windows.append(engine.next_window())
    elapsed = time.perf_counter() - started

    deltas = [w.qopt_delta for w in windows if w.qopt_delta is not None]
    precision, recall = _prediction_scores(windows)
    final_path = windows[-1].path if windows else None
    summary = {
        "windows": len(windows),
        "infeasible_windows": sum(1 for w in windows if w.path is None),
        "trapped": sum(w.trapped for w in windows),
        "truncated": sum(w.truncated for w in windows),
        "total_steps": sum(w.steps for w in windows),
        "median_qopt_delta": float(np.median(deltas)) if deltas else None,
        "prediction_precision": precision,
        "prediction_recall": recall,
        "final_path": list(final_path.nodes) if final_path else None,
    }
    metadata = {
        "config": cfg.model_dump(mode="json"),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "backend": kernel_name(),
        "version": __version__,
    }
    return RunReport(windows, metadata, summary,
                     {"elapsed_s": elapsed, "started_unix": time.time() - elapsed})


WINDOWS_FILE = "windows.ndjson"
SUMMARY_FILE = "summary.json"
TIMINGS_FILE = "run_meta.json"


def write_report(report: RunReport, outdir: str | Path) -> None:
    """windows.ndjson and summary.json are deterministic for a given
    config+seed; wall-clock timings go to run_meta.json only."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / WINDOWS_FILE, "w", encoding="utf-8") as fh:
        for w in report.windows:
            fh.write(json.dumps(result_to_dict(w), sort_keys=True,
                                separators=(",", ":")))
            fh.write("\n")
    with open(outdir / SUMMARY_FILE, "w", encoding="utf-8") as fh:
        json.dump({"metadata": report.metadata, "summary": report.summary},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(outdir / TIMINGS_FILE, "w", encoding="utf-8") as fh:
        json.dump(report.timings, fh, indent=2)
        fh.write("\n")


def load_report_windows(report_dir: str | Path) -> list[dict]:
    path = Path(report_dir) / WINDOWS_FILE
    if not path.exists():
        raise FileNotFoundError(f"no report at {path}")
    windows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                windows.append(json.loads(line))
    if not windows:
        raise ScenarioError(f"report at {path} holds no windows")
    return windows


def load_report_summary(report_dir: str | Path) -> dict:
    path = Path(report_dir) / SUMMARY_FILE
    if not path.exists():
        raise FileNotFoundError(f"no report summary at {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def export_metrics(windows: list[dict], outdir: str | Path) -> list[Path]:
    """Write the three metric series keyed by window index."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    path = outdir / "qopt_delta.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "qopt_delta", "qopt_delta_max"])
        for w in windows:
            if w["qopt_delta"] is not None:
                writer.writerow([w["window_index"], repr(w["qopt_delta"]),
                                 repr(w["qopt_delta_max"])])
    paths.append(path)

    path = outdir / "path_cost.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "path_cost", "feasible"])
        for w in windows:
            feasible = int(w["path"] is not None)
            cost = repr(w["path_cost"]) if feasible else ""
            writer.writerow([w["window_index"], cost, feasible])
    paths.append(path)

    path = outdir / "label_counts.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "leaks", "dangerous", "safe"])
        for w in windows:
            counts = w["label_counts"]
            writer.writerow([w["window_index"], counts["leaks"],
                             counts["dangerous"], counts["safe"]])
    paths.append(path)
    return paths
