"""The human side of the loop: dangerous/safe node labels, the shaped
cost overlay, the action-pruning filter, live mark/unmark commands and a
scripted stochastic operator for reproducible experiments.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .faults import FaultScores, FaultWeights, RewardMatrix
from .topology import NetworkGraph


class InterventionError(ValueError):
    pass


@dataclass(frozen=True)
class InterventionOverlay:
    index: int
    dangerous: frozenset[int] = frozenset()
    safe: frozenset[int] = frozenset()
    source: str = "scripted"  # "scripted" | "live"
    # label -> expiry window, scripted-mode bookkeeping only
    expiry: dict[int, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dangerous & self.safe:
            raise InterventionError(
                f"nodes labeled both dangerous and safe: "
                f"{sorted(self.dangerous & self.safe)}")


def empty_overlay(index: int = 0, source: str = "scripted") -> InterventionOverlay:
    return InterventionOverlay(index=index, source=source)


@dataclass(frozen=True)
class ShapingParams:
    """Cost added for entering a dangerous node, and the fraction of the
    fault component removed for entering a safe one."""
    danger_penalty: float = 1e4
    safe_relief: float = 1.0

    def __post_init__(self):
        if self.danger_penalty <= 0:
            raise InterventionError("danger_penalty must be positive")
        if not (0.0 <= self.safe_relief <= 1.0):
            raise InterventionError("safe_relief must lie in [0, 1]")


def shape_rewards(g: NetworkGraph, ra: RewardMatrix, ov: InterventionOverlay,
                  sp: ShapingParams, f: FaultScores,
                  w: FaultWeights) -> RewardMatrix:
    """Overlay the operator's judgment on the environment costs: edges into
    dangerous nodes gain the penalty, edges into safe nodes shed (part of)
    their fault component. Output is clamped at zero."""
    overlay = np.zeros(g.n_edges)
    for node in ov.dangerous:
        g._check_node(node)
        overlay[g.edge_target == node - 1] += sp.danger_penalty
    for node in ov.safe:
        g._check_node(node)
        relief = sp.safe_relief * w.coupling * f.score(node)
        overlay[g.edge_target == node - 1] -= relief
    return RewardMatrix(ra.index, np.maximum(ra.values + overlay, 0.0))


def prune_actions(actions: list[int], ov: InterventionOverlay) -> list[int]:
    """Drop dangerous target nodes from an action list, order preserved."""
    return [a for a in actions if a not in ov.dangerous]


def blocked_nodes(ov: InterventionOverlay, variant: str) -> frozenset[int]:
    """Hard action filter for training: dangerous nodes under pruning,
    nothing otherwise."""
    return ov.dangerous if variant == "action_pruning" else frozenset()


# -- scripted stochastic operator -----------------------------------------

@dataclass(frozen=True)
class OperatorScriptConfig:
    intervene_prob: float = 0.3
    max_new_dangerous: int = 3
    max_new_safe: int = 3
    persist_min: int = 3
    persist_max: int = 10

    def __post_init__(self):
        if not (0.0 <= self.intervene_prob <= 1.0):
            raise InterventionError("intervene_prob must lie in [0, 1]")
        if self.max_new_dangerous < 0 or self.max_new_safe < 0:
            raise InterventionError("label counts must be >= 0")
        if not (1 <= self.persist_min <= self.persist_max):
            raise InterventionError("need 1 <= persist_min <= persist_max")


def _draw_node(rng, n_nodes: int, protected: frozenset[int]) -> int:
    # resample rather than reject the whole draw when an endpoint comes up
    while True:
        node = int(rng.integers(1, n_nodes + 1))
        if node not in protected:
            return node


def scripted_operator_step(prev: InterventionOverlay, cfg: OperatorScriptConfig,
                           rng, *, n_nodes: int, protected: frozenset[int],
                           allow_safe: bool) -> InterventionOverlay:
    """Advance the scripted operator one window: expire old labels, then
    with cfg.intervene_prob draw new dangerous (and, when re-evaluation is
    allowed, safe) nodes with random persistence."""
    k = prev.index + 1
    labels: dict[int, str] = {}
    expiry: dict[int, int] = {}
    for node in prev.dangerous:
        if prev.expiry.get(node, k) > k:
            labels[node] = "dangerous"
            expiry[node] = prev.expiry[node]
    for node in prev.safe:
        if prev.expiry.get(node, k) > k:
            labels[node] = "safe"
            expiry[node] = prev.expiry[node]

    if rng.random() < cfg.intervene_prob:
        n_dangerous = int(rng.integers(0, cfg.max_new_dangerous + 1))
        for _ in range(n_dangerous):
            node = _draw_node(rng, n_nodes, protected)
            labels[node] = "dangerous"
            expiry[node] = k + int(rng.integers(cfg.persist_min, cfg.persist_max + 1))
        if allow_safe:
            n_safe = int(rng.integers(0, cfg.max_new_safe + 1))
            for _ in range(n_safe):
                node = _draw_node(rng, n_nodes, protected)
                labels[node] = "safe"  # re-evaluation may flip a dangerous label
                expiry[node] = k + int(rng.integers(cfg.persist_min, cfg.persist_max + 1))

    return InterventionOverlay(
        index=k,
        dangerous=frozenset(n for n, l in labels.items() if l == "dangerous"),
        safe=frozenset(n for n, l in labels.items() if l == "safe"),
        source="scripted",
        expiry=expiry,
    )


# -- live commands ---------------------------------------------------------

LABELS = ("dangerous", "safe", "clear")


@dataclass(frozen=True)
class InterventionCommand:
    node: int
    label: str  # dangerous | safe | clear


def apply_live_intervention(current: InterventionOverlay,
                            cmd: InterventionCommand, *, g: NetworkGraph,
                            source: int, dest: int,
                            allow_safe: bool) -> InterventionOverlay:
    """Validate and apply one operator command. Endpoints can never be
    dangerous; under action pruning only new dangerous marks are allowed
    (no safe labels, no clearing)."""
    if cmd.label not in LABELS:
        raise InterventionError(f"unknown label {cmd.label!r}")
    if not (1 <= cmd.node <= g.n_nodes):
        raise InterventionError(f"unknown node {cmd.node}")
    if cmd.label == "dangerous" and cmd.node in (source, dest):
        raise InterventionError(
            f"node {cmd.node} is a protected route endpoint")
    if not allow_safe and cmd.label != "dangerous":
        raise InterventionError(
            "action pruning only permits marking new dangerous nodes")
    if not allow_safe and cmd.node in current.safe:
        raise InterventionError(
            f"node {cmd.node} already carries the opposite label")

    dangerous = set(current.dangerous)
    safe = set(current.safe)
    dangerous.discard(cmd.node)
    safe.discard(cmd.node)
    if cmd.label == "dangerous":
        dangerous.add(cmd.node)
    elif cmd.label == "safe":
        safe.add(cmd.node)
    expiry = {n: e for n, e in current.expiry.items() if n != cmd.node}
    return replace(current, dangerous=frozenset(dangerous),
                   safe=frozenset(safe), expiry=expiry, source="live")


# -- replayable script files ------------------------------------------------

def load_intervention_script(path: str | Path) -> dict[int, list[dict]]:
    """Script file: JSON list of {window, mark: [{node, label}], unmark:
    [node]} entries; labels persist until unmarked."""
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise InterventionError("intervention script must be a JSON list")
    script: dict[int, list[dict]] = {}
    for entry in entries:
        unknown = set(entry) - {"window", "mark", "unmark"}
        if unknown:
            raise InterventionError(f"unknown script fields {sorted(unknown)}")
        window = int(entry["window"])
        cmds = script.setdefault(window, [])
        for mark in entry.get("mark", ()):
            if set(mark) != {"node", "label"}:
                raise InterventionError(f"bad mark entry {mark!r}")
            cmds.append({"node": int(mark["node"]), "label": str(mark["label"])})
        for node in entry.get("unmark", ()):
            cmds.append({"node": int(node), "label": "clear"})
    return script


def scripted_file_step(prev: InterventionOverlay, script: dict[int, list[dict]],
                       *, g: NetworkGraph, source: int, dest: int,
                       allow_safe: bool) -> InterventionOverlay:
    """Apply a script's commands for the next window; labels persist."""
    k = prev.index + 1
    overlay = replace(prev, index=k)
    for cmd in script.get(k, ()):
        overlay = apply_live_intervention(
            overlay, InterventionCommand(cmd["node"], cmd["label"]),
            g=g, source=source, dest=dest, allow_safe=allow_safe)
    return replace(overlay, source="scripted")
