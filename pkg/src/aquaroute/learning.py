"""Tabular predictive Q-learning over the graph's directed edges.

Five tables keyed by edge id: the running cost estimate, the best cost
ever observed, a nonpositive per-step recovery rate, the last-update step,
and the predicted cost combining all three. A monotone integer step clock
("now") drives the prediction horizon.

The hot loop lives in a compiled kernel (aquaroute._speedups) with a pure
Python fallback (aquaroute._pykernel); both consume the same raw uint64
stream, so results are bit-identical either way. Set AQUAROUTE_PURE=1 to
force the fallback.
"""
from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .topology import NetworkGraph


def _load_kernel():
    if not os.environ.get("AQUAROUTE_PURE"):
        try:
            from . import _speedups
            return _speedups, "compiled"
        except ImportError:
            pass
    from . import _pykernel
    return _pykernel, "python"


_KERNEL, _KERNEL_NAME = _load_kernel()


def kernel_name() -> str:
    """Active backend: "compiled" or "python"."""
    return _KERNEL_NAME


class LearningError(ValueError):
    pass


@dataclass(frozen=True)
class LearningParams:
    alpha: float = 1.0            # Q step size; 1 keeps the recovery rate exact
    recovery_step: float = 0.7    # weight on new recovery-rate evidence
    recovery_decay: float = 0.9   # decay applied when a cost rises again
    epochs: int = 100
    big_init: float = 1e6
    greedy_prob: float = 0.0      # 0 = pure random exploration
    step_cap_factor: int = 50     # episode step cap = factor * n_nodes

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise LearningError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.alpha < 1.0:
            warnings.warn(
                "alpha < 1 degrades recovery-rate accuracy", stacklevel=3)
        if not (0.0 < self.recovery_step < 1.0):
            raise LearningError("recovery_step must lie in (0, 1)")
        if not (0.0 < self.recovery_decay < 1.0):
            raise LearningError("recovery_decay must lie in (0, 1)")
        if self.recovery_step >= self.recovery_decay:
            raise LearningError(
                f"recovery_step must stay below recovery_decay "
                f"({self.recovery_step} >= {self.recovery_decay})")
        if self.epochs < 1:
            raise LearningError("epochs must be >= 1")
        if self.big_init <= 0:
            raise LearningError("big_init must be positive")
        if not (0.0 <= self.greedy_prob <= 1.0):
            raise LearningError("greedy_prob must lie in [0, 1]")
        if self.step_cap_factor < 1:
            raise LearningError("step_cap_factor must be >= 1")


@dataclass(frozen=True)
class Transition:
    frm: int
    to: int
    cost_paid: float | None = None  # defaults to the shaped matrix entry


@dataclass(frozen=True)
class EpochTrace:
    visited: list[int]  # 1-based node ids, start included
    trapped: bool
    truncated: bool


@dataclass(frozen=True)
class WindowStats:
    epochs: int
    steps: int
    trapped: int
    truncated: int


class LearnerState:
    """Mutable Q/B/RR/U/Q_opt tables plus the global step clock.

    Single-writer: one logical thread updates a state; hand immutable
    copies (``copy()``) across session boundaries.
    """

    __slots__ = ("q", "best", "recovery", "last_update", "qopt", "visits",
                 "now", "big_init")

    def __init__(self, n_edges: int, big_init: float):
        self.big_init = float(big_init)
        self.q = np.zeros(n_edges)
        self.best = np.full(n_edges, self.big_init)
        self.recovery = np.zeros(n_edges)
        self.last_update = np.zeros(n_edges, dtype=np.int64)
        self.qopt = np.full(n_edges, self.big_init)
        self.visits = np.zeros(n_edges, dtype=np.int64)
        self.now = 0

    def reset_tables(self) -> None:
        """Cold start: re-initialize all tables; the step clock stays."""
        self.q[:] = 0.0
        self.best[:] = self.big_init
        self.recovery[:] = 0.0
        self.last_update[:] = 0
        self.qopt[:] = self.big_init
        self.visits[:] = 0

    def copy(self) -> "LearnerState":
        other = LearnerState(len(self.q), self.big_init)
        other.q = self.q.copy()
        other.best = self.best.copy()
        other.recovery = self.recovery.copy()
        other.last_update = self.last_update.copy()
        other.qopt = self.qopt.copy()
        other.visits = self.visits.copy()
        other.now = self.now
        return other

    def to_snapshot(self, g: NetworkGraph, p: LearningParams) -> dict:
        """Dense row-major tables (None off the edge set) for export."""
        def dense(arr, cast):
            rows = [[None] * g.n_nodes for _ in range(g.n_nodes)]
            for i0 in range(g.n_nodes):
                for e in range(g.indptr[i0], g.indptr[i0 + 1]):
                    rows[i0][int(g.edge_target[e])] = cast(arr[e])
            return rows

        return {
            "Q": dense(self.q, float),
            "B": dense(self.best, float),
            "RR": dense(self.recovery, float),
            "U": dense(self.last_update, int),
            "Q_opt": dense(self.qopt, float),
            "now": self.now,
            "params": {
                "alpha": p.alpha,
                "recovery_step": p.recovery_step,
                "recovery_decay": p.recovery_decay,
                "epochs": p.epochs,
                "big_init": p.big_init,
                "greedy_prob": p.greedy_prob,
                "step_cap_factor": p.step_cap_factor,
            },
        }

    def snapshot_json(self, g: NetworkGraph, p: LearningParams) -> str:
        return json.dumps(self.to_snapshot(g, p), separators=(",", ":"))


def init_learner(g: NetworkGraph, p: LearningParams) -> LearnerState:
    """Fresh tables: costs and update times at zero, best/predicted costs
    at the large initial constant, recovery rates at zero."""
    if p.big_init <= g.n_nodes * (float(g.base_cost.max()) if g.n_edges else 1.0):
        warnings.warn(
            "big_init may not exceed reachable path costs; raise it",
            stacklevel=2)
    return LearnerState(g.n_edges, p.big_init)


def q_update(st: LearnerState, g: NetworkGraph, tr: Transition,
             rewards: np.ndarray, p: LearningParams) -> LearnerState:
    """Single-transition update; the step clock must already sit at the
    step being recorded (callers advance st.now first)."""
    eid = g.edge_id(tr.frm, tr.to)
    cost = float(rewards[eid]) if tr.cost_paid is None else float(tr.cost_paid)
    from . import _pykernel
    _pykernel.apply_transition(
        st.q, st.best, st.recovery, st.last_update, st.qopt, st.visits,
        g.indptr, g.edge_target, eid, cost, st.now,
        p.alpha, p.recovery_step, p.recovery_decay)
    return st


def _allowed_mask(g: NetworkGraph, blocked: frozenset[int] | set[int] | None):
    if not blocked:
        return None
    blocked0 = np.array([b - 1 for b in blocked], dtype=np.int64)
    mask = np.ones(g.n_edges, dtype=np.uint8)
    mask[np.isin(g.edge_target, blocked0)] = 0
    return mask


def run_epoch(st: LearnerState, g: NetworkGraph, rewards: np.ndarray,
              blocked: frozenset[int] | None, goal: int, bit_generator,
              p: LearningParams) -> EpochTrace:
    """One episode from a uniformly random start, recording the visited
    trace. A state with no allowed actions aborts the episode (trapped);
    hitting the step cap truncates it."""
    g._check_node(goal)
    out = _KERNEL.run_epochs(
        st, g, rewards, _allowed_mask(g, blocked), goal - 1, 1,
        p.alpha, p.recovery_step, p.recovery_decay, p.greedy_prob,
        p.step_cap_factor * g.n_nodes, bit_generator, True)
    return EpochTrace(out["trace"], out["trapped_flag"], out["truncated_flag"])


def train_window(st: LearnerState, g: NetworkGraph, rewards: np.ndarray,
                 p: LearningParams, blocked: frozenset[int] | None,
                 goal: int, bit_generator) -> WindowStats:
    """Train one window: p.epochs episodes against a fixed shaped matrix
    and action filter. The step clock carries across windows."""
    g._check_node(goal)
    if rewards.shape != (g.n_edges,):
        raise LearningError("rewards must cover the edge set")
    out = _KERNEL.run_epochs(
        st, g, rewards, _allowed_mask(g, blocked), goal - 1, p.epochs,
        p.alpha, p.recovery_step, p.recovery_decay, p.greedy_prob,
        p.step_cap_factor * g.n_nodes, bit_generator, False)
    return WindowStats(p.epochs, out["steps"], out["trapped"], out["truncated"])
