"""Predictive, resilient Q-routing for water distribution networks with a
human operator in the loop.

The engine learns per-edge transfer costs on a directed neighborhood
graph from windowed leak histories, predicts how routes recover, and lets
an operator reshape costs or prune actions between windows. See the CLI
(``aquaroute --help``) and the session gateway (``aquaroute serve``).
"""

__version__ = "0.1.0"

from .faults import (FaultScores, FaultWeights, LeakEvent, RewardMatrix,
                     WindowBatch, build_reward_matrix, chunk_events,
                     update_fault_scores)
from .learning import (LearnerState, LearningParams, Transition, init_learner,
                       kernel_name, q_update, run_epoch, train_window)
from .operator import (InterventionCommand, InterventionOverlay,
                       OperatorScriptConfig, ShapingParams,
                       apply_live_intervention, prune_actions,
                       scripted_operator_step, shape_rewards)
from .planner import (Path, WindowResult, default_threshold, extract_path,
                      isolation_set, predict_leaks)
from .simulate import (RunReport, ScenarioConfig, WindowEngine,
                       generate_synthetic_leaks, load_config, qopt_delta,
                       run_scenario)
from .topology import (NetworkGraph, Node, grid_graph, load_topology,
                       read_topology, synthetic_city_topology,
                       validate_route_endpoints)

__all__ = [name for name in dir() if not name.startswith("_")]
