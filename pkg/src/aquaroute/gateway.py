"""Operator session service: create and step windowed sessions over HTTP,
stage live interventions, and stream typed events (server-sent events).

Each session has one logical writer; training runs outside the session
lock so snapshot and stream reads never block on it. Every event is
appended to a per-session NDJSON log, which makes a live run replayable
as a scripted one.
"""
from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, ConfigDict

from .learning import LearningError
from .operator import InterventionCommand, InterventionError
from .simulate import (ConfigError, ScenarioConfig, ScenarioError,
                       WindowEngine, parse_config, result_to_dict)
from .topology import TopologyError


class SessionCreateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict
    mode: str = "manual-step"  # manual-step | auto-step
    cadence_s: float = 0.5     # auto-step only


class InterventionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    node: int
    label: str


def _error(status: int, code: str, reason: str) -> JSONResponse:
    return JSONResponse({"code": code, "reason": reason}, status_code=status)


class Session:
    def __init__(self, sid: str, engine: WindowEngine, mode: str,
                 cadence_s: float, log_path: Path):
        self.id = sid
        self.engine = engine
        self.mode = mode
        self.cadence_s = cadence_s
        self.status = "idle"
        self.staged: list[InterventionCommand] = []
        self.events: list[dict] = []
        self.lock = threading.Lock()
        self.new_event = threading.Condition(self.lock)
        self.training_window: int | None = None
        self.log_path = log_path
        log_path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, kind: str, data: dict) -> None:
        # callers hold self.lock
        event = {"index": len(self.events), "type": kind, "data": data}
        self.events.append(event)
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
        self.new_event.notify_all()

    def set_status(self, status: str) -> None:
        self.status = status
        self.emit("status_change", {"status": status,
                                    "window_index": self.engine.window_index})

    def snapshot(self) -> dict:
        engine = self.engine
        last = engine.last_result
        on_path = set(last.path.nodes) if last and last.path else set()
        leaky = last.leaky if last else frozenset()
        isolation = last.isolation if last else frozenset()
        overlay = engine.overlay
        nodes = []
        for node in engine.graph.nodes:
            label = ("dangerous" if node.id in overlay.dangerous
                     else "safe" if node.id in overlay.safe else None)
            nodes.append({"id": node.id, "name": node.name,
                          "x": node.x, "y": node.y,
                          "leaky": node.id in leaky, "label": label,
                          "on_path": node.id in on_path,
                          "isolated": node.id in isolation})
        return {
            "session": self.id,
            "status": self.status,
            "window_index": engine.window_index,
            "max_windows": engine.max_windows,
            "variant": engine.cfg.variant,
            "source": engine.cfg.source,
            "dest": engine.cfg.dest,
            "nodes": nodes,
            "edges": [{"from": i, "to": j} for i, j in engine.graph.edges()],
            "path": list(last.path.nodes) if last and last.path else [],
            "isolation": sorted(isolation),
            "predicted_leaks": sorted(last.predicted_leaks) if last else [],
            "last_result": result_to_dict(last) if last else None,
        }


class SessionRegistry:
    def __init__(self, sessions_dir: Path):
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.sessions_dir = sessions_dir

    def create(self, req: SessionCreateRequest) -> Session:
        cfg = parse_config(req.config)
        if cfg.operator.mode not in ("live", "scripted"):
            raise ConfigError("operator.mode: sessions need 'live' or 'scripted'")
        if req.mode not in ("manual-step", "auto-step"):
            raise ConfigError(f"mode: unknown session mode {req.mode!r}")
        engine = WindowEngine(cfg)
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, engine, req.mode, req.cadence_s,
                          self.sessions_dir / sid / "events.ndjson")
        with session.lock:
            session.emit("session_created", {
                "session": sid, "config": cfg.model_dump(mode="json"),
                "mode": req.mode})
            session.emit("snapshot", session.snapshot())
        with self.lock:
            self.sessions[sid] = session
        if req.mode == "auto-step":
            threading.Thread(target=_auto_step, args=(session,),
                             daemon=True).start()
        return session

    def get(self, sid: str) -> Optional[Session]:
        with self.lock:
            return self.sessions.get(sid)


def step_session(session: Session):
    """Train one window; returns (result dict, None) or (None, error)."""
    with session.lock:
        if session.status == "training":
            return None, _error(409, "busy", "a window is already training")
        if session.status == "finished":
            return None, _error(410, "finished", "session has finished")
        staged = session.staged
        session.staged = []
        k = session.engine.window_index + 1
        session.training_window = k
        session.set_status("training")
        for cmd in staged:
            session.emit("intervention_applied",
                         {"node": cmd.node, "label": cmd.label,
                          "effective_window": k})
    try:
        # status "training" excludes other writers; run unlocked so reads
        # (snapshot, streams) stay responsive
        result = session.engine.next_window(staged)
    except ScenarioError as err:
        with session.lock:
            session.training_window = None
            session.set_status("idle")
        return None, _error(500, "window_failed", str(err))
    with session.lock:
        session.training_window = None
        payload = result_to_dict(result)
        session.emit("window_result", payload)
        session.emit("snapshot", session.snapshot())
        if session.engine.finished:
            session.set_status("finished")
        else:
            session.set_status("awaiting-operator"
                               if session.mode == "manual-step" else "idle")
    return payload, None


def _auto_step(session: Session) -> None:
    while True:
        time.sleep(session.cadence_s)
        with session.lock:
            if session.status == "finished":
                return
            busy = session.status == "training"
        if not busy:
            step_session(session)


def _sse_frame(event: dict) -> str:
    return (f"id: {event['index']}\n"
            f"event: {event['type']}\n"
            f"data: {json.dumps(event['data'], sort_keys=True)}\n\n")


def create_app(sessions_dir: str | Path | None = None) -> FastAPI:
    registry = SessionRegistry(Path(sessions_dir or "sessions"))
    app = FastAPI(title="aquaroute gateway")
    app.state.registry = registry

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionCreateRequest):
        try:
            session = registry.create(req)
        except (ConfigError, ScenarioError, TopologyError, LearningError,
                FileNotFoundError, ValueError) as err:
            return _error(422, "invalid_config", str(err))
        return {"id": session.id, "status": session.status,
                "max_windows": session.engine.max_windows}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = registry.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid}")
        with session.lock:
            return {"id": session.id, "status": session.status,
                    "window_index": session.engine.window_index,
                    "max_windows": session.engine.max_windows,
                    "variant": session.engine.cfg.variant,
                    "mode": session.mode}

    @app.post("/sessions/{sid}/step")
    def step(sid: str):
        session = registry.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid}")
        payload, err = step_session(session)
        if err is not None:
            return err
        return payload

    @app.post("/sessions/{sid}/interventions", status_code=202)
    def submit_intervention(sid: str, req: InterventionRequest):
        session = registry.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid}")
        engine = session.engine
        if engine.cfg.operator.mode != "live":
            return _error(409, "scripted_session",
                          "session operator is scripted; live commands disabled")
        cmd = InterventionCommand(req.node, req.label)
        with session.lock:
            if session.status == "finished":
                return _error(410, "finished", "session has finished")
            from .operator import apply_live_intervention
            overlay = engine.overlay
            try:
                for queued in [*session.staged, cmd]:
                    overlay = apply_live_intervention(
                        overlay, queued, g=engine.graph,
                        source=engine.cfg.source, dest=engine.cfg.dest,
                        allow_safe=engine.allow_safe)
            except InterventionError as err:
                code = ("endpoint_protected" if "endpoint" in str(err)
                        else "label_conflict" if "opposite label" in str(err)
                        else "bad_intervention")
                return _error(422, code, str(err))
            session.staged.append(cmd)
            if session.status == "training":
                effective = (session.training_window or engine.window_index) + 1
            else:
                effective = engine.window_index + 1
        return {"staged": True, "node": req.node, "label": req.label,
                "effective_window": effective}

    @app.get("/sessions/{sid}/snapshot")
    def snapshot(sid: str):
        session = registry.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid}")
        with session.lock:
            return session.snapshot()

    @app.get("/sessions/{sid}/events")
    def events(sid: str, request: Request, after: int = -1, follow: bool = True):
        session = registry.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid}")

        def stream():
            cursor = after + 1
            while True:
                with session.lock:
                    batch = session.events[cursor:]
                    cursor += len(batch)
                    done = session.status == "finished"
                    if not batch and follow and not done:
                        session.new_event.wait(timeout=0.2)
                        continue
                for event in batch:
                    yield _sse_frame(event)
                if not follow or done:
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


# -- event-log replay ---------------------------------------------------------

def read_event_log(log_path: str | Path) -> list[dict]:
    events = []
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def event_log_to_scenario(log_path: str | Path):
    """Reconstruct (config, intervention script) from a session event log,
    so a live run can be replayed as a scripted one."""
    events = read_event_log(log_path)
    created = next((e for e in events if e["type"] == "session_created"), None)
    if created is None:
        raise ScenarioError(f"event log {log_path} has no session_created event")
    config = dict(created["data"]["config"])
    script: list[dict] = []
    for event in events:
        if event["type"] == "intervention_applied":
            data = event["data"]
            entry = {"window": data["effective_window"], "mark": [], "unmark": []}
            if data["label"] == "clear":
                entry["unmark"].append(data["node"])
            else:
                entry["mark"].append({"node": data["node"], "label": data["label"]})
            script.append(entry)
    recorded = [e["data"] for e in events if e["type"] == "window_result"]
    return config, script, recorded


def replay_event_log(log_path: str | Path, outdir: str | Path) -> bool:
    """Re-run a logged live session as a scripted one; True when the
    replayed windows match the recorded ones exactly."""
    from .simulate import run_scenario, write_report

    config, script, recorded = event_log_to_scenario(log_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    script_path = outdir / "replay_script.json"
    with open(script_path, "w", encoding="utf-8") as fh:
        json.dump(script, fh, indent=2)
    config["operator"] = {**config.get("operator", {}), "mode": "scripted",
                          "script_file": str(script_path)}
    cfg = parse_config(config)
    report = run_scenario(cfg)
    write_report(report, outdir)
    replayed = [result_to_dict(w) for w in report.windows]
    canon = lambda ws: [json.dumps(w, sort_keys=True) for w in ws]  # noqa: E731
    return canon(replayed) == canon(recorded)
