"""HTTP gateway between a running episode and the operator console.

A single writer (the episode thread) advances the world cycle by cycle and
publishes immutable snapshots; any number of readers poll the REST
endpoints or subscribe to the server-sent snapshot stream. Operator
commands are applied strictly between cycles under the episode lock, so a
mid-cycle mutation is impossible.

Endpoints (all JSON, versioned payloads):

    GET  /api/v1/status
    GET  /api/v1/snapshot                 current state + plan + queue
    GET  /api/v1/aircraft/{cs}/plan       per-aircraft plan inspector
    GET  /api/v1/tsr                      logged safety records
    GET  /api/v1/traces                   logged decision traces
    GET  /api/v1/timeline                 frame count / time range
    GET  /api/v1/timeline/{index}         one verified-trajectory frame
    GET  /api/v1/log                      full event log records
    GET  /api/v1/stream                   server-sent snapshot events
    POST /api/v1/clearances/{id}/approve
    POST /api/v1/clearances/{id}/reject
    POST /api/v1/clearances/{id}/modify   {"action": {...}}
    POST /api/v1/control                  {"op": "pause|resume|step|seek|inject", ...}
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles

from .events import emit_metrics
from .plans import PlanError
from .runner import Episode, EpisodeResult
from .scenario import Scenario, ScenarioError
from .serialize import encode_airspace_geometry, encode_flight_plan

API_PREFIX = "/api/v1"
PAYLOAD_VERSION = 1


class EpisodeDriver:
    """Owns the episode thread; commands apply between cycles via the lock."""

    def __init__(self, scenario: Scenario, auto_approve: bool = False,
                 pace_sim_per_wall: float = 0.0, start_paused: bool = False):
        self.episode = Episode(scenario, auto_approve=auto_approve,
                               keep_frames=True)
        self.lock = threading.RLock()
        self.pace = pace_sim_per_wall  # 0 = run flat out
        self._paused = start_paused
        self._step_budget = 0
        self._stop = False
        self.result: Optional[EpisodeResult] = None
        self._snapshot_version = 0
        self._seek_cursor: Optional[int] = None
        self.thread = threading.Thread(target=self._run, daemon=True)

    # -- lifecycle --------------------------------------------------------

    def start(self) -> "EpisodeDriver":
        self.thread.start()
        return self

    def _run(self) -> None:
        while not self._stop:
            with self.lock:
                if self.episode.done:
                    break
                can_step = not self._paused or self._step_budget > 0
                if can_step:
                    self.episode.run_cycle()
                    self._snapshot_version += 1
                    if self._step_budget > 0:
                        self._step_budget -= 1
                        if self._step_budget == 0:
                            self._paused = True
            if not can_step:
                time.sleep(0.02)
            elif self.pace > 0:
                time.sleep(self.episode.scenario.cadence_s / self.pace)
        with self.lock:
            if self.result is None:
                self.result = self.episode.finish()
                self._snapshot_version += 1

    def stop(self) -> None:
        self._stop = True
        if self.thread.is_alive():
            self.thread.join(timeout=5)

    def run_to_completion(self) -> EpisodeResult:
        self.thread.join()
        return self.result

    # -- state ------------------------------------------------------------

    def status(self) -> dict:
        with self.lock:
            if self.episode.done:
                state = "done"
            elif self._paused and self._step_budget == 0:
                state = "paused"
            else:
                state = "running"
            return {
                "version": PAYLOAD_VERSION,
                "state": state,
                "t_sim": self.episode.time_s,
                "cycle": self.episode.cycle_idx,
                "aircraft": len(self.episode.truth.states),
                "snapshot_version": self._snapshot_version,
                "auto_approve": self.episode.auto_approve,
                "scenario": self.episode.scenario.name,
            }

    def snapshot(self) -> dict:
        with self.lock:
            snap = self.episode.snapshot()
            snap["version"] = PAYLOAD_VERSION
            snap["snapshot_version"] = self._snapshot_version
            snap["state"] = self.status()["state"]
            return snap

    def aircraft_plan(self, callsign: str) -> dict:
        with self.lock:
            if not self.episode.plan.has(callsign):
                raise KeyError(callsign)
            fp = self.episode.plan.plan_for(callsign)
            doc = encode_flight_plan(fp)
            statuses = {}
            for pa in fp.all_actions():
                timing = self.episode.truth.timings.get(pa.id)
                if timing is None:
                    statuses[pa.id] = "Pending"
                elif timing.completed_s is not None:
                    statuses[pa.id] = "Complete"
                else:
                    statuses[pa.id] = "Active"
            doc["statuses"] = statuses
            doc["version"] = PAYLOAD_VERSION
            return doc

    def frames(self) -> list[dict]:
        with self.lock:
            return list(self.episode.frames)

    def frame(self, index: int) -> dict:
        with self.lock:
            frames = self.episode.frames
            if index < 0 or index >= len(frames):
                raise IndexError(index)
            return frames[index]

    def log_records(self, record_type: Optional[str] = None) -> list[dict]:
        with self.lock:
            if record_type is None:
                return list(self.episode.log.records)
            return self.episode.log.of_type(record_type)

    # -- commands ---------------------------------------------------------

    def console(self, command: dict) -> dict:
        with self.lock:
            if self.episode.done:
                raise PlanError("episode has terminated; command refused")
            self.episode.apply_console(command)
            self._snapshot_version += 1
            return {"ok": True, "t_sim": self.episode.time_s}

    def control(self, op: str, **kwargs) -> dict:
        with self.lock:
            if op == "pause":
                self._paused = True
                self._step_budget = 0
            elif op == "resume":
                self._paused = False
                self._step_budget = 0
            elif op == "step":
                n = int(kwargs.get("n", 1))
                if n < 1:
                    raise PlanError("step count must be >= 1")
                self._paused = True
                self._step_budget = n
            elif op == "seek":
                if not (self._paused or self.episode.done):
                    raise PlanError("seek is only valid when paused or replaying")
                t = float(kwargs["t"])
                frames = self.episode.frames
                if not frames or not (frames[0]["t_sim"] <= t <= frames[-1]["t_sim"]):
                    raise IndexError(f"seek time {t} outside recorded timeline")
                cursor = max(
                    k for k, f in enumerate(frames) if f["t_sim"] <= t
                )
                self._seek_cursor = cursor
                return {"ok": True, "cursor": cursor,
                        "t_sim": frames[cursor]["t_sim"]}
            elif op == "inject":
                self.episode.apply_console(
                    {"op": "inject", "aircraft": kwargs["aircraft"]}
                )
            else:
                raise PlanError(f"unknown control op {op!r}")
            self._snapshot_version += 1
            return {"ok": True, "state": self.status()["state"]}


def build_app(driver: EpisodeDriver, frontend_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="skylanes gateway", version="1.0")

    @app.get(API_PREFIX + "/status")
    def get_status():
        return driver.status()

    @app.get(API_PREFIX + "/snapshot")
    def get_snapshot():
        return driver.snapshot()

    @app.get(API_PREFIX + "/airspace")
    def get_airspace():
        doc = encode_airspace_geometry(driver.episode.airspace)
        doc["version"] = PAYLOAD_VERSION
        return doc

    @app.get(API_PREFIX + "/aircraft/{callsign}/plan")
    def get_plan(callsign: str):
        try:
            return driver.aircraft_plan(callsign)
        except KeyError:
            raise HTTPException(404, f"no flight plan for {callsign!r}")

    @app.get(API_PREFIX + "/tsr")
    def get_tsr():
        return {"version": PAYLOAD_VERSION, "records": driver.log_records("tsr")}

    @app.get(API_PREFIX + "/traces")
    def get_traces():
        return {"version": PAYLOAD_VERSION,
                "records": driver.log_records("resolution")}

    @app.get(API_PREFIX + "/timeline")
    def get_timeline():
        frames = driver.frames()
        return {
            "version": PAYLOAD_VERSION,
            "count": len(frames),
            "t_first": frames[0]["t_sim"] if frames else None,
            "t_last": frames[-1]["t_sim"] if frames else None,
        }

    @app.get(API_PREFIX + "/timeline/{index}")
    def get_frame(index: int):
        try:
            return driver.frame(index)
        except IndexError:
            raise HTTPException(416, f"frame {index} outside recorded timeline")

    @app.get(API_PREFIX + "/log")
    def get_log():
        return {"version": PAYLOAD_VERSION, "records": driver.log_records()}

    @app.get(API_PREFIX + "/metrics")
    def get_metrics():
        metrics, report = emit_metrics(driver.log_records())
        return {"version": PAYLOAD_VERSION, "metrics": metrics.to_json(),
                "report": report}

    @app.get(API_PREFIX + "/stream")
    async def stream():
        async def gen():
            last = -1
            while True:
                status = driver.status()
                if status["snapshot_version"] != last:
                    last = status["snapshot_version"]
                    payload = json.dumps(driver.snapshot())
                    yield f"event: snapshot\ndata: {payload}\n\n"
                    if status["state"] == "done":
                        return
                await asyncio.sleep(0.1)

        return StreamingResponse(gen(), media_type="text/event-stream")

    def _console(command: dict) -> dict:
        try:
            return driver.console(command)
        except (PlanError, ScenarioError) as exc:
            raise HTTPException(409, str(exc))
        except KeyError as exc:
            raise HTTPException(404, str(exc))

    @app.post(API_PREFIX + "/clearances/{clearance_id}/approve")
    def approve(clearance_id: str):
        return _console({"op": "approve", "clearance_id": clearance_id})

    @app.post(API_PREFIX + "/clearances/{clearance_id}/reject")
    def reject(clearance_id: str):
        return _console({"op": "reject", "clearance_id": clearance_id})

    @app.post(API_PREFIX + "/clearances/{clearance_id}/modify")
    def modify(clearance_id: str, body: dict):
        return _console({"op": "modify", "clearance_id": clearance_id,
                         "action": body.get("action", {})})

    @app.post(API_PREFIX + "/control")
    def control(body: dict):
        op = body.pop("op", None)
        try:
            return driver.control(op, **body)
        except (PlanError, ScenarioError) as exc:
            raise HTTPException(400, str(exc))
        except IndexError as exc:
            raise HTTPException(416, str(exc))

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/console", StaticFiles(directory=frontend_dir, html=True),
                  name="console")

    return app


def default_frontend_dir() -> Optional[str]:
    """Locate the built operator console, if present in the repo."""
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "frontend" / "dist"
        if candidate.is_dir():
            return str(candidate)
    return None


def serve(scenario: Scenario, port: int = 8000, auto_approve: bool = False,
          pace_sim_per_wall: float = 10.0) -> None:
    """Run a gateway-attached episode and serve it until it completes."""
    import uvicorn

    driver = EpisodeDriver(scenario, auto_approve=auto_approve,
                           pace_sim_per_wall=pace_sim_per_wall).start()
    app = build_app(driver, frontend_dir=default_frontend_dir())
    print(f"gateway on http://127.0.0.1:{port}{API_PREFIX}  "
          f"(console at /console when built)")
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    finally:
        driver.stop()
