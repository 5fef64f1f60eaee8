"""JSON-over-HTTP north-bound API for the virtual testbed.

One mutating run at a time (409 BUSY otherwise), mirroring the single
physical receiver.  Optimization runs execute on a worker thread and
stream their trace through GET /trace as server-sent events, one JSON
object per probe with a monotonically increasing `seq`.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import beamform, control
from .errors import RisError
from .optimizer import OptimizerSettings
from .testbed import Scenario, Testbed, scenario_from_json, trace_to_json

_HTTP_STATUS = {
    "BUSY": 409,
    "BAD_HEX": 400,
    "GEOMETRY": 400,
    "BAD_COMMAND": 400,
    "BAD_SCENARIO": 422,
    "BAD_PLACEMENT": 422,
    "BAD_SETTINGS": 422,
    "FREQ_OUT_OF_RANGE": 422,
}


class SteerRequest(BaseModel):
    theta_deg: float
    phi_deg: float = 0.0


class OptimizeRequest(BaseModel):
    passes: int = 3
    epsilon_db: float = 0.0
    seed: int = 0
    element_order: str = "row-major"


class ConfigRequest(BaseModel):
    config_hex: str


class SweepRequest(BaseModel):
    config_a_hex: str
    config_b_hex: Optional[str] = None  # default: all-OFF baseline


class _TraceFeed:
    """Live trace buffer shared between the run worker and SSE readers."""

    def __init__(self):
        self.cond = threading.Condition()
        self.entries: list = []
        self.running = False
        self.generation = 0

    def start(self):
        with self.cond:
            self.entries = []
            self.running = True
            self.generation += 1
            self.cond.notify_all()

    def push(self, entry):
        with self.cond:
            self.entries.append({
                "seq": len(self.entries),
                "iteration": entry.iteration,
                "power_db": entry.power_db,
                "accepted": entry.accepted,
            })
            self.cond.notify_all()

    def finish(self):
        with self.cond:
            self.running = False
            self.cond.notify_all()

    def snapshot(self, start: int) -> tuple:
        with self.cond:
            return list(self.entries[start:]), self.running


def create_app(scenario: Optional[Scenario] = None, console_dir=None) -> FastAPI:
    app = FastAPI(title="ristwin testbed", version="0.1.0")
    tb = Testbed(scenario or Scenario())
    feed = _TraceFeed()
    state = {"tb": tb, "worker": None}
    app.state.ris = state  # reachable for embedding and tests

    @app.exception_handler(RisError)
    async def ris_error_handler(_request: Request, exc: RisError):
        status = _HTTP_STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status, content=exc.to_json())

    def testbed_() -> Testbed:
        return state["tb"]

    # -- scenario

    @app.get("/scenario")
    def get_scenario():
        return testbed_().scenario.to_json()

    @app.put("/scenario")
    def put_scenario(doc: dict):
        tb = testbed_()
        if tb.run_status != "idle":
            raise RisError("BUSY", f"testbed is {tb.run_status}")
        try:
            new_scenario = scenario_from_json(doc)
            state["tb"] = Testbed(new_scenario)
        except RisError:
            raise
        except Exception as exc:
            raise RisError("BAD_SCENARIO", f"invalid scenario: {exc}") from exc
        return state["tb"].scenario.to_json()

    # -- configuration

    @app.post("/config")
    def post_config(req: ConfigRequest):
        tb = testbed_()
        if tb.run_status != "idle":
            raise RisError("BUSY", f"testbed is {tb.run_status}")
        geom = tb.scenario.geometry
        bits = control.config_from_hex(req.config_hex, geom.rows, geom.cols)
        report = tb.apply(bits)
        return {
            "blocks": {str(a): s for a, s in report.items()},
            "power_db": tb.current_power_db,
            "config_hex": control.config_to_hex(tb.assembled_config()),
        }

    @app.post("/steer")
    def post_steer(req: SteerRequest):
        tb = testbed_()
        if tb.run_status != "idle":
            raise RisError("BUSY", f"testbed is {tb.run_status}")
        if not 0.0 <= req.theta_deg < 90.0:
            raise RisError("BAD_SCENARIO", f"theta_deg must be in [0, 90), got {req.theta_deg}")
        sc = tb.scenario
        ideal = beamform.ideal_element_phase_deg(sc.geometry, sc.placement.tx_pos,
                                                 req.theta_deg, req.phi_deg % 360.0, sc.f_probe)
        bits = beamform.quantize_codebook(ideal, sc.model, sc.f_probe)
        report = tb.apply(bits)
        return {
            "blocks": {str(a): s for a, s in report.items()},
            "power_db": tb.current_power_db,
            "config_hex": control.config_to_hex(bits),
        }

    # -- runs

    @app.post("/optimize", status_code=202)
    def post_optimize(req: OptimizeRequest):
        tb = testbed_()
        settings = OptimizerSettings(passes=req.passes, epsilon_db=req.epsilon_db,
                                     element_order=req.element_order, seed=req.seed)
        tb.reserve("optimizing")
        feed.start()

        def worker():
            try:
                tb.run_optimization(settings, on_entry=feed.push, reserved=True)
            finally:
                feed.finish()

        thread = threading.Thread(target=worker, daemon=True)
        state["worker"] = thread
        thread.start()
        return {"status": "started", "passes": settings.passes, "seed": settings.seed}

    @app.get("/trace")
    def get_trace():
        tb = testbed_()

        def stream():
            sent = 0
            if not feed.running and not feed.entries and tb.trace.entries:
                # no live run: replay the last stored trace
                for i, row in enumerate(trace_to_json(tb.trace)):
                    yield f"id: {i}\ndata: {json.dumps({'seq': i, **row})}\n\n"
                yield "event: done\ndata: {}\n\n"
                return
            while True:
                rows, running = feed.snapshot(sent)
                for row in rows:
                    yield f"id: {row['seq']}\ndata: {json.dumps(row)}\n\n"
                    sent += 1
                if not running and not rows:
                    yield "event: done\ndata: {}\n\n"
                    return
                if not rows:
                    with feed.cond:
                        feed.cond.wait(timeout=0.2)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/sweep")
    def post_sweep(req: SweepRequest):
        tb = testbed_()
        geom = tb.scenario.geometry
        bits_a = control.config_from_hex(req.config_a_hex, geom.rows, geom.cols)
        bits_b = None
        if req.config_b_hex is not None:
            bits_b = control.config_from_hex(req.config_b_hex, geom.rows, geom.cols)
        rows = tb.run_sweep(bits_a, bits_b)
        return {"rows": [{"freq_hz": f, "gain_db_config": a, "gain_db_base": b}
                         for f, a, b in rows]}

    # -- read-only views

    @app.get("/pattern")
    def get_pattern(theta_min: float = -90.0, theta_max: float = 90.0,
                    n: int = 361, phi: float = 0.0):
        if n < 1 or theta_min >= theta_max:
            raise RisError("BAD_SCENARIO", "pattern grid must be non-empty and ordered")
        pattern = testbed_().pattern(theta_min, theta_max, n, phi)
        return {"phi_deg": phi,
                "rows": [{"theta_deg": t, "power_db": v} for t, v in pattern]}

    @app.get("/blocks")
    def get_blocks():
        tb = testbed_()
        return {
            "blocks": tb.chain.block_summary(),
            "run_status": tb.run_status,
            "power_db": tb.current_power_db,
            "config_hex": control.config_to_hex(tb.assembled_config()),
        }

    @app.get("/final")
    def get_final():
        tb = testbed_()
        if tb.final_config is None:
            raise HTTPException(status_code=404, detail="no optimization has completed")
        return {"config_hex": control.config_to_hex(tb.final_config),
                "improvement_db": tb.trace.improvement_db()}

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app


def serve(scenario: Optional[Scenario] = None, host: str = "127.0.0.1", port: int = 8000,
          console_dir=None):
    import uvicorn

    uvicorn.run(create_app(scenario, console_dir=console_dir), host=host, port=port,
                log_level="warning")
