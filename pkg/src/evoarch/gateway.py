"""Network gateway: one workspace exposed to the evolution console.

All mutating requests funnel through one lock, so commands apply in arrival
order; reads serve from the current state.  The event stream delivers trace
events, constraint violations, binding changes and eval completions in step
order from any cursor.
"""

from __future__ import annotations

import asyncio
import threading

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .hypercode import HyperText, NotQuiescent, ReflectError, UnknownIdentifier
from .runtime import (CompositionError, QuiescenceTimeout, RuntimeFault,
                      UnificationTypeError, UnresolvedPathError, trace_hash)
from .styles import StyleRegistryError
from .syntax import ParseError, parse_path
from .values import AbstractionVal, ProjectionError, value_type
from .workspace import EvalError, Workspace


def _event_json(e):
    return {"type": "trace", "step": e.step, "kind": e.kind,
            "subjects": list(e.subjects), "payload": e.payload}


class GatewaySession:
    """Unified, append-only event log over one workspace."""

    def __init__(self, workspace):
        self.workspace = workspace
        self.lock = threading.Lock()
        self.log = []
        self._trace_seen = 0
        self._run_counter = 0

    def sync_trace(self):
        events = self.workspace.runtime.events
        while self._trace_seen < len(events):
            self.log.append(_event_json(events[self._trace_seen]))
            self._trace_seen += 1

    def next_run_token(self):
        self._run_counter += 1
        return f"run-{self._run_counter}"

    def behaviour_by_handle(self, handle):
        for b in self.workspace.runtime.behaviours:
            if b.handle == handle:
                return b
        for c in self.workspace.runtime.composites:
            if c.handle == handle:
                return c
        return None


def _error_response(status, phase, message, position=None):
    return JSONResponse(status_code=status,
                        content={"phase": phase, "message": message,
                                 "position": position})


def _view_json(session, view):
    b = view.get("bhvr")
    return {
        "label": view.get("label"),
        "behaviourId": session.workspace.store.intern(b),
        "handle": b.handle,
        "status": b.status,
        "connections": _connections_json(b),
        "exports": sorted(getattr(b, "exports", {})),
    }


def _connections_json(b):
    return [{"name": n, "channel": c.root().id}
            for n, c in getattr(b, "connections", [])]


def create_app(workspace=None, heartbeat_seconds=15.0, console_dir=None):
    ws = workspace or Workspace()
    session = GatewaySession(ws)
    app = FastAPI(title="evoarch gateway")
    app.state.session = session
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def guarded(fn):
        try:
            with session.lock:
                result = fn()
                session.sync_trace()
                return result
        except EvalError as e:
            session.sync_trace()
            return _error_response(400, e.phase, e.message, e.position)
        except ReflectError as e:
            return _error_response(400, e.phase, str(e), e.position)
        except (UnknownIdentifier, StyleRegistryError, KeyError) as e:
            return _error_response(404, "runtime", str(e))
        except (NotQuiescent, QuiescenceTimeout) as e:
            return _error_response(409, "runtime", str(e))
        except (ParseError, UnresolvedPathError, UnificationTypeError,
                CompositionError, ProjectionError, RuntimeFault) as e:
            return _error_response(400, "runtime", str(e))

    @app.get("/v1/bindings")
    def bindings():
        out = []
        for name, vid in ws.bindings.items():
            out.append({"name": name, "id": vid,
                        "type": value_type(ws.store.get(vid)).render()})
        return out

    @app.get("/v1/behaviours")
    def behaviours():
        out = []
        for b in ws.runtime.behaviours:
            out.append({"handle": b.handle, "label": b.label, "status": b.status,
                        "detached": b.is_suspended(), "styleTag": b.style_tag,
                        "connections": _connections_json(b)})
        for c in ws.runtime.composites:
            if not c.dissolved:
                out.append({"handle": c.handle, "label": None, "status": "COMPOSITE",
                            "styleTag": None,
                            "parts": [p.handle for p in c.parts]})
        return out

    @app.post("/v1/eval")
    def eval_route(body: dict):
        def run():
            doc = body.get("hypertext")
            if doc is None:
                raise EvalError("parse", "missing 'hypertext' body field")
            src = HyperText.from_json(doc) if isinstance(doc, dict) \
                else HyperText.from_carrier(str(doc))
            token = session.next_run_token()
            before = dict(ws.bindings)
            result = ws.eval_source(src.source)
            session.sync_trace()
            for name in result.new_bindings:
                session.log.append({"type": "binding", "name": name,
                                    "id": ws.bindings[name]})
            session.log.append({"type": "eval-complete", "run": token,
                                "status": result.status})
            return {"run": token, "status": result.status,
                    "rendered": result.rendered_value,
                    "bindings": {n: {"id": b[0], "type": b[1], "rendered": b[2]}
                                 for n, b in result.new_bindings.items()},
                    "removed": sorted(set(before) - set(ws.bindings))}
        return guarded(run)

    @app.post("/v1/behaviours/{handle}/decompose")
    def decompose_route(handle: str, body: dict = None):
        def run():
            target = session.behaviour_by_handle(handle)
            if target is None:
                raise UnknownIdentifier(f"no behaviour with handle {handle}")
            timeout = (body or {}).get("timeoutSteps", ws.step_budget)
            views = ws.runtime.decompose(target, timeout)
            out = []
            for v in views.items:
                out.append(_view_json(session, {"label": v.get("label"),
                                                "bhvr": v.get("bhvr")}))
            return out
        return guarded(run)

    @app.get("/v1/values/{vid}/reify")
    def reify_route(vid: int):
        def run():
            return ws.hypercode.reify(vid).to_json()
        return guarded(run)

    @app.post("/v1/reflect")
    def reflect_route(body: dict):
        def run():
            doc = body.get("hypertext")
            if doc is None:
                raise ReflectError("missing 'hypertext' body field", phase="parse")
            ht = HyperText.from_json(doc) if isinstance(doc, dict) \
                else HyperText.from_carrier(str(doc))
            vid = ws.hypercode.reflect(ht, ws.type_env(),
                                       {n: s.extends
                                        for n, s in ws.styles.styles.items()})
            ws.runtime.run(ws.step_budget)
            ws._check_styles_after_evolution()
            return {"id": vid}
        return guarded(run)

    @app.post("/v1/compose")
    def compose_route(body: dict):
        def run():
            labelled = []
            for part in body.get("parts", []):
                v = ws.store.get(int(part["id"]))
                if isinstance(v, AbstractionVal):
                    v = ws.runtime.instantiate(v, [])
                labelled.append((part.get("label"), v))
            unifications = [(parse_path(a), parse_path(b))
                            for a, b in body.get("unifications", [])]
            comp = ws.runtime.compose(labelled, unifications)
            ws.runtime.run(ws.step_budget)
            ws._check_styles_after_evolution()
            return {"handle": comp.handle,
                    "id": ws.store.intern(comp)}
        return guarded(run)

    @app.get("/v1/styles/{name}/check")
    def style_check_route(name: str, handle: str):
        def run():
            target = session.behaviour_by_handle(handle)
            if target is None:
                raise UnknownIdentifier(f"no behaviour with handle {handle}")
            report = ws.check_style(name, target)
            return {"style": report.style, "ok": report.ok,
                    "violations": [{"formula": v.formula, "witness": v.witness}
                                   for v in report.violations]}
        return guarded(run)

    @app.get("/v1/trace")
    def trace_route(start: int = 0):
        with session.lock:
            session.sync_trace()
            return [item for item in session.log[start:]]

    @app.get("/v1/trace/hash")
    def trace_hash_route():
        with session.lock:
            session.sync_trace()
            return {"hash": trace_hash(ws.runtime.events),
                    "events": len(ws.runtime.events)}

    @app.get("/v1/snapshot/topology")
    def topology_route(handle: str):
        def run():
            from . import styles as ST
            target = session.behaviour_by_handle(handle)
            if target is None:
                raise UnknownIdentifier(f"no behaviour with handle {handle}")
            snap = ST.snapshot(ws.runtime, target)
            return {"components": [{"handle": h, "tags": sorted(t)}
                                   for h, t in snap.components],
                    "connectors": [{"channel": c, "tags": sorted(t)}
                                   for c, t in snap.connectors],
                    "attachments": sorted([h, c] for h, c in snap.attachments)}
        return guarded(run)

    @app.websocket("/v1/events")
    async def events_route(socket: WebSocket, cursor: int = 0):
        await socket.accept()
        with session.lock:
            session.sync_trace()
            total = len(session.log)
        if cursor < 0 or cursor > total:
            await socket.send_json({"type": "resync", "cursor": 0})
            cursor = 0
        if cursor == total:
            await socket.send_json({"type": "heartbeat", "cursor": cursor})
        idle = 0.0
        try:
            while True:
                with session.lock:
                    session.sync_trace()
                    fresh = session.log[cursor:]
                if fresh:
                    for item in fresh:
                        await socket.send_json(item)
                    cursor += len(fresh)
                    idle = 0.0
                else:
                    await asyncio.sleep(0.05)
                    idle += 0.05
                    if idle >= heartbeat_seconds:
                        await socket.send_json({"type": "heartbeat", "cursor": cursor})
                        idle = 0.0
        except (WebSocketDisconnect, RuntimeError):
            return

    if console_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app


def serve(workspace, host="127.0.0.1", port=8417, console_dir=None):
    import uvicorn
    uvicorn.run(create_app(workspace, console_dir=console_dir),
                host=host, port=port, log_level="warning")
