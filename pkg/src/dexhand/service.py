"""Session-oriented streaming teleoperation service.

Wire protocol: newline-delimited JSON messages over a bidirectional TCP
socket (shell-testable with nc); `serve --ui` additionally bridges the
same protocol over WebSocket for browser clients.  Message schemas are
documented field-by-field in docs/protocol.md.

Sessions own the per-stream retargeting state.  Each session has exactly
one solver worker, so solves are strictly serialized; if frames arrive
faster than solves complete, the pending slot keeps only the latest frame
and older ones are counted as dropped (teleoperation tracks the present,
not the backlog).  Sessions are resumable: a `hello` carrying a known
session id reattaches to its calibration and solver state, so a client
reconnecting mid-stream observes the same subsequent solutions.
"""

from __future__ import annotations

import itertools
import json
import socketserver
import sys
import threading

import numpy as np

from .kinematics import forward_keypoints
from .model import NUM_JOINTS, HandModel, serialize_model
from .retarget import (
    CalibrationError,
    FrameRejected,
    HumanHandFrame,
    NAMED_KEY_SETS,
    RetargetConfig,
    RetargetState,
    calibrate,
    correct_frame,
    solve_frame,
)

PROTOCOL_VERSION = 1


def _json_line(doc: dict) -> bytes:
    return (json.dumps(doc, separators=(",", ":")) + "\n").encode("utf-8")


def _error(reason: str) -> dict:
    return {"type": "error", "reason": reason}


class Session:
    """One teleoperation stream: calibration, solver state, statistics."""

    def __init__(self, sid: str, model: HandModel, config: RetargetConfig):
        self.sid = sid
        self.model = model
        self.lock = threading.Lock()
        self.config = config
        self.profile = None
        self.state = RetargetState.initial(model)
        self.frames = 0
        self.solved = 0
        self.rejected = 0
        self.dropped = 0
        self.solve_ms_total = 0.0
        self._pending: HumanHandFrame | None = None
        self._send = None  # current connection's reply writer, or None
        self._wake = threading.Condition(self.lock)
        self._closing = False
        self._worker = threading.Thread(
            target=self._run, name=f"solver-{sid}", daemon=True
        )
        self._worker.start()

    # -- connection attachment -------------------------------------------

    def attach(self, send) -> bool:
        with self.lock:
            if self._send is not None:
                return False
            self._send = send
            return True

    def detach(self) -> None:
        with self.lock:
            self._send = None

    def close(self) -> None:
        with self._wake:
            self._closing = True
            self._wake.notify()
        self._worker.join(timeout=5.0)

    # -- message handling (reader thread) --------------------------------

    def submit_frame(self, frame: HumanHandFrame) -> dict | None:
        """Queue a frame for the worker; returns an immediate error reply
        or None when queued."""
        with self._wake:
            if self.profile is None:
                return _error("not calibrated")
            self.frames += 1
            if self._pending is not None:
                self.dropped += 1
            self._pending = frame
            self._wake.notify()
        return None

    def set_calibration(self, frame: HumanHandFrame) -> dict:
        profile = calibrate(frame, self.model)  # raises CalibrationError
        with self.lock:
            self.profile = profile
            self.state = RetargetState.initial(self.model)
        return {
            "type": "calibrated",
            "ratios": [float(x) for x in profile.ratios.ravel()],
        }

    def set_config(self, beta, keys) -> dict:
        with self.lock:
            cfg = self.config
            new_beta = cfg.beta if beta is None else float(beta)
            new_keys = cfg.keys
            if keys is not None:
                if keys not in NAMED_KEY_SETS:
                    raise ValueError(
                        f"unknown key set {keys!r}; expected one of "
                        f"{sorted(NAMED_KEY_SETS)}"
                    )
                new_keys = NAMED_KEY_SETS[keys]()
            self.config = RetargetConfig(
                keys=new_keys, beta=new_beta,
                max_iterations=cfg.max_iterations, tol=cfg.tol,
                time_budget_ms=cfg.time_budget_ms,
            )
            return {"type": "ack", "beta": self.config.beta,
                    "keys": keys or "unchanged"}

    def stats(self) -> dict:
        with self.lock:
            mean = self.solve_ms_total / self.solved if self.solved else 0.0
            return {
                "type": "stats", "session": self.sid, "frames": self.frames,
                "solved": self.solved, "rejected": self.rejected,
                "dropped": self.dropped, "mean_solve_ms": mean,
            }

    # -- solver worker -----------------------------------------------------

    def _run(self) -> None:
        while True:
            with self._wake:
                while self._pending is None and not self._closing:
                    self._wake.wait()
                if self._closing:
                    return
                frame = self._pending
                self._pending = None
                profile = self.profile
                config = self.config
            try:
                if not frame.is_finite():
                    raise FrameRejected("non-finite keypoint")
                v = correct_frame(frame, profile)
                q, motors, diag = solve_frame(v, self.state, config, self.model)
            except FrameRejected as exc:
                with self.lock:
                    self.rejected += 1
                self._reply(_error(f"frame rejected: {exc}"))
                continue
            except Exception as exc:  # never let a bug mute the session
                with self.lock:
                    self.rejected += 1
                self._reply(_error(f"internal solve failure: {exc!r}"))
                continue
            keypoints = forward_keypoints(q, self.model)
            with self.lock:
                self.solved += 1
                self.solve_ms_total += diag.solve_ms
            self._reply({
                "type": "solution",
                "t": frame.t,
                "q": [float(x) for x in q],
                "motors": [float(x) for x in motors],
                "objective": diag.objective,
                "residual_rms": diag.residual_rms,
                "iterations": diag.iterations,
                "solve_ms": diag.solve_ms,
                "degraded": diag.status == "budget",
                "keypoints": [[float(x) for x in row] for row in keypoints],
            })

    def _reply(self, doc: dict) -> None:
        with self.lock:
            send = self._send
        if send is not None:
            try:
                send(doc)
            except (OSError, ValueError):
                pass  # client went away mid-write; session state persists


def _parse_frame_message(doc: dict) -> HumanHandFrame:
    kp = doc.get("keypoints")
    arr = np.asarray(kp, dtype=float) if kp is not None else None
    if arr is None or arr.shape != (21, 3):
        raise ValueError("keypoints must be 21 rows of 3 numbers")
    return HumanHandFrame(float(doc.get("t", 0.0)), arr)


class TeleopServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def handle_error(self, request, client_address):
        exc = sys.exc_info()[1]
        if isinstance(exc, (ConnectionResetError, BrokenPipeError)):
            return  # client dropped mid-message; the session persists
        super().handle_error(request, client_address)

    def __init__(self, address, model: HandModel,
                 config: RetargetConfig | None = None):
        super().__init__(address, _Handler)
        self.model = model
        self.base_config = config or RetargetConfig()
        self.sessions: dict[str, Session] = {}
        self.sessions_lock = threading.Lock()
        self._ids = itertools.count(1)

    def new_session(self) -> Session:
        with self.sessions_lock:
            sid = f"s{next(self._ids)}"
            session = Session(sid, self.model, self.base_config)
            self.sessions[sid] = session
            return session

    def get_session(self, sid: str) -> Session | None:
        with self.sessions_lock:
            return self.sessions.get(sid)

    def close_sessions(self) -> None:
        with self.sessions_lock:
            sessions = list(self.sessions.values())
        for session in sessions:
            session.close()

    def final_stats(self) -> list[dict]:
        with self.sessions_lock:
            return [s.stats() for s in self.sessions.values()]


class _Handler(socketserver.StreamRequestHandler):
    server: TeleopServer

    def handle(self) -> None:
        session: Session | None = None
        write_lock = threading.Lock()

        def send(doc: dict) -> None:
            payload = _json_line(doc)
            with write_lock:
                # wfile is unbuffered (wbufsize=0): one write, no flush,
                # which narrows the teardown race against finish().
                self.wfile.write(payload)

        try:
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    if not isinstance(doc, dict):
                        raise ValueError("message must be an object")
                except (json.JSONDecodeError, ValueError) as exc:
                    send(_error(f"malformed message: {exc}"))
                    continue

                mtype = doc.get("type")
                try:
                    if mtype == "hello":
                        session = self._hello(doc, session, send)
                    elif session is None:
                        send(_error("say hello first"))
                    elif mtype == "calibrate":
                        frame = _parse_frame_message(doc)
                        send(session.set_calibration(frame))
                    elif mtype == "frame":
                        frame = _parse_frame_message(doc)
                        err = session.submit_frame(frame)
                        if err is not None:
                            send(err)
                    elif mtype == "config":
                        send(session.set_config(doc.get("beta"),
                                                doc.get("keys")))
                    elif mtype == "stats":
                        send(session.stats())
                    else:
                        send(_error(f"unknown message type {mtype!r}"))
                except (ValueError, CalibrationError) as exc:
                    send(_error(str(exc)))
        finally:
            if session is not None:
                session.detach()

    def _hello(self, doc: dict, current: Session | None, send) -> Session:
        requested = doc.get("session")
        if requested is not None:
            session = self.server.get_session(str(requested))
            if session is None:
                send(_error(f"unknown session {requested!r}"))
                return current
            if session is not current and not session.attach(send):
                send(_error(f"session {requested!r} is attached elsewhere"))
                return current
            if current is not None and session is not current:
                current.detach()
        else:
            if current is not None:
                current.detach()
            session = self.server.new_session()
            session.attach(send)
        model = self.server.model
        rest = forward_keypoints(np.zeros(NUM_JOINTS), model)
        send({
            "type": "model",
            "session": session.sid,
            "schema_version": PROTOCOL_VERSION,
            "model": serialize_model(model),
            "rest_keypoints": [[float(x) for x in row] for row in rest],
            "calibrated": session.profile is not None,
        })
        return session


def serve_forever(model: HandModel, host: str, port: int,
                  config: RetargetConfig | None = None,
                  ready_event: threading.Event | None = None,
                  server_box: list | None = None,
                  ui_dir: str | None = None, ui_port: int = 8080) -> None:
    """Run the TCP service until interrupted; prints final stats."""
    with TeleopServer((host, port), model, config) as server:
        if server_box is not None:
            server_box.append(server)
        if ready_event is not None:
            ready_event.set()
        addr = server.server_address
        print(f"teleop service listening on {addr[0]}:{addr[1]}",
              file=sys.stderr, flush=True)
        if ui_dir is not None:
            from .uibridge import start_static_server, start_ws_bridge

            start_static_server(ui_dir, host, ui_port)
            start_ws_bridge(host, ui_port + 1, addr[0], addr[1])
            print(f"operator console on http://{host}:{ui_port} "
                  f"(websocket bridge on :{ui_port + 1})",
                  file=sys.stderr, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.close_sessions()
            for stats in server.final_stats():
                print(json.dumps(stats), file=sys.stderr)
