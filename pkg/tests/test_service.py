import json
import socket
import threading
import time

import numpy as np
import pytest

from dexhand.kinematics import forward_keypoints
from dexhand.model import NUM_JOINTS
from dexhand.retarget import HumanHandFrame, RetargetConfig, calibrate
from dexhand.service import TeleopServer
from dexhand.trajectory import (
    CSV_HEADER,
    TrajectoryPoint,
    read_frames,
    replay,
    trajectory_row,
    trajectory_to_csv,
)


@pytest.fixture(scope="module")
def server(model):
    srv = TeleopServer(("127.0.0.1", 0), model)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.close_sessions()


class Client:
    def __init__(self, server):
        self.sock = socket.create_connection(
            ("127.0.0.1", server.server_address[1]))
        self.rfile = self.sock.makefile("r")

    def send(self, doc):
        self.sock.sendall((json.dumps(doc) + "\n").encode("utf-8"))

    def recv(self):
        line = self.rfile.readline()
        assert line, "server closed connection"
        return json.loads(line)

    def rpc(self, doc):
        self.send(doc)
        return self.recv()

    def hello(self, session=None):
        doc = {"type": "hello"}
        if session is not None:
            doc["session"] = session
        return self.rpc(doc)

    def close(self):
        self.rfile.close()
        self.sock.close()


def kp_list(arr):
    return [[float(x) for x in row] for row in np.asarray(arr)]


def frame_msg(frame):
    return {"type": "frame", "t": frame.t, "keypoints": kp_list(frame.keypoints)}


@pytest.fixture()
def client(server):
    c = Client(server)
    yield c
    c.close()


def test_hello_serves_model_and_rest_keypoints(model, client):
    reply = client.hello()
    assert reply["type"] == "model"
    assert reply["schema_version"] == 1
    assert not reply["calibrated"]
    assert len(reply["model"]["fingers"]) == 5
    rest = np.asarray(reply["rest_keypoints"])
    assert np.array_equal(rest, forward_keypoints(np.zeros(NUM_JOINTS), model))


def test_frame_before_calibrate_is_protocol_error(model, client):
    client.hello()
    reply = client.rpc({"type": "frame", "t": 0.0,
                        "keypoints": [[0.0, 0.0, 0.0]] * 21})
    assert reply == {"type": "error", "reason": "not calibrated"}
    # session survives the protocol error
    assert client.rpc({"type": "stats"})["type"] == "stats"


def test_self_calibration_recovers_rest_pose(model, client):
    client.hello()
    rest = forward_keypoints(np.zeros(NUM_JOINTS), model)
    reply = client.rpc({"type": "calibrate", "keypoints": kp_list(rest)})
    assert reply["type"] == "calibrated"
    assert np.allclose(reply["ratios"], 1.0)
    client.rpc({"type": "config", "beta": 0.0})
    sol = client.rpc({"type": "frame", "t": 0.0, "keypoints": kp_list(rest)})
    assert sol["type"] == "solution"
    assert np.max(np.abs(np.asarray(sol["q"]))) < 1e-6
    assert not sol["degraded"]
    # server-side FK keypoints ride along for client cross-checks
    assert np.asarray(sol["keypoints"]).shape == (21, 3)


def test_malformed_and_unknown_messages(client):
    client.hello()
    client.sock.sendall(b"{nope\n")
    assert client.recv()["type"] == "error"
    reply = client.rpc({"type": "launch-missiles"})
    assert "unknown message type" in reply["reason"]
    bad = client.rpc({"type": "frame", "t": 0, "keypoints": [[1, 2], [3]]})
    assert bad["type"] == "error"


def test_nonfinite_frame_rejected_session_preserved(model, client, reference_path):
    client.hello()
    ref = read_frames(reference_path)[0]
    client.rpc({"type": "calibrate", "keypoints": kp_list(ref.keypoints)})
    kp = np.asarray(ref.keypoints).copy()
    kp[3, 0] = float("nan")
    reply = client.rpc({"type": "frame", "t": 0.0, "keypoints": kp_list(kp)})
    assert reply["type"] == "error" and "rejected" in reply["reason"]
    stats = client.rpc({"type": "stats"})
    assert stats["rejected"] == 1


def test_online_equals_offline_bit_for_bit(model, client, recording_path,
                                           reference_path):
    stream = read_frames(recording_path)
    ref = read_frames(reference_path)[0]
    client.hello()
    client.rpc({"type": "calibrate", "keypoints": kp_list(ref.keypoints)})
    rows = []
    for frame in stream:
        sol = client.rpc(frame_msg(frame))
        assert sol["type"] == "solution"
        rows.append(trajectory_row(TrajectoryPoint(
            sol["t"], np.asarray(sol["q"]), np.asarray(sol["motors"]),
            sol["objective"], sol["solve_ms"], "")))
    online_csv = "\n".join([CSV_HEADER] + rows) + "\n"
    offline_csv = trajectory_to_csv(
        replay(stream, calibrate(ref, model), RetargetConfig(), model))
    assert online_csv == offline_csv


def test_backpressure_drops_stale_frames(model, server, recording_path,
                                         reference_path):
    c = Client(server)
    try:
        c.hello()
        ref = read_frames(reference_path)[0]
        c.rpc({"type": "calibrate", "keypoints": kp_list(ref.keypoints)})
        frames = read_frames(recording_path)[:80]
        for frame in frames:  # flood without reading replies
            c.send(frame_msg(frame))
        deadline = time.time() + 10.0
        while time.time() < deadline:
            c.send({"type": "stats"})
            reply = c.recv()
            if reply["type"] == "stats" and \
                    reply["solved"] + reply["dropped"] == reply["frames"] == 80:
                break
            time.sleep(0.05)
        assert reply["frames"] == 80
        assert reply["dropped"] > 0
        assert reply["solved"] + reply["dropped"] == reply["frames"]
    finally:
        c.close()


def test_session_isolation(model, server, recording_path, reference_path):
    stream = read_frames(recording_path)[:15]
    ref = read_frames(reference_path)[0]
    rest = forward_keypoints(np.zeros(NUM_JOINTS), model)
    a, b = Client(server), Client(server)
    try:
        ha, hb = a.hello(), b.hello()
        assert ha["session"] != hb["session"]
        a.rpc({"type": "calibrate", "keypoints": kp_list(ref.keypoints)})
        b.rpc({"type": "calibrate", "keypoints": kp_list(rest)})
        b.rpc({"type": "config", "beta": 1.5})
        sols_a, sols_b = [], []
        for frame in stream:  # interleaved traffic
            a.send(frame_msg(frame))
            b.send(frame_msg(frame))
            sols_a.append(a.recv())
            sols_b.append(b.recv())
        offline_a = replay(stream, calibrate(ref, model), RetargetConfig(),
                           model)
        offline_b = replay(stream, calibrate(HumanHandFrame(0.0, rest), model),
                           RetargetConfig(beta=1.5), model)
        for sol, point in zip(sols_a, offline_a.points):
            assert np.array_equal(np.asarray(sol["q"]), point.q)
        for sol, point in zip(sols_b, offline_b.points):
            assert np.array_equal(np.asarray(sol["q"]), point.q)
    finally:
        a.close()
        b.close()


def test_session_resume_continues_stream(model, server, recording_path,
                                         reference_path):
    stream = read_frames(recording_path)[:20]
    ref = read_frames(reference_path)[0]
    first = Client(server)
    first.hello()
    sid = None
    try:
        hello = first.rpc({"type": "hello"})  # re-hello: fresh session
        sid = hello["session"]
        first.rpc({"type": "calibrate", "keypoints": kp_list(ref.keypoints)})
        sols = [first.rpc(frame_msg(f)) for f in stream[:10]]
    finally:
        first.close()

    second = Client(server)
    try:
        deadline = time.time() + 5.0
        while True:  # the old handler needs a moment to detach
            reply = second.hello(session=sid)
            if reply["type"] == "model":
                break
            assert time.time() < deadline, reply
            time.sleep(0.05)
        assert reply["calibrated"]
        sols += [second.rpc(frame_msg(f)) for f in stream[10:]]
    finally:
        second.close()

    offline = replay(stream, calibrate(ref, model), RetargetConfig(), model)
    assert len(sols) == len(offline.points)
    for sol, point in zip(sols, offline.points):
        assert np.array_equal(np.asarray(sol["q"]), point.q)


def test_attach_conflict_rejected(server):
    a, b = Client(server), Client(server)
    try:
        sid = a.hello()["session"]
        reply = b.hello(session=sid)
        assert reply["type"] == "error" and "attached" in reply["reason"]
        unknown = b.hello(session="s999999")
        assert unknown["type"] == "error" and "unknown session" in unknown["reason"]
    finally:
        a.close()
        b.close()


def test_config_rejects_bad_values(client):
    client.hello()
    assert client.rpc({"type": "config", "beta": -1.0})["type"] == "error"
    assert client.rpc({"type": "config", "keys": "elbows"})["type"] == "error"
    ack = client.rpc({"type": "config", "beta": 0.25, "keys": "fingertips"})
    assert ack == {"type": "ack", "beta": 0.25, "keys": "fingertips"}


def test_websocket_bridge_relays_protocol(model, server):
    from websockets.sync.client import connect

    from dexhand.uibridge import start_ws_bridge

    ws_port = _free_port()
    start_ws_bridge("127.0.0.1", ws_port, "127.0.0.1",
                    server.server_address[1])
    deadline = time.time() + 5.0
    while True:
        try:
            ws = connect(f"ws://127.0.0.1:{ws_port}")
            break
        except OSError:
            assert time.time() < deadline
            time.sleep(0.05)
    with ws:
        ws.send(json.dumps({"type": "hello"}))
        reply = json.loads(ws.recv())
        assert reply["type"] == "model"
        rest = forward_keypoints(np.zeros(NUM_JOINTS), model)
        ws.send(json.dumps({"type": "calibrate", "keypoints": kp_list(rest)}))
        assert json.loads(ws.recv())["type"] == "calibrated"
        ws.send(json.dumps({"type": "frame", "t": 0.0,
                            "keypoints": kp_list(rest)}))
        sol = json.loads(ws.recv())
        assert sol["type"] == "solution"


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]
