import numpy as np
import pytest

from dexhand.retarget import HumanHandFrame, RetargetConfig, calibrate
from dexhand.synthetic import generate_recording
from dexhand.trajectory import (
    FrameParseError,
    frame_to_json,
    read_frames,
    replay,
    trajectory_to_csv,
    write_frames,
)


@pytest.fixture(scope="module")
def sample(model, recording_path, reference_path):
    stream = read_frames(recording_path)
    reference = read_frames(reference_path)[0]
    profile = calibrate(reference, model)
    return stream, profile


def test_shipped_recording_parses(sample):
    stream, _ = sample
    assert len(stream) == 300
    ts = [f.t for f in stream]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_round_trip_is_byte_stable(sample, recording_path, tmp_path):
    stream, _ = sample
    out = tmp_path / "copy.jsonl"
    write_frames(stream, out)
    assert out.read_bytes() == recording_path.read_bytes()


def test_empty_file_is_empty_stream(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert read_frames(path) == []


def test_swapped_timestamps_name_line_4(sample, tmp_path):
    stream, _ = sample
    frames = list(stream[:4])
    frames[2], frames[3] = (HumanHandFrame(frames[3].t, frames[2].keypoints),
                            HumanHandFrame(frames[2].t, frames[3].keypoints))
    path = tmp_path / "swapped.jsonl"
    write_frames(frames, path)
    with pytest.raises(FrameParseError, match="line 4"):
        read_frames(path)


def test_malformed_line_is_named(sample, tmp_path):
    stream, _ = sample
    path = tmp_path / "bad.jsonl"
    path.write_text(frame_to_json(stream[0]) + "\n{not json\n")
    with pytest.raises(FrameParseError, match="line 2"):
        read_frames(path)


def test_wrong_keypoint_count_is_named(tmp_path):
    path = tmp_path / "short.jsonl"
    path.write_text('{"t":0.0,"keypoints":[[0,0,0]]}\n')
    with pytest.raises(FrameParseError, match="line 1.*21"):
        read_frames(path)


def test_identical_frames_give_constant_trajectory(model, sample):
    # With no smoothness anchor the first solve lands on the keypoint
    # minimizer, which is then a fixed point for every later frame.
    stream, profile = sample
    frames = [HumanHandFrame(float(k), stream[50].keypoints)
              for k in range(6)]
    traj = replay(frames, profile, RetargetConfig(beta=0.0), model)
    q1 = traj.points[0].q
    for point in traj.points[1:]:
        assert np.allclose(point.q, q1, atol=1e-5)
    # settles geometrically onto the fixed point
    step1 = np.max(np.abs(traj.points[1].q - traj.points[0].q))
    step5 = np.max(np.abs(traj.points[5].q - traj.points[4].q))
    assert step5 < 1e-8 and step5 <= step1


def test_replay_recovers_joint_script(model, sample, joints_csv_path):
    stream, profile = sample
    traj = replay(stream, profile, RetargetConfig(beta=0.0), model)
    assert traj.rejected == 0
    truth = np.loadtxt(joints_csv_path, delimiter=",", skiprows=1)
    q_sol = np.array([p.q for p in traj.points])
    rms = float(np.sqrt(np.mean((q_sol - truth[:, 1:21]) ** 2)))
    assert rms < 0.02


def test_rejected_frame_is_skipped_equivalently(model, sample):
    stream, profile = sample
    frames = list(stream[:20])
    bad = np.asarray(frames[10].keypoints).copy()
    bad[5, 2] = np.inf
    with_bad = frames[:10] + [HumanHandFrame(frames[10].t, bad)] + frames[11:]
    without = frames[:10] + frames[11:]
    cfg = RetargetConfig()
    traj_bad = replay(with_bad, profile, cfg, model)
    traj_ok = replay(without, profile, cfg, model)
    assert traj_bad.rejected == 1 and traj_ok.rejected == 0
    assert len(traj_bad.points) == len(traj_ok.points)
    for a, b in zip(traj_bad.points, traj_ok.points):
        assert np.array_equal(a.q, b.q)
        assert np.array_equal(a.motors, b.motors)


def test_replay_deterministic_bytes(model, sample):
    stream, profile = sample
    csvs = {trajectory_to_csv(replay(stream[:40], profile, RetargetConfig(),
                                     model))
            for _ in range(2)}
    assert len(csvs) == 1


def test_thousand_frame_stream_within_budget(model):
    cfg = RetargetConfig()
    reference, frames, _, _, profile = generate_recording(model, frames=1000,
                                                          seed=11)
    traj = replay(frames, profile, cfg, model)
    assert len(traj.points) == 1000
    times = traj.solve_times_ms()
    assert float(np.sum(times)) < 1000 * cfg.time_budget_ms
    assert float(np.median(times)) < 10.0
