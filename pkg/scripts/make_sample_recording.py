#!/usr/bin/env python3
"""Regenerate the packaged sample recording and its ground truth.

Equivalent to:

    dexhand synth --out src/dexhand/data/sample_recording.jsonl \
        --reference-out src/dexhand/data/sample_reference.jsonl \
        --joints-out src/dexhand/data/sample_recording_joints.csv \
        --frames 300 --seed 7
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dexhand import nominal_model_path  # noqa: E402
from dexhand.model import load_model  # noqa: E402
from dexhand.synthetic import generate_recording, joint_script_csv  # noqa: E402
from dexhand.trajectory import write_frames  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "dexhand" / "data"


def main():
    model = load_model(nominal_model_path())
    reference, frames, times, script, _ = generate_recording(
        model, frames=300, seed=7)
    write_frames(frames, DATA_DIR / "sample_recording.jsonl")
    write_frames([reference], DATA_DIR / "sample_reference.jsonl")
    with open(DATA_DIR / "sample_recording_joints.csv", "w",
              encoding="utf-8", newline="") as fh:
        fh.write(joint_script_csv(times, script))
    print(f"wrote sample recording ({len(frames)} frames) to {DATA_DIR}")


if __name__ == "__main__":
    main()
