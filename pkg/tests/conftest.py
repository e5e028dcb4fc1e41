import copy

import pytest

from dexhand import nominal_model_path
from dexhand.model import load_model, model_from_dict, serialize_model

DATA = nominal_model_path().parent


@pytest.fixture(scope="session")
def model():
    return load_model(nominal_model_path())


@pytest.fixture(scope="session")
def model_doc(model):
    return serialize_model(model)


@pytest.fixture()
def doc(model_doc):
    """Mutable copy of the nominal model document for invalid-model tests."""
    return copy.deepcopy(model_doc)


@pytest.fixture(scope="session")
def recording_path():
    return DATA / "sample_recording.jsonl"


@pytest.fixture(scope="session")
def reference_path():
    return DATA / "sample_reference.jsonl"


@pytest.fixture(scope="session")
def joints_csv_path():
    return DATA / "sample_recording_joints.csv"


def scaled_model(model_doc: dict, factor: float):
    """The same hand with every translation scaled by `factor`."""
    doc = copy.deepcopy(model_doc)
    doc["name"] = f"{doc['name']}-x{factor}"
    tr = doc["palm_frame"]["translation"]
    doc["palm_frame"]["translation"] = [factor * x for x in tr]
    for fdoc in doc["fingers"]:
        for jdoc in fdoc["joints"]:
            jdoc["offset"] = [factor * x for x in jdoc["offset"]]
        fdoc["tip_offset"] = [factor * x for x in fdoc["tip_offset"]]
    doc.pop("rest_keypoints", None)
    return model_from_dict(doc)


def separated_thumb_model(model_doc: dict, shift: float = 0.6):
    """Thumb based far away from the fingers: disjoint reachable sets."""
    doc = copy.deepcopy(model_doc)
    doc["name"] = "separated"
    base = doc["fingers"][0]["joints"][0]["offset"]
    doc["fingers"][0]["joints"][0]["offset"] = [base[0], base[1] + shift,
                                                base[2]]
    doc.pop("rest_keypoints", None)
    return model_from_dict(doc)


def limits_scaled_model(model_doc: dict, finger: int, factor: float):
    """One finger's joint ranges shrunk by `factor` about their centers."""
    doc = copy.deepcopy(model_doc)
    doc["name"] = f"limits-{finger}-x{factor}"
    for jdoc in doc["fingers"][finger]["joints"]:
        lo, hi = jdoc["limits"]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        jdoc["limits"] = [mid - factor * half, mid + factor * half]
    doc.pop("rest_keypoints", None)
    return model_from_dict(doc)
