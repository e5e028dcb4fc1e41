from fractions import Fraction as F

import numpy as np
import pytest

from dexhand.transmission import (
    NONTHUMB_COUPLING,
    THUMB_COUPLING,
    coupling_matrix,
    dip_coupling_delta,
    joints_to_motors,
    motors_to_joints,
)

NONTHUMB_EXPECTED = [
    [F(-1), F(0), F(0), F(0)],
    [F(-1), F(-10, 3), F(0), F(0)],
    [F(-10, 3), F(-50, 33), F(10, 9), F(0)],
    [F(-13, 12), F(-155, 132), F(85, 36), F(5, 4)],
]

THUMB_EXPECTED = [
    [F(10, 11), F(0), F(0), F(0)],
    [F(0), F(-10, 11), F(0), F(0)],
    [F(0), F(10, 11), F(5, 4), F(0)],
    [F(0), F(10, 11), F(5, 2), F(-5, 4)],
]


def test_coupling_tables_exact():
    assert [list(r) for r in NONTHUMB_COUPLING] == NONTHUMB_EXPECTED
    assert [list(r) for r in THUMB_COUPLING] == THUMB_EXPECTED


def test_lower_triangular_invertible():
    for kind in ("thumb", "non-thumb"):
        cm = coupling_matrix(kind)
        mat = cm.as_float
        assert np.array_equal(np.tril(mat), mat)
        assert np.all(np.diag(mat) != 0)
        assert np.allclose(cm.inverse_as_float @ mat, np.eye(4), atol=1e-15)


def test_column_structure(model):
    # Motor k drives only the joints its gear train reaches: M4 only DIP,
    # M3 only PIP+DIP, M2 everything but abduction.
    mat = coupling_matrix("non-thumb").as_float
    assert np.all(mat[0:2, 2] == 0) and np.all(mat[0:3, 3] == 0)
    assert mat[0, 1] == 0
    for col, first_row in ((0, 0), (1, 1), (2, 2), (3, 3)):
        assert mat[first_row, col] != 0


def test_nonthumb_m1_row(model):
    m = np.zeros(20)
    m[4] = 0.1  # index M1
    q = motors_to_joints(m, model)
    expected = np.array([-0.1, -0.1, -1.0 / 3.0, -13.0 / 120.0])
    assert np.allclose(q[4:8], expected, atol=1e-12, rtol=0)
    assert np.all(q[[0, 1, 2, 3]] == 0) and np.all(q[8:] == 0)


def test_nonthumb_unit_rows_match_table(model):
    for motor in range(4):
        m = np.zeros(20)
        m[4 + motor] = 1.0  # index finger
        q = motors_to_joints(m, model)
        expected = [float(NONTHUMB_EXPECTED[j][motor]) for j in range(4)]
        assert np.allclose(q[4:8], expected, atol=1e-12, rtol=0)


def test_thumb_common_mode_row(model):
    m = np.zeros(20)
    m[0] = m[1] = 0.2
    q = motors_to_joints(m, model)
    assert q[0] == 0.0
    assert np.allclose(q[1:4], [-2.0 / 11.0, 2.0 / 11.0, 2.0 / 11.0],
                       atol=1e-12, rtol=0)


def test_thumb_differential_purity_exact(model):
    for theta in (0.3, 0.7, 1.1, -0.45):
        m = np.zeros(20)
        m[0], m[1] = theta, -theta
        q = motors_to_joints(m, model)
        assert q[1] == 0.0 and q[2] == 0.0 and q[3] == 0.0
        assert q[0] == pytest.approx(10.0 / 11.0 * theta, abs=1e-12)


def test_thumb_common_mode_purity_exact(model):
    for theta in (0.3, -0.9):
        m = np.zeros(20)
        m[0] = m[1] = theta
        q = motors_to_joints(m, model)
        assert q[0] == 0.0


def test_thumb_table_recovery(model):
    # theta1 = 1.1 from M = (1.1, -1.1): TM-1 = 1.0, and the inverse
    # recovers the motor pair.
    m = np.zeros(20)
    m[0], m[1] = 1.1, -1.1
    q = motors_to_joints(m, model)
    assert q[0] == pytest.approx(1.0, abs=1e-12)
    back = joints_to_motors(q, model)
    assert np.allclose(back, m, atol=1e-12, rtol=0)


def test_zero_maps_to_zero(model):
    assert np.all(motors_to_joints(np.zeros(20), model) == 0)
    assert np.all(joints_to_motors(np.zeros(20), model) == 0)


def test_round_trip_random(model):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(2000):
        m = rng.normal(0.0, 2.0, 20)
        back = joints_to_motors(motors_to_joints(m, model), model)
        worst = max(worst, float(np.max(np.abs(back - m))))
    assert worst < 1e-12


def test_linearity(model):
    rng = np.random.default_rng(4)
    for _ in range(100):
        m1 = rng.normal(0.0, 1.0, 20)
        m2 = rng.normal(0.0, 1.0, 20)
        a, b = rng.normal(0.0, 2.0, 2)
        lhs = motors_to_joints(a * m1 + b * m2, model)
        rhs = a * motors_to_joints(m1, model) + b * motors_to_joints(m2, model)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_inverse_against_linear_solve_oracle(model):
    # Independent route: solve the 4x4 systems numerically per finger.
    thumb_fwd = coupling_matrix("thumb").as_float @ np.array(
        [[0.5, -0.5, 0, 0], [0.5, 0.5, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
    nonthumb_fwd = coupling_matrix("non-thumb").as_float
    rng = np.random.default_rng(5)
    for _ in range(1000):
        q = rng.normal(0.0, 1.5, 20)
        m = joints_to_motors(q, model)
        expect = np.empty(20)
        expect[0:4] = np.linalg.solve(thumb_fwd, q[0:4])
        for f in range(1, 5):
            expect[4 * f:4 * f + 4] = np.linalg.solve(nonthumb_fwd,
                                                      q[4 * f:4 * f + 4])
        assert np.allclose(m, expect, atol=1e-10)


def test_dip_coupling_delta():
    assert dip_coupling_delta(0.0) == 0.0
    # unit PIP motor input: DIP/PIP motion ratio (85/36)/(10/9) = 17/8
    assert dip_coupling_delta(1.0) == pytest.approx(17.0 / 8.0, abs=1e-15)
    rng = np.random.default_rng(6)
    for _ in range(200):
        theta = float(rng.normal(0.0, 1.0))
        assert dip_coupling_delta(2.0 * theta) == 2.0 * dip_coupling_delta(theta)
    with pytest.raises(ValueError):
        dip_coupling_delta(1.0, (F(1), F(0)))
