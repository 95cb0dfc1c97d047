import numpy as np
import pytest

from bikeopt.cycle import (
    CycleError, DrivingCycle, grade_from_percent, load_cycle, make_cycle,
    make_constant_cycle, make_sprint_brake_cycle, make_urban_cycle, resample,
)


def test_make_cycle_recomputes_acceleration():
    t = np.arange(5.0)
    v = np.array([0.0, 2.0, 5.0, 5.0, 3.0])
    c = make_cycle(t, v)
    assert np.allclose(c.a, [2.0, 3.0, 0.0, -2.0, 0.0])
    assert c.dt == 1.0
    assert c.n == 5


def test_supplied_acceleration_consistency_check():
    t = np.arange(4.0)
    v = np.array([0.0, 1.0, 2.0, 3.0])
    make_cycle(t, v, a_supplied=[1.0, 1.0, 1.0, 0.0])  # consistent
    with pytest.raises(CycleError, match="disagrees"):
        make_cycle(t, v, a_supplied=[1.5, 1.0, 1.0, 0.0])


def test_validation_rejects_bad_grids():
    with pytest.raises(CycleError):
        make_cycle([0.0], [1.0])
    with pytest.raises(CycleError):
        DrivingCycle(t=np.array([0.0, 1.0, 1.5]), v=np.zeros(3),
                     a=np.zeros(3), theta=np.zeros(3))
    with pytest.raises(CycleError, match="negative speed"):
        make_cycle([0.0, 1.0], [1.0, -0.5])


def test_length_is_rectangle_rule():
    c = make_constant_cycle(v=20.0, duration=60.0)
    assert c.length_m == pytest.approx(20.0 * 60.0)
    # independent integration of a non-constant trace
    t = np.arange(10.0)
    v = np.linspace(0.0, 9.0, 10)
    c2 = make_cycle(t, v)
    assert c2.length_m == pytest.approx(float(np.sum(v) * 1.0))


def test_arrays_are_immutable():
    c = make_constant_cycle()
    with pytest.raises(ValueError):
        c.v[0] = 5.0


def test_load_cycle_roundtrip(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("t,v,theta\n0,0,0\n1,3,0.01\n2,6,0.01\n3,6,0\n")
    c = load_cycle(path)
    assert c.n == 4
    assert np.allclose(c.v, [0, 3, 6, 6])
    assert np.allclose(c.theta, [0, 0.01, 0.01, 0])
    assert np.allclose(c.a, [3, 3, 0, 0])


def test_load_cycle_speed_only(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("t,v\n0,1\n1,2\n")
    c = load_cycle(path)
    assert np.all(c.theta == 0.0)


def test_load_cycle_error_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,v\n0,1\n1,abc\n")
    with pytest.raises(CycleError, match="bad.csv:3"):
        load_cycle(path)


def test_resample_halves_step():
    c = make_urban_cycle()
    c2 = resample(c, 0.5)
    assert c2.dt == pytest.approx(0.5)
    # interpolated speeds bracket the original trace
    assert np.allclose(c2.v[::2], c.v)
    with pytest.raises(CycleError):
        resample(c, 10 * c.duration)


def test_grade_from_percent():
    assert grade_from_percent(0.0) == 0.0
    assert grade_from_percent(100.0) == pytest.approx(np.pi / 4)
    assert grade_from_percent(25.0) == pytest.approx(np.arctan(0.25))


def test_sprint_cycle_is_brake_heavy():
    c = make_sprint_brake_cycle()
    frac_brake = np.mean(c.a < -0.5)
    assert frac_brake > 0.15
    assert c.v.max() > 25.0
