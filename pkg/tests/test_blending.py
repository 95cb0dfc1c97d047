import numpy as np
import pytest

from bikeopt import blending as bl
from bikeopt.blending import WheelLiftError


def test_sigma_adherence_cancellation_anchor(params):
    """At X_total = m*g*c_r*cos(theta) the load-transfer term cancels and
    the split equals the static front weight share b/w_b = 0.5062."""
    m = 250.0
    X = m * params.g * params.c_r  # theta = 0
    sig = bl.sigma_adherence(params, m, X, 0.0)
    assert sig == pytest.approx(0.5062043795620438, abs=1e-4)


def test_sigma_adherence_hard_braking_anchor(params):
    # frozen hand evaluation: X_total=-2000 N, m=200 kg, flat road
    sig = bl.sigma_adherence(params, 200.0, -2000.0, 0.0)
    assert sig == pytest.approx(0.9388269046184066, abs=1e-3)


def test_sigma_adherence_monotone_in_demand(params):
    X = np.linspace(-3000.0, 3000.0, 13)
    sig = bl.sigma_adherence(params, 200.0, X, 0.0)
    assert np.all(np.diff(sig) < 0)  # more braking -> more front share


def test_clamped_variant(params):
    assert bl.sigma_adherence_clamped(params, 200.0, -20000.0, 0.0) == 1.0
    assert bl.sigma_adherence_clamped(params, 200.0, 20000.0, 0.0) == 0.0


def test_rear_adherence_sign_and_lift(params):
    m = 200.0
    mu = bl.rear_adherence(params, m, -500.0, -700.0, 0.0)
    assert mu < 0
    mu_t = bl.rear_adherence(params, m, 100.0, 400.0, 0.0)
    assert mu_t > 0
    with pytest.raises(WheelLiftError):
        bl.rear_adherence(params, 100.0, -20000.0, -20000.0, 0.0)


def test_rear_adherence_matches_hand_formula(params):
    m, X_f, X_r = 220.0, -400.0, -600.0
    denom = (m * params.g / params.w_b) * (params.w_b - params.b
                                           - params.h * params.c_r) \
        + (params.h / params.w_b) * (X_f + X_r)
    assert bl.rear_adherence(params, m, X_f, X_r, 0.0) == pytest.approx(
        X_r / denom, rel=1e-12)


def test_split_demand_balances(params):
    f, r = bl.split_demand(params, 200.0, 15.0, 0.5, 0.0, 0.3)
    total = f + r
    from bikeopt.vehicle import required_force
    assert total == pytest.approx(required_force(params, 200.0, 15.0, 0.5, 0.0))


def test_serial_brake_repartition():
    F_m, F_brk = bl.serial_brake_repartition(-500.0, 300.0)
    assert F_m == -300.0 and F_brk == -200.0
    F_m, F_brk = bl.serial_brake_repartition(-200.0, 300.0)
    assert F_m == -200.0 and F_brk == 0.0


def test_saturation_transfer():
    assert bl.saturation_transfer(500.0, 300.0) == 200.0
    assert bl.saturation_transfer(100.0, 300.0) == 0.0
    assert np.all(bl.saturation_transfer(np.array([-50.0, 400.0]), 300.0)
                  == np.array([0.0, 100.0]))
