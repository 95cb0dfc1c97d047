import numpy as np
import pytest

from bikeopt.metrics import UndefinedMetricError, ledger


def test_ledger_hand_example():
    P_v = np.array([1000.0, -500.0, 2000.0, 0.0])
    P_b = np.array([1500.0, -300.0, 2600.0, 100.0])
    led = ledger(P_v, P_b, dt=1.0)
    assert led.E_v_tr == pytest.approx(3000.0)
    assert led.E_v_brk == pytest.approx(-500.0)
    assert led.E_b_out == pytest.approx(4200.0)
    assert led.E_b_in == pytest.approx(-300.0)
    assert led.zeta == pytest.approx(100.0 * 300.0 / 4200.0)
    assert led.eta_avg == pytest.approx(100.0 * 2500.0 / 3900.0)


def test_metric_bounds_random():
    rng = np.random.default_rng(3)
    for _ in range(50):
        P_v = rng.normal(2000.0, 1500.0, 100)
        # battery power consistent in sign but lossier
        P_b = np.where(P_v >= 0, P_v * 1.3 + 100.0, P_v * 0.7 + 100.0)
        led = ledger(P_v, P_b, 1.0)
        assert 0.0 <= led.zeta <= 100.0
        assert 0.0 < led.eta_avg <= 100.0


def test_zeta_zero_without_regen():
    led = ledger(np.array([1000.0, 500.0]), np.array([1400.0, 800.0]), 1.0)
    assert led.zeta == 0.0


def test_undefined_without_discharge():
    with pytest.raises(UndefinedMetricError):
        ledger(np.array([-100.0]), np.array([-50.0]), 1.0)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        ledger(np.zeros(3), np.zeros(4), 1.0)
