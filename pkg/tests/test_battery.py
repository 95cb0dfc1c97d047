import numpy as np
import pytest

from bikeopt import battery as bat
from bikeopt.battery import BatteryModel


def test_branch_anchors():
    # frozen hand evaluations at eta_inv=0.96, eta_b=0.92, P_aux=100
    d, c = bat.battery_power_branches(10000.0, 100.0, 0.96, 0.92)
    assert d == pytest.approx(11431.159420289856, rel=1e-12)
    assert c == pytest.approx(8924.0, rel=1e-12)
    d, c = bat.battery_power_branches(-10000.0, 100.0, 0.96, 0.92)
    assert d == pytest.approx(-11213.76811594203, rel=1e-12)
    assert c == pytest.approx(-8740.0, rel=1e-12)


def test_max_rule_selects_consistent_branch():
    # discharging: the discharge branch is larger
    assert bat.battery_power(10000.0, 100.0, 0.96, 0.92) == pytest.approx(
        11431.159420289856, rel=1e-12)
    # charging: the charge branch is larger (less energy reaches the pack)
    assert bat.battery_power(-10000.0, 100.0, 0.96, 0.92) == pytest.approx(
        -8740.0, rel=1e-12)


def test_branch_crossing_is_continuous():
    # frozen: branches intersect at P_ac = -67.038... W for these etas
    x = -67.03832590402806
    d, c = bat.battery_power_branches(x, 100.0, 0.96, 0.92)
    assert d == pytest.approx(c, abs=1e-9)
    eps = 1e-6
    lo = bat.battery_power(x - eps, 100.0, 0.96, 0.92)
    hi = bat.battery_power(x + eps, 100.0, 0.96, 0.92)
    assert abs(hi - lo) < 1e-4


def test_losses_always_positive_relative_to_ideal():
    # battery power never below the lossless chain P_ac + P_aux on
    # discharge, never above ... on charge magnitude
    for pac in (-50000.0, -5000.0, -300.0, 0.0, 300.0, 5000.0, 50000.0):
        pb = bat.battery_power(pac, 100.0, 0.96, 0.92)
        assert pb >= 0.96 * 0.92 * pac + 100.0 * 0.92 - 1e-9


def test_integrate_identity():
    rng = np.random.default_rng(0)
    P = rng.normal(0.0, 5000.0, size=400)
    E = bat.integrate(1e7, P, 1.0)
    assert E.shape == (401,)
    assert E[0] == 1e7
    # per-step forward-Euler identity
    assert np.allclose(np.diff(E), -P, rtol=0, atol=1e-6)
    # compensated total
    assert E[-1] == pytest.approx(1e7 - float(np.sum(P)), abs=1e-6)


def test_soc_window_and_usable_fraction(battery):
    lo, hi = battery.soc_window(0.5)
    assert lo == pytest.approx(0.1 * 3.6e7 * 0.5)
    assert hi == pytest.approx(0.9 * 3.6e7 * 0.5)
    assert battery.usable_fraction == pytest.approx(0.8)


def test_capacity_scaling_roundtrip():
    E = bat.capacity_from_scale(0.75, 3.6e7)
    assert bat.scale_from_capacity(E, 3.6e7) == pytest.approx(0.75, rel=1e-15)
    with pytest.raises(ValueError):
        bat.capacity_from_scale(-1.0, 3.6e7)


def test_model_validation():
    with pytest.raises(ValueError):
        BatteryModel(Ebar_max=-1.0, mbar_b=55.0, eta_b=0.92,
                     xi_min=0.1, xi_max=0.9)
    with pytest.raises(ValueError):
        BatteryModel(Ebar_max=3.6e7, mbar_b=55.0, eta_b=0.92,
                     xi_min=0.9, xi_max=0.1)
