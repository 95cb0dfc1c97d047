import math

import numpy as np
import pytest

from bikeopt.vehicle import (
    VehicleParams, required_force, required_power, road_load_accel_term,
    total_mass,
)


def test_mass_model_is_affine(params):
    mb = total_mass(params, 55.0, 20.0, 1.0, 1.0)
    assert mb.m_fixed == pytest.approx(155.0)
    assert mb.m_total == pytest.approx(155.0 + 55.0 + 20.0)
    # second differences of an affine map vanish identically
    for mbar_b, mbar_m in [(55.0, 20.0), (70.0, 25.0)]:
        f = lambda sb, sm: total_mass(params, mbar_b, mbar_m, sb, sm).m_total
        d2 = f(2.0, 1.0) - 2 * f(1.5, 1.0) + f(1.0, 1.0)
        assert d2 == 0.0
        d2m = f(1.0, 2.0) - 2 * f(1.0, 1.5) + f(1.0, 1.0)
        assert d2m == 0.0


def test_required_power_anchor(params):
    # frozen hand evaluation: m=200, v=20, a=0.5, theta=0.02
    P = required_power(params, 200.0, 20.0, 0.5, 0.02)
    assert P == pytest.approx(4973.229964970338, rel=1e-12)
    F = required_force(params, 200.0, 20.0, 0.5, 0.02)
    assert F == pytest.approx(248.6614982485169, rel=1e-12)


def test_force_is_power_over_speed(params):
    v = np.array([0.5, 5.0, 20.0, 60.0])
    P = required_power(params, 250.0, v, 0.3, 0.01)
    F = required_force(params, 250.0, v, 0.3, 0.01)
    assert np.allclose(F, P / v, rtol=1e-13)


def test_force_finite_at_standstill(params):
    F = required_force(params, 250.0, 0.0, 1.5, 0.0)
    assert math.isfinite(F)
    assert F == pytest.approx(250.0 * (params.c_r * params.g + 1.5))


def test_grade_sign(params):
    up = required_power(params, 200.0, 10.0, 0.0, 0.05)
    dn = required_power(params, 200.0, 10.0, 0.0, -0.05)
    assert up > dn


def test_road_load_term_vectorizes(params):
    a = np.array([0.0, 1.0])
    th = np.array([0.0, 0.1])
    out = road_load_accel_term(params, a, th)
    assert out.shape == (2,)


def test_params_validation():
    good = dict(m_r=80.0, m_0=75.0, r_wf=0.321, r_wr=0.318, h=0.573,
                b=0.6935, w_b=1.37, c_r=0.015, CdA=0.32, mu_brk_peak_r=-0.8)
    VehicleParams(**good)
    with pytest.raises(ValueError):
        VehicleParams(**{**good, "mu_brk_peak_r": 0.8})
    with pytest.raises(ValueError):
        VehicleParams(**{**good, "b": 2.0})
    with pytest.raises(ValueError):
        VehicleParams(**{**good, "eta_gb": 1.2})
    with pytest.raises(ValueError):
        VehicleParams(**{**good, "xi_min": 0.9, "xi_max": 0.1})
