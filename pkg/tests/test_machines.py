import numpy as np
import pytest

from bikeopt import machines as mach
from bikeopt.machines import (
    IdentifiabilityError, LossCoefficients, MotorModelError,
    fit_loss_map, loss_map_grid, synthetic_front_motor, synthetic_rear_motor,
)


def test_rear_speed_anchor():
    # frozen hand evaluation: 20 m/s at gamma=5 on a 0.318 m wheel
    assert mach.rear_speed(20.0, 5.0, 0.318) == pytest.approx(
        314.4654088050314, rel=1e-12)


def test_gamma_upper_bound_anchor(rear):
    # 1150 rad/s * 0.318 m / 69.444 m/s
    assert mach.gamma_upper_bound(rear, 0.318, 69.444) == pytest.approx(
        5.2661137031277, rel=1e-12)


def test_rear_mech_power_branches():
    eta = 0.96
    assert mach.rear_mech_power(100.0, 10.0, eta) == pytest.approx(1000.0 / eta)
    assert mach.rear_mech_power(-100.0, 10.0, eta) == pytest.approx(-960.0)
    assert mach.rear_mech_power(0.0, 10.0, eta) == 0.0


def test_rear_motor_torque_finite_at_standstill():
    T = mach.rear_motor_torque(500.0, 5.0, 0.318, 0.96)
    assert T == pytest.approx(500.0 / 0.96 * 0.318 / 5.0)
    assert np.isfinite(mach.rear_motor_torque(-500.0, 5.0, 0.318, 0.96))


def test_copper_prefactor_identity(rear):
    # frozen: l_co=0.10, l_ew=0.025 -> prefactor(2) = 1.8
    assert rear.copper_prefactor(2.0) == pytest.approx(1.8, rel=1e-12)
    assert rear.copper_prefactor(1.0) == pytest.approx(1.0, rel=1e-15)


def test_copper_scale_identity(rear):
    """Copper loss written via the prefactor equals the axial scaling law
    Q(S)*(a+b*w^2)*T^2 with Q = prefactor/S^2, to machine precision."""
    c = rear.coeffs
    for S in (0.3, 1.0, 2.7):
        for w, T in [(100.0, 40.0), (900.0, 150.0)]:
            _, _, p_cu = mach.rear_losses(rear, S, w, T)
            L = rear.l_co + rear.l_ew
            Q = (S * rear.l_co + rear.l_ew) / (L * S ** 2)
            expect = Q * (c.a_Cu + c.b_Cu * w ** 2) * T ** 2
            assert p_cu == pytest.approx(expect, rel=1e-12)


def test_rear_losses_scale_linearly_in_iron_and_mech(rear):
    p_fe1, p_me1, _ = mach.rear_losses(rear, 1.0, 500.0, 0.0)
    p_fe2, p_me2, _ = mach.rear_losses(rear, 2.0, 500.0, 0.0)
    assert p_fe2 == pytest.approx(2 * p_fe1, rel=1e-14)
    assert p_me2 == pytest.approx(2 * p_me1, rel=1e-14)


def test_losses_reject_overspeed(rear, front):
    with pytest.raises(MotorModelError):
        mach.rear_losses(rear, 1.0, rear.omega_max * 1.1, 10.0)
    with pytest.raises(MotorModelError):
        mach.front_losses(front, front.omega_max * 1.1, 10.0)


def test_front_losses_positive_on_grid(front):
    w = np.linspace(0.0, front.omega_max, 7)
    T = np.linspace(-front.T_max, front.T_max, 5)[:, None]
    P = mach.front_losses(front, w, T)
    assert np.all(P >= 0.0)


def test_check_limits_flags_regen_symmetrically(front, rear):
    # regenerating above rated power must be flagged like traction
    bad = mach.check_limits(front, rear, S_m=1.0, F_m_f=0.0, v=10.0,
                            P_m_r=-1.2 * rear.Pbar_max, omega_r=500.0,
                            gamma=5.0, r_wf=0.321, r_wr=0.318, eta_gb=0.96)
    assert any("rear power" in msg for msg in bad)


def test_fit_recovers_exact_coefficients(rear):
    samples = loss_map_grid(rear.coeffs, rear.omega_max, rear.Tbar_max)
    coeffs, report = fit_loss_map(samples, l_co=rear.l_co, l_ew=rear.l_ew)
    assert report.r_squared >= 0.9999
    for name in ("a_Fe", "a_Mech", "c_Mech", "d_Mech", "a_Cu", "b_Cu"):
        got, want = getattr(coeffs, name), getattr(rear.coeffs, name)
        assert got == pytest.approx(want, rel=1e-6, abs=1e-12)
    assert coeffs.b_Mech == 0.0


def test_fit_rejects_degenerate_excitation(rear):
    # all samples at one speed: speed polynomial unidentifiable
    samples = [mach.LossMapSample(omega=100.0, torque=t, p_loss=10.0 + t ** 2)
               for t in np.linspace(0, 100, 30)]
    with pytest.raises(IdentifiabilityError):
        fit_loss_map(samples, l_co=0.1, l_ew=0.025)


def test_fit_under_noise(rear):
    r2s, nrmses = [], []
    for seed in range(20):
        samples = loss_map_grid(rear.coeffs, rear.omega_max, rear.Tbar_max,
                                noise_frac=0.03, seed=seed)
        _, report = fit_loss_map(samples, l_co=rear.l_co, l_ew=rear.l_ew)
        r2s.append(report.r_squared)
        nrmses.append(report.nrmse)
    assert np.median(r2s) >= 0.99
    assert np.median(nrmses) <= 0.03


def test_synthetic_machines_are_deterministic():
    a = synthetic_rear_motor()
    b = synthetic_rear_motor()
    assert a.coeffs == b.coeffs
    assert synthetic_front_motor().coeffs == synthetic_front_motor().coeffs


def test_loss_coefficients_nonnegative(rear, front):
    for c in (rear.coeffs, front.coeffs):
        assert isinstance(c, LossCoefficients)
        assert min(c.a_Fe, c.a_Mech, c.c_Mech, c.d_Mech, c.a_Cu, c.b_Cu) >= 0
