import numpy as np
import pytest

from bikeopt import battery as bat
from bikeopt import machines as mach
from bikeopt import simulate as simu
from bikeopt.simulate import Design, SimulationError
from bikeopt.vehicle import required_force, required_power


@pytest.fixture(scope="module")
def design():
    return Design(gamma=5.0, S_m=0.7, S_b=0.5)


def test_design_validation():
    with pytest.raises(ValueError):
        Design(gamma=0.0, S_m=1.0, S_b=1.0)


def test_adherence_run_is_clean(design, urban_cycle, params, front, rear,
                                battery):
    res = simu.run(design, urban_cycle, params, front, rear, battery)
    assert res.violations == ()
    assert res.E_c > 0
    assert res.E_b.shape == (urban_cycle.n + 1,)
    assert np.all(res.sigma >= 0.0) and np.all(res.sigma <= 1.0)


def test_force_balance_identity(design, urban_cycle, params, front, rear,
                                battery):
    res = simu.run(design, urban_cycle, params, front, rear, battery)
    X_f = res.F_m_f + res.F_brk_f + res.F_tr_f
    X_r = res.F_m_r + res.F_brk_r
    assert np.allclose(X_f + X_r, res.F_v, atol=1e-9)


def test_chain_reproduced_independently(design, urban_cycle, params, front,
                                        rear, battery):
    """Recompute one step's power chain by hand from the force outputs."""
    res = simu.run(design, urban_cycle, params, front, rear, battery)
    k = int(np.argmax(urban_cycle.v))  # a firmly-moving sample
    v = urban_cycle.v[k]
    p_f_loss = mach.front_losses(front, v / params.r_wf,
                                 res.F_m_f[k] * params.r_wf)
    P_m_f = res.F_m_f[k] * v
    if res.F_m_r[k] >= 0:
        P_m_r = res.F_m_r[k] * v / params.eta_gb
        T_r = res.F_m_r[k] / params.eta_gb * params.r_wr / design.gamma
    else:
        P_m_r = res.F_m_r[k] * v * params.eta_gb
        T_r = res.F_m_r[k] * params.eta_gb * params.r_wr / design.gamma
    w_r = v * design.gamma / params.r_wr
    p_fe, p_me, p_cu = mach.rear_losses(rear, design.S_m, w_r, T_r)
    P_ac = P_m_f + p_f_loss + P_m_r + p_fe + p_me + p_cu
    assert P_ac == pytest.approx(res.P_ac[k], rel=1e-12)
    P_b = max((P_ac / params.eta_inv + params.P_aux) / params.eta_b,
              (params.eta_inv * P_ac + params.P_aux) * params.eta_b)
    assert P_b == pytest.approx(res.P_b[k], rel=1e-12)


def test_energy_audit_closes(design, all_cycles, params, front, rear,
                             battery):
    for cyc in all_cycles.values():
        res = simu.run(design, cyc, params, front, rear, battery)
        terms, residual = simu.energy_audit(res, cyc, params)
        assert abs(residual) <= 1e-9 * max(1.0, abs(res.E_c))
        assert terms["brake_dissipation"] >= -1e-9
        assert terms["motor_loss"] >= 0.0
        assert terms["auxiliary"] == pytest.approx(100.0 * cyc.n)


def test_trace_replay_reproduces(design, urban_cycle, params, front, rear,
                                 battery):
    res = simu.run(design, urban_cycle, params, front, rear, battery)
    forces = {"sigma": res.sigma, "F_m_f": res.F_m_f, "F_m_r": res.F_m_r,
              "F_brk_f": res.F_brk_f, "F_brk_r": res.F_brk_r,
              "F_tr_f": res.F_tr_f}
    res2 = simu.run(design, urban_cycle, params, front, rear, battery,
                    policy="trace", forces=forces)
    assert res2.E_c == pytest.approx(res.E_c, rel=1e-12)
    assert np.allclose(res2.P_b, res.P_b, rtol=1e-12)


def test_sigma_trace_over_adherence_flagged(design, urban_cycle, params,
                                            front, rear, battery):
    res = simu.run(design, urban_cycle, params, front, rear, battery)
    bad = np.clip(res.sigma + 0.2, 0.0, 1.0)
    res2 = simu.run(design, urban_cycle, params, front, rear, battery,
                    policy="sigma-trace", sigma_trace=bad)
    kinds = {v.kind for v in res2.violations}
    assert "sigma-exceeds-adherence" in kinds
    with pytest.raises(SimulationError):
        simu.run(design, urban_cycle, params, front, rear, battery,
                 policy="sigma-trace", sigma_trace=bad, strict=True)


def test_soc_violation_reported(urban_cycle, params, front, rear, battery):
    tiny = Design(gamma=5.0, S_m=0.7, S_b=0.003)
    res = simu.run(tiny, urban_cycle, params, front, rear, battery)
    kinds = {v.kind for v in res.violations}
    assert "soc-low" in kinds


def test_undersized_motor_overflow(urban_cycle, params, front, rear,
                                   battery):
    small = Design(gamma=1.0, S_m=0.05, S_b=0.5)
    res = simu.run(small, urban_cycle, params, front, rear, battery)
    assert any(v.kind == "demand-infeasible" for v in res.violations)


def test_regen_reduces_consumption_vs_friction_only(design, sprint_cycle,
                                                    params, front, rear,
                                                    battery):
    res = simu.run(design, sprint_cycle, params, front, rear, battery)
    # friction-only baseline: zero out motor braking, brakes take all
    F_m_f = np.maximum(res.F_m_f, 0.0)
    F_m_r = np.maximum(res.F_m_r, 0.0)
    forces = {
        "sigma": res.sigma, "F_m_f": F_m_f, "F_m_r": F_m_r,
        "F_brk_f": res.F_brk_f + np.minimum(res.F_m_f, 0.0),
        "F_brk_r": res.F_brk_r + np.minimum(res.F_m_r, 0.0),
        "F_tr_f": res.F_tr_f,
    }
    res_fric = simu.run(design, sprint_cycle, params, front, rear, battery,
                        policy="trace", forces=forces)
    assert res_fric.E_c > res.E_c


def test_sweep_sigma_shapes(design, urban_cycle, params, front, rear,
                            battery):
    out = simu.sweep_sigma(design, urban_cycle, params, front, rear, battery,
                           grid=[0.0, 0.25, 0.5])
    assert len(out) == 3
    assert all(np.isfinite(e) for _, e in out)
