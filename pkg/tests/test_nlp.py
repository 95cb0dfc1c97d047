import numpy as np
import pytest

from bikeopt import nlp
from bikeopt import simulate as simu
from bikeopt.cycle import make_cycle
from bikeopt.nlp.layout import BLOCK, E_B, GAMMA, SIGMA, S_B, S_M, DecisionLayout
from bikeopt.nlp.problem import BuildError


@pytest.fixture(scope="module")
def tiny_cycle():
    """Short mixed trace with traction, braking, and a stop."""
    v = [0.0, 3.0, 7.0, 11.0, 14.0, 14.0, 10.0, 5.0, 0.0, 0.0,
         4.0, 9.0, 13.0, 13.0, 8.0, 2.0, 0.0, 0.0]
    t = np.arange(len(v), dtype=float)
    return make_cycle(t, v, name="tiny")


def test_layout_roundtrip():
    lay = DecisionLayout(7)
    assert lay.n == 3 + 7 * BLOCK
    assert lay.idx(SIGMA, 0) == 3
    assert lay.idx(E_B, 6) == lay.n - 1
    x = np.zeros(lay.n)
    lay.set(x, E_B, np.arange(7.0))
    assert np.allclose(lay.get(x, E_B), np.arange(7.0))
    assert lay.step_of(0) == ("gamma", None)
    assert lay.step_of(lay.idx(SIGMA, 3)) == ("sigma", 3)
    with pytest.raises(IndexError):
        lay.idx(SIGMA, 7)


def test_build_validation(tiny_cycle, params, front, rear, battery):
    with pytest.raises(BuildError):
        nlp.build(tiny_cycle, params, front, rear, battery, mode="nope")
    with pytest.raises(BuildError):
        nlp.build(tiny_cycle, params, front, rear, battery,
                  mode="fixed-sigma-adherence")  # no pin supplied


def test_initial_point_is_equality_feasible(tiny_cycle, params, front, rear,
                                            battery):
    problem = nlp.build(tiny_cycle, params, front, rear, battery)
    z0 = nlp.initial_point(problem, tiny_cycle, params, front, rear, battery)
    assert np.max(np.abs(problem.cons_eq(z0))) <= 1e-9
    assert np.min(problem.cons_ineq(z0)) >= -1e-9
    assert np.all(z0 >= problem.lb - 1e-12)
    assert np.all(z0 <= problem.ub + 1e-12)


def test_derivatives_at_start_and_perturbed(tiny_cycle, params, front, rear,
                                            battery):
    problem = nlp.build(tiny_cycle, params, front, rear, battery)
    z0 = nlp.initial_point(problem, tiny_cycle, params, front, rear, battery)
    rep = nlp.check_derivatives(problem, z0, n_samples=100, seed=0)
    assert rep.passed, rep
    rng = np.random.default_rng(5)
    z1 = z0 + 0.03 * rng.standard_normal(z0.size)
    rep1 = nlp.check_derivatives(problem, z1, n_samples=100, seed=1)
    assert rep1.passed, rep1


def test_objective_matches_hand_formula(tiny_cycle, params, front, rear,
                                        battery):
    problem = nlp.build(tiny_cycle, params, front, rear, battery)
    z0 = nlp.initial_point(problem, tiny_cycle, params, front, rear, battery)
    x = problem.unscale(z0)
    lay = problem.layout
    from bikeopt.nlp.layout import F_TR_F, P_B_NEG, P_B_POS
    e_wh = (np.sum(lay.get(x, P_B_POS)) - np.sum(lay.get(x, P_B_NEG))) \
        * tiny_cycle.dt / 3600.0
    expect = e_wh + params.w_obj * np.sum(lay.get(x, F_TR_F))
    assert problem.objective(z0) == pytest.approx(expect, rel=1e-12)


def test_heuristic_design_is_performant(tiny_cycle, params, front, rear,
                                        battery):
    from bikeopt import performance as perf
    d = nlp.heuristic_design(tiny_cycle, params, front, rear, battery)
    m = params.m_fixed + battery.mbar_b * d.S_b + rear.mbar_m * d.S_m
    assert perf.accel_time(params, m, front, rear, d.S_m, d.gamma) \
        <= params.t_a_max + 1e-9
    assert perf.top_speed_margin(params, m, front, rear, d.S_m) >= -1e-6
    assert perf.power_gradeability_margin(params, m, front, rear, d.S_m) >= -1e-6
    assert perf.torque_gradeability_margin(params, m, front, rear, d.S_m,
                                           d.gamma) >= -1e-6


def test_trust_constr_backend_small(tiny_cycle, params, front, rear, battery):
    opts = nlp.SolverOptions(backend="trust-constr", max_iter=60)
    res = nlp.solve(tiny_cycle, params, front, rear, battery,
                    mode="free-sigma", options=opts)
    assert res.max_violation <= 1e-6
    assert res.E_c > 0
    # replay through the simulator agrees with the packaged result
    forces = {"sigma": res.sigma, "F_m_f": res.F_m_f, "F_m_r": res.F_m_r,
              "F_brk_f": res.F_brk_f, "F_brk_r": res.F_brk_r,
              "F_tr_f": res.F_tr_f}
    sim = simu.run(res.design, tiny_cycle, params, front, rear, battery,
                   policy="trace", forces=forces)
    assert sim.E_c == pytest.approx(res.E_c, rel=1e-9)


def test_backends_agree_on_tiny_cycle(tiny_cycle, params, front, rear,
                                      battery):
    """Both backends should land in the same neighborhood on an easy
    instance (the reduced backend restricts splits to a policy family,
    so exact agreement is not expected)."""
    r1 = nlp.solve(tiny_cycle, params, front, rear, battery,
                   mode="free-sigma")
    r2 = nlp.solve(tiny_cycle, params, front, rear, battery,
                   mode="free-sigma",
                   options=nlp.SolverOptions(backend="trust-constr",
                                             max_iter=60))
    assert r1.max_violation <= 1e-6
    assert r2.max_violation <= 1e-6
    assert r2.J <= r1.J * 1.05  # full NLP at least close to the policy opt


def test_reduced_solver_reports(tiny_cycle, params, front, rear, battery):
    res = nlp.solve(tiny_cycle, params, front, rear, battery)
    assert res.backend == "reduced"
    assert res.feasible
    assert res.iterations >= 0
    assert res.sigma.shape == tiny_cycle.v.shape
    assert res.E_b.shape == (tiny_cycle.n + 1,)
