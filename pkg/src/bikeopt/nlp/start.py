"""Feasible-by-construction starting designs and starting points.

The heuristic design picks the largest admissible gear ratio, sizes the
rear motor against the performance constraints and the peak cycle
demand, and closes the battery scale with the range/SoC fixed point.
The starting point maps an adherence-policy forward simulation into the
decision layout, so every equality row is satisfied at the start.
"""

from __future__ import annotations

import numpy as np

from bikeopt import performance as perf
from bikeopt import simulate as simu
from bikeopt.battery import BatteryModel
from bikeopt.cycle import DrivingCycle
from bikeopt.machines import FrontMotorModel, RearMotorModel
from bikeopt.nlp.layout import (
    E_B, F_BRK_F, F_BRK_R, F_M_F, F_M_R_NEG, F_M_R_POS, F_TR_F, GAMMA,
    P_B_NEG, P_B_POS, SIGMA, S_B, S_M,
)
from bikeopt.nlp.problem import NlpProblem, S_M_BOUNDS, S_B_BOUNDS
from bikeopt.simulate import Design
from bikeopt.vehicle import VehicleParams, required_force


def _min_motor_scale(p: VehicleParams, m: float, front: FrontMotorModel,
                     rear: RearMotorModel, gamma: float) -> float:
    """Smallest rear scale meeting sprint, top-speed, and grade targets
    at a given mass, found by bisection on the monotone margins."""
    lo, hi = S_M_BOUNDS
    def ok(S):
        return (perf.accel_time(p, m, front, rear, S, gamma) <= p.t_a_max
                and perf.top_speed_margin(p, m, front, rear, S) >= 0
                and perf.power_gradeability_margin(p, m, front, rear, S) >= 0
                and perf.torque_gradeability_margin(p, m, front, rear, S, gamma) >= 0)
    if not ok(hi):
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def heuristic_design(cycle: DrivingCycle, p: VehicleParams,
                     front: FrontMotorModel, rear: RearMotorModel,
                     battery: BatteryModel, demand_margin: float = 1.2,
                     iters: int = 30) -> Design:
    """Alternating fixed point over (S_m, S_b) at the top gear ratio."""
    gamma = rear.omega_max * p.r_wr / p.v_max
    S_m, S_b = 1.0, 1.0
    win = battery.usable_fraction * battery.Ebar_max
    for _ in range(iters):
        m = p.m_fixed + battery.mbar_b * S_b + rear.mbar_m * S_m
        # rear scale: performance floor plus headroom over the worst
        # single-step rear demand (front motor saturated)
        F_v = required_force(p, m, cycle.v, cycle.a, cycle.theta)
        rear_need = np.max(F_v) - front.T_max / p.r_wf
        S_dem = 0.0
        if rear_need > 0:
            S_dem = demand_margin * rear_need * p.r_wr / (
                rear.Tbar_max * gamma * p.eta_gb)
        S_m_new = np.clip(max(_min_motor_scale(p, m, front, rear, gamma),
                              S_dem), *S_M_BOUNDS)
        d = Design(gamma=gamma, S_m=float(S_m_new), S_b=float(max(S_b, S_B_BOUNDS[0])))
        res = simu.run(d, cycle, p, front, rear, battery, policy="adherence")
        max_drop = float(res.E_b[0] - np.min(res.E_b))
        need = max(res.E_c * p.D_r / (cycle.length_m * win),  # range
                   max_drop / win,                            # SoC window
                   S_B_BOUNDS[0])
        S_b_new = float(np.clip(1.02 * need, *S_B_BOUNDS))
        if abs(S_m_new - S_m) < 1e-10 and abs(S_b_new - S_b) < 1e-10:
            S_m, S_b = S_m_new, S_b_new
            break
        S_m, S_b = float(S_m_new), S_b_new
    return Design(gamma=float(gamma), S_m=float(S_m), S_b=float(S_b))


def point_from_simulation(problem: NlpProblem, res: simu.SimResult) -> np.ndarray:
    """Pack a simulation result into the scaled decision vector."""
    lay = problem.layout
    x = np.zeros(problem.n)
    x[GAMMA] = res.design.gamma
    x[S_M] = res.design.S_m
    x[S_B] = res.design.S_b
    lay.set(x, SIGMA, res.sigma)
    lay.set(x, F_M_F, res.F_m_f)
    lay.set(x, F_M_R_POS, np.maximum(res.F_m_r, 0.0))
    lay.set(x, F_M_R_NEG, np.maximum(-res.F_m_r, 0.0))
    lay.set(x, F_BRK_F, res.F_brk_f)
    lay.set(x, F_BRK_R, res.F_brk_r)
    lay.set(x, F_TR_F, res.F_tr_f)
    lay.set(x, P_B_POS, np.maximum(res.P_b, 0.0))
    lay.set(x, P_B_NEG, np.maximum(-res.P_b, 0.0))
    lay.set(x, E_B, res.E_b[:-1])
    return problem.scale(x)


def initial_point(problem: NlpProblem, cycle: DrivingCycle, p: VehicleParams,
                  front: FrontMotorModel, rear: RearMotorModel,
                  battery: BatteryModel,
                  design: Design | None = None) -> np.ndarray:
    """Scaled starting point from an adherence-policy simulation.

    In fixed-split mode the pinned per-step splits are replayed instead,
    so the start respects the equal variable bounds.
    """
    if design is None:
        design = heuristic_design(cycle, p, front, rear, battery)
    if problem.mode == "fixed-sigma-adherence":
        res = simu.run(design, cycle, p, front, rear, battery,
                       policy="sigma-trace", sigma_trace=problem._m.sigma_pin)
    else:
        res = simu.run(design, cycle, p, front, rear, battery,
                       policy="adherence")
    return point_from_simulation(problem, res)
