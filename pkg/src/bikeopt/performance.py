"""Performance constraints linking the sizing scalars to acceleration,
top speed, gradeability, and riding range."""

from __future__ import annotations

import math
from dataclasses import dataclass

from bikeopt.battery import BatteryModel
from bikeopt.machines import FrontMotorModel, RearMotorModel
from bikeopt.vehicle import VehicleParams


@dataclass(frozen=True)
class PerformanceSpec:
    t_a_max: float
    v_f: float
    v_max: float
    theta_max: float
    v_min_climb: float
    D_r: float
    prone_drag_factor: float = 0.9

    def __post_init__(self):
        for name in ("t_a_max", "v_f", "v_max", "v_min_climb", "D_r"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.prone_drag_factor <= 1:
            raise ValueError("prone_drag_factor must be in (0, 1]")

    @classmethod
    def from_params(cls, p: VehicleParams) -> "PerformanceSpec":
        return cls(t_a_max=p.t_a_max, v_f=p.v_f, v_max=p.v_max,
                   theta_max=p.theta_max, v_min_climb=p.v_min_climb,
                   D_r=p.D_r, prone_drag_factor=p.prone_drag_factor)


def accel_time(p: VehicleParams, m: float, front: FrontMotorModel,
               rear: RearMotorModel, S_m: float, gamma: float) -> float:
    """Closed-form 0 -> v_f sprint time on flat road.

    Phase 1 holds both motors at maximum torque until the front rated
    speed; phase 2 runs the front at maximum power with the rear still in
    its constant-torque region.  Drag and rolling resistance are excluded
    from the closed form (the rated sprint is torque-dominated).  If the
    front rated-speed crossover exceeds v_f, the phase-1 constant-force
    expression is extended to v_f instead.
    """
    if m <= 0 or S_m <= 0 or gamma <= 0:
        raise ValueError("m, S_m, gamma must be positive")
    F_rear = S_m * gamma * rear.Tbar_max * p.eta_gb / p.r_wr
    F_front_t = front.T_max / p.r_wf
    v1 = front.omega_rated * p.r_wf
    if v1 >= p.v_f:
        return m * p.v_f / (F_front_t + F_rear)
    t1 = m * v1 / (F_front_t + F_rear)
    P = front.P_max
    log_arg = (P + F_rear * p.v_f) / (P + F_rear * v1)
    t2 = (m / F_rear) * ((p.v_f - v1) - (P / F_rear) * math.log(log_arg))
    return t1 + t2


def accel_time_gradient(p: VehicleParams, m: float, front: FrontMotorModel,
                        rear: RearMotorModel, S_m: float, gamma: float,
                        dm_dSm: float, dm_dSb: float):
    """Analytic (d t_a/d gamma, d t_a/d S_m, d t_a/d S_b).

    The sprint time is homogeneous of degree one in mass, so the mass
    channel contributes (t/m)*dm; the force channel enters through the
    rear constant-torque force K = S_m*gamma*Tbar*eta/r_wr.
    """
    t = accel_time(p, m, front, rear, S_m, gamma)
    K = S_m * gamma * rear.Tbar_max * p.eta_gb / p.r_wr
    F_front_t = front.T_max / p.r_wf
    v1 = front.omega_rated * p.r_wf
    P = front.P_max
    if v1 >= p.v_f:
        dt_dK = -m * p.v_f / (F_front_t + K) ** 2
    else:
        log_arg = (P + K * p.v_f) / (P + K * v1)
        dlog_dK = p.v_f / (P + K * p.v_f) - v1 / (P + K * v1)
        dt_dK = (-m * v1 / (F_front_t + K) ** 2
                 - (m / K ** 2) * (p.v_f - v1)
                 + 2 * m * P / K ** 3 * math.log(log_arg)
                 - (m * P / K ** 2) * dlog_dK)
    dt_dm = t / m
    dK_dSm = K / S_m
    dK_dgamma = K / gamma
    return (dt_dK * dK_dgamma,
            dt_dm * dm_dSm + dt_dK * dK_dSm,
            dt_dm * dm_dSb)


def top_speed_margin(p: VehicleParams, m: float, front: FrontMotorModel,
                     rear: RearMotorModel, S_m: float) -> float:
    """Available-minus-required power at v_max with the rider prone (W)."""
    CdA_p = p.prone_drag_factor * p.CdA
    demand = 0.5 * p.rho * CdA_p * p.v_max ** 3 + m * p.g * p.c_r * p.v_max
    avail = front.P_max + S_m * rear.Pbar_max * p.eta_gb
    return avail - demand


def top_speed_ok(p, m, front, rear, S_m) -> tuple[bool, float]:
    margin = top_speed_margin(p, m, front, rear, S_m)
    return margin >= 0, margin


def power_gradeability_margin(p: VehicleParams, m: float, front: FrontMotorModel,
                              rear: RearMotorModel, S_m: float) -> float:
    demand = m * p.g * math.sin(p.theta_max) * p.v_min_climb
    return front.P_max + S_m * rear.Pbar_max * p.eta_gb - demand


def power_gradeability_ok(p, m, front, rear, S_m) -> bool:
    return power_gradeability_margin(p, m, front, rear, S_m) >= 0


def torque_gradeability_margin(p: VehicleParams, m: float, front: FrontMotorModel,
                               rear: RearMotorModel, S_m: float, gamma: float) -> float:
    demand = m * p.g * math.sin(p.theta_max)
    avail = front.T_max / p.r_wf + S_m * rear.Tbar_max * gamma / p.r_wr
    return avail - demand


def torque_gradeability_ok(p, m, front, rear, S_m, gamma) -> bool:
    return torque_gradeability_margin(p, m, front, rear, S_m, gamma) >= 0


def range_margin(E_c_cycle: float, S_b: float, battery: BatteryModel,
                 D_c: float, D_r: float) -> float:
    """Slack of the range inequality (J); nonnegative means feasible."""
    if D_c <= 0:
        raise ValueError("cycle length must be positive")
    return S_b * battery.usable_fraction * battery.Ebar_max * D_c / D_r - E_c_cycle


def range_ok(E_c_cycle, S_b, battery, D_c, D_r) -> bool:
    return range_margin(E_c_cycle, S_b, battery, D_c, D_r) >= 0


def min_scale_for_range(E_c_cycle: float, battery: BatteryModel,
                        D_c: float, D_r: float) -> float:
    """Smallest battery scale satisfying the range inequality."""
    if D_c <= 0:
        raise ValueError("cycle length must be positive")
    return E_c_cycle * D_r / (D_c * battery.usable_fraction * battery.Ebar_max)
