"""Vehicle constants, mass model, and wheel power/force demand."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Speed floor below which the force demand uses the algebraic (continuous
# limit) expression instead of P/v, avoiding 0/0 at standstill samples.
V_EPS = 0.1


@dataclass(frozen=True)
class VehicleParams:
    """All vehicle-level constants: geometry, resistances, efficiency chain,
    and the performance targets the sized design must meet."""

    m_r: float            # rider mass, kg
    m_0: float            # glider mass incl. front motor, kg
    r_wf: float           # front wheel radius, m
    r_wr: float           # rear wheel radius, m
    h: float              # CoG height, m
    b: float              # CoG to rear contact patch, m
    w_b: float            # wheelbase, m
    c_r: float            # rolling-resistance coefficient
    CdA: float            # drag area, m^2
    mu_brk_peak_r: float  # rear braking adherence limit (negative)
    rho: float = 1.25     # air density, kg/m^3
    g: float = 9.81       # gravity, m/s^2
    eta_gb: float = 0.96
    eta_b: float = 0.92
    eta_inv: float = 0.96
    P_aux: float = 100.0  # auxiliary power draw, W
    xi_min: float = 0.1
    xi_max: float = 0.9
    v_max: float = 69.444     # top speed target, m/s
    theta_max: float = math.atan(0.25)  # max climb grade, rad
    v_min_climb: float = 4.167          # min climbing speed, m/s
    v_f: float = 27.778       # sprint target speed, m/s
    t_a_max: float = 3.5      # max 0->v_f time, s
    D_r: float = 100_000.0    # min range, m
    w_obj: float = 1000.0     # objective weight on transfer forces
    prone_drag_factor: float = 0.9

    def __post_init__(self):
        positives = ["m_r", "m_0", "r_wf", "r_wr", "h", "b", "w_b", "c_r", "CdA",
                     "rho", "g", "eta_gb", "eta_b", "eta_inv", "v_max", "v_f",
                     "t_a_max", "D_r", "v_min_climb"]
        for name in positives:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("eta_gb", "eta_b", "eta_inv", "prone_drag_factor"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in (0, 1]")
        if not 0 <= self.xi_min < self.xi_max <= 1:
            raise ValueError("need 0 <= xi_min < xi_max <= 1")
        if self.b >= self.w_b:
            raise ValueError("b must be smaller than the wheelbase")
        if self.mu_brk_peak_r >= 0:
            raise ValueError("mu_brk_peak_r must be negative")

    @property
    def m_fixed(self) -> float:
        return self.m_0 + self.m_r


@dataclass(frozen=True)
class MassBreakdown:
    m_total: float
    m_battery: float
    m_rear_motor: float
    m_fixed: float


def total_mass(p: VehicleParams, mbar_b: float, mbar_m_r: float,
               S_b: float, S_m: float) -> MassBreakdown:
    """Overall mass: fixed terms plus linearly scaled battery and rear motor.

    ``S_b``/``S_m`` may be 0 only as a limiting case in analysis; sizing
    always uses strictly positive scales.
    """
    if S_b < 0 or S_m < 0:
        raise ValueError("scaling factors must be nonnegative")
    m_bat = mbar_b * S_b
    m_mot = mbar_m_r * S_m
    return MassBreakdown(
        m_total=p.m_fixed + m_bat + m_mot,
        m_battery=m_bat,
        m_rear_motor=m_mot,
        m_fixed=p.m_fixed,
    )


def road_load_accel_term(p: VehicleParams, a, theta):
    """Per-unit-mass longitudinal demand: rolling + grade + inertia (m/s^2)."""
    return p.c_r * p.g * np.cos(theta) + p.g * np.sin(theta) + a


def required_power(p: VehicleParams, m: float, v, a, theta):
    """Power demand at the wheels for given kinematics (W).

    Accepts scalars or aligned arrays.
    """
    return m * v * road_load_accel_term(p, a, theta) + 0.5 * p.rho * p.CdA * v ** 3


def required_force(p: VehicleParams, m: float, v, a, theta):
    """Force demand at the wheels (N); the continuous limit of P/v.

    The algebraic expression m*(c_r g cos + g sin + a) + 0.5 rho CdA v^2
    equals P/v for v > 0 and remains finite at standstill.
    """
    return m * road_load_accel_term(p, a, theta) + 0.5 * p.rho * p.CdA * v ** 2
