"""Forward simulation of a fixed design under a blending policy.

Given the three sizing scalars and a policy for the front/rear split,
the simulator walks the cycle step by step: demand split, serial brake
repartition or capacity-limited traction with rearward transfer, motor
losses, inverter/battery chain, and forward-Euler battery integration.
It reports violations instead of failing unless run in strict mode, and
doubles as the independent oracle for optimizer results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bikeopt import battery as bat
from bikeopt import machines as mach
from bikeopt.battery import BatteryModel
from bikeopt.blending import (
    rear_normal_load_force,
    sigma_adherence,
)
from bikeopt.cycle import DrivingCycle
from bikeopt.machines import FrontMotorModel, RearMotorModel
from bikeopt.metrics import EnergyLedger, ledger
from bikeopt.vehicle import V_EPS, VehicleParams, required_force, required_power


class SimulationError(RuntimeError):
    """Raised in strict mode on the first recorded violation."""


@dataclass(frozen=True)
class Design:
    gamma: float
    S_m: float
    S_b: float

    def __post_init__(self):
        if self.gamma <= 0 or self.S_m <= 0 or self.S_b <= 0:
            raise ValueError("design scalars must be strictly positive")


@dataclass(frozen=True)
class Violation:
    kind: str
    step: int
    value: float

    def __str__(self):
        return f"{self.kind} at step {self.step} (value {self.value:.6g})"


@dataclass(frozen=True)
class SimResult:
    design: Design
    m_total: float
    sigma: np.ndarray
    sigma_a_raw: np.ndarray
    F_v: np.ndarray
    F_m_f: np.ndarray
    F_m_r: np.ndarray
    F_brk_f: np.ndarray
    F_brk_r: np.ndarray
    F_tr_f: np.ndarray
    mu_r: np.ndarray
    P_v: np.ndarray
    P_loss_f: np.ndarray
    P_Fe_r: np.ndarray
    P_Mech_r: np.ndarray
    P_Cu_r: np.ndarray
    P_ac: np.ndarray
    P_b: np.ndarray
    E_b: np.ndarray          # N+1 grid energies
    E_c: float               # J
    Ec_wh_per_km: float
    energy: EnergyLedger
    violations: tuple = ()


def motor_force_capacities(p: VehicleParams, front: FrontMotorModel,
                           rear: RearMotorModel, design: Design, v):
    """Per-step force capacities (front trac, front regen, rear trac,
    rear regen), combining torque and power ratings at the current speed."""
    v = np.asarray(v, dtype=float)
    v_safe = np.maximum(v, V_EPS)
    cap_f_torque = front.T_max / p.r_wf
    cap_f = np.where(v < V_EPS, cap_f_torque,
                     np.minimum(cap_f_torque, front.P_max / v_safe))
    g, S = design.gamma, design.S_m
    cap_r_trac_t = rear.Tbar_max * S * g * p.eta_gb / p.r_wr
    cap_r_trac = np.where(v < V_EPS, cap_r_trac_t,
                          np.minimum(cap_r_trac_t,
                                     rear.Pbar_max * S * p.eta_gb / v_safe))
    cap_r_regen_t = rear.Tbar_max * S * g / (p.eta_gb * p.r_wr)
    cap_r_regen = np.where(v < V_EPS, cap_r_regen_t,
                           np.minimum(cap_r_regen_t,
                                      rear.Pbar_max * S / (p.eta_gb * v_safe)))
    return cap_f, cap_f, cap_r_trac, cap_r_regen


def heuristic_forces(p: VehicleParams, front: FrontMotorModel,
                     rear: RearMotorModel, design: Design, m: float,
                     v, a, theta, sigma):
    """Vectorized serial-blending force repartition for given splits.

    Braking demand is served motor-first up to regenerative capacity,
    the remainder by friction brakes; traction overflow on the front is
    transferred rearward.  Broadcasts over trailing axes of ``sigma``.

    Returns a dict of arrays shaped like ``sigma`` (broadcast with v).
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    F_v = required_force(p, m, v, a, theta)
    cap_f_t, cap_f_r, cap_r_t, cap_r_r = motor_force_capacities(
        p, front, rear, design, v)

    F_f_dem = sigma * F_v
    F_r_base = (1.0 - sigma) * F_v
    braking = F_v < 0

    # traction: front motor to capacity, overflow transferred rearward
    F_m_f_trac = np.minimum(F_f_dem, cap_f_t)
    F_tr = np.maximum(0.0, F_f_dem - cap_f_t)
    F_m_r_trac = F_r_base + F_tr

    # braking: serial regeneration then friction, per wheel
    F_m_f_brk = np.maximum(F_f_dem, -cap_f_r)
    F_brk_f = F_f_dem - F_m_f_brk
    F_m_r_brk = np.maximum(F_r_base, -cap_r_r)
    F_brk_r = F_r_base - F_m_r_brk

    F_m_f = np.where(braking, F_m_f_brk, F_m_f_trac)
    F_m_r = np.where(braking, F_m_r_brk, F_m_r_trac)
    return {
        "F_v": np.broadcast_to(F_v, F_m_f.shape),
        "F_m_f": F_m_f,
        "F_m_r": F_m_r,
        "F_brk_f": np.where(braking, F_brk_f, 0.0),
        "F_brk_r": np.where(braking, F_brk_r, 0.0),
        "F_tr_f": np.where(braking, 0.0, F_tr),
        "rear_over": np.where(braking, 0.0, np.maximum(0.0, F_m_r_trac - cap_r_t)),
    }


def powers_from_forces(p: VehicleParams, front: FrontMotorModel,
                       rear: RearMotorModel, design: Design,
                       v, F_m_f, F_m_r):
    """Loss chain from motor forces to battery terminal power."""
    v = np.asarray(v, dtype=float)
    omega_f = v / p.r_wf
    omega_r = mach.rear_speed(v, design.gamma, p.r_wr)
    T_f = np.asarray(F_m_f) * p.r_wf
    P_m_f = np.asarray(F_m_f) * v
    P_loss_f = mach.front_losses(front, omega_f, T_f)
    P_m_r = mach.rear_mech_power(F_m_r, v, p.eta_gb)
    T_r = mach.rear_motor_torque(F_m_r, design.gamma, p.r_wr, p.eta_gb)
    P_Fe, P_Mech, P_Cu = mach.rear_losses(rear, design.S_m, omega_r, T_r)
    P_ac = mach.total_ac_power(P_m_f, P_loss_f, P_m_r, P_Fe, P_Mech, P_Cu)
    P_b = bat.battery_power(P_ac, p.P_aux, p.eta_inv, p.eta_b)
    return {
        "P_m_f": P_m_f, "P_loss_f": P_loss_f, "P_m_r": P_m_r,
        "P_Fe_r": P_Fe, "P_Mech_r": P_Mech, "P_Cu_r": P_Cu,
        "P_ac": P_ac, "P_b": P_b,
    }


def _mass(p: VehicleParams, rear: RearMotorModel, battery: BatteryModel,
          design: Design) -> float:
    return p.m_fixed + battery.mbar_b * design.S_b + rear.mbar_m * design.S_m


def run(design: Design, cycle: DrivingCycle, p: VehicleParams,
        front: FrontMotorModel, rear: RearMotorModel, battery: BatteryModel,
        policy: str = "adherence", sigma_trace=None, forces=None,
        E_b0: float | None = None, strict: bool = False) -> SimResult:
    """Forward-simulate a fixed design over a cycle.

    Policies:
      * ``adherence``  - apply the clamped adherence split at every step.
      * ``sigma-trace``- apply a supplied per-step split.
      * ``trace``      - replay supplied force components verbatim and
        recompute all powers and energies from them (oracle mode).

    Violations are recorded as diagnostics; with ``strict`` they raise.
    """
    m = _mass(p, rear, battery, design)
    v, a, theta = cycle.v, cycle.a, cycle.theta
    n = cycle.n
    F_v = required_force(p, m, v, a, theta)
    P_v = required_power(p, m, v, a, theta)
    sig_a_raw = sigma_adherence(p, m, F_v, theta)

    violations: list[Violation] = []

    if policy == "adherence":
        sigma = np.clip(sig_a_raw, 0.0, 1.0)
    elif policy == "sigma-trace":
        if sigma_trace is None:
            raise ValueError("sigma-trace policy needs sigma_trace")
        sigma = np.asarray(sigma_trace, dtype=float)
        if sigma.shape != v.shape:
            raise ValueError("sigma_trace length mismatch")
        over = sigma - np.maximum(sig_a_raw, 0.0)
        for k in np.nonzero(over > 1e-9)[0]:
            violations.append(Violation("sigma-exceeds-adherence", int(k), float(over[k])))
    elif policy == "trace":
        if forces is None:
            raise ValueError("trace policy needs the force components")
        sigma = np.asarray(forces["sigma"], dtype=float)
    else:
        raise ValueError(f"unknown policy {policy!r}")

    if policy == "trace":
        F_m_f = np.asarray(forces["F_m_f"], dtype=float)
        F_m_r = np.asarray(forces["F_m_r"], dtype=float)
        F_brk_f = np.asarray(forces["F_brk_f"], dtype=float)
        F_brk_r = np.asarray(forces["F_brk_r"], dtype=float)
        F_tr_f = np.asarray(forces["F_tr_f"], dtype=float)
    else:
        split = heuristic_forces(p, front, rear, design, m, v, a, theta, sigma)
        F_m_f = split["F_m_f"]
        F_m_r = split["F_m_r"]
        F_brk_f = split["F_brk_f"]
        F_brk_r = split["F_brk_r"]
        F_tr_f = split["F_tr_f"]
        for k in np.nonzero(split["rear_over"] > 1e-6)[0]:
            violations.append(Violation("demand-infeasible", int(k),
                                        float(split["rear_over"][k])))

    pw = powers_from_forces(p, front, rear, design, v, F_m_f, F_m_r)

    # operational-limit audit (symmetric in magnitude)
    rtol = 1e-6
    checks = [
        ("front-power", np.abs(pw["P_m_f"]) - front.P_max * (1 + rtol)),
        ("front-torque", np.abs(F_m_f * p.r_wf) - front.T_max * (1 + rtol)),
        ("rear-power", np.abs(pw["P_m_r"]) - rear.Pbar_max * design.S_m * (1 + rtol)),
        ("rear-torque",
         np.abs(mach.rear_motor_torque(F_m_r, design.gamma, p.r_wr, p.eta_gb))
         - rear.Tbar_max * design.S_m * (1 + rtol)),
    ]
    for kind, excess in checks:
        for k in np.nonzero(excess > 0)[0]:
            violations.append(Violation(kind, int(k), float(excess[k])))

    # rear adherence audit
    X_f = F_m_f + F_brk_f + F_tr_f
    X_r = F_m_r + F_brk_r
    denom = rear_normal_load_force(p, m, X_f, X_r, theta)
    if np.any(denom <= 0):
        k = int(np.nonzero(denom <= 0)[0][0])
        raise SimulationError(f"rear wheel lift at step {k}")
    mu_r = X_r / denom
    for k in np.nonzero(mu_r < p.mu_brk_peak_r - 1e-9)[0]:
        violations.append(Violation("rear-adherence", int(k), float(mu_r[k])))

    if E_b0 is None:
        E_b0 = battery.xi_max * design.S_b * battery.Ebar_max
    E_b = bat.integrate(E_b0, pw["P_b"], cycle.dt)
    lo, hi = battery.soc_window(design.S_b)
    tol_e = 1e-9 * max(1.0, hi)
    for k in np.nonzero(E_b < lo - tol_e)[0]:
        violations.append(Violation("soc-low", int(k), float(E_b[k] - lo)))
    for k in np.nonzero(E_b > hi + tol_e)[0]:
        violations.append(Violation("soc-high", int(k), float(E_b[k] - hi)))

    if strict and violations:
        raise SimulationError(str(violations[0]))

    E_c = float(E_b[0] - E_b[-1])
    ec_per_km = E_c / 3600.0 / (cycle.length_m / 1000.0)
    led = ledger(P_v, pw["P_b"], cycle.dt)
    return SimResult(
        design=design, m_total=m, sigma=sigma, sigma_a_raw=sig_a_raw,
        F_v=F_v, F_m_f=F_m_f, F_m_r=F_m_r, F_brk_f=F_brk_f, F_brk_r=F_brk_r,
        F_tr_f=F_tr_f, mu_r=mu_r, P_v=P_v, P_loss_f=pw["P_loss_f"],
        P_Fe_r=pw["P_Fe_r"], P_Mech_r=pw["P_Mech_r"], P_Cu_r=pw["P_Cu_r"],
        P_ac=pw["P_ac"], P_b=pw["P_b"], E_b=E_b, E_c=E_c,
        Ec_wh_per_km=ec_per_km, energy=led, violations=tuple(violations),
    )


def energy_audit(res: SimResult, cycle: DrivingCycle, p: VehicleParams):
    """Decompose consumption into mechanical net energy plus every loss
    channel plus auxiliaries.

    Returns ``(terms, residual)`` where ``terms`` maps channel name to
    energy in joules and ``residual`` is E_c minus the sum of terms.
    The inverter/battery term may dip fractionally negative inside the
    narrow branch-ambiguity band of the efficiency chain.
    """
    v = cycle.v
    dt = cycle.dt
    brake_diss = -(res.F_brk_f + res.F_brk_r) * v
    P_m_r_mech = res.F_m_r * v
    P_m_r_elec = mach.rear_mech_power(res.F_m_r, v, p.eta_gb)
    gb_loss = P_m_r_elec - P_m_r_mech
    motor_loss = res.P_loss_f + res.P_Fe_r + res.P_Mech_r + res.P_Cu_r
    invbat_loss = res.P_b - res.P_ac - p.P_aux
    terms = {
        "mechanical_net": dt * float(np.sum(res.P_v)),
        "brake_dissipation": dt * float(np.sum(brake_diss)),
        "gearbox_loss": dt * float(np.sum(gb_loss)),
        "motor_loss": dt * float(np.sum(motor_loss)),
        "inverter_battery_loss": dt * float(np.sum(invbat_loss)),
        "auxiliary": dt * p.P_aux * cycle.n,
    }
    residual = res.E_c - sum(terms.values())
    return terms, residual


def sweep_sigma(design: Design, cycle: DrivingCycle, p: VehicleParams,
                front: FrontMotorModel, rear: RearMotorModel,
                battery: BatteryModel, grid) -> list[tuple[float, float]]:
    """Consumption for constant splits; each split is capped per step at
    the clamped adherence limit before simulation."""
    m = _mass(p, rear, battery, design)
    F_v = required_force(p, m, cycle.v, cycle.a, cycle.theta)
    sig_a = np.clip(sigma_adherence(p, m, F_v, cycle.theta), 0.0, 1.0)
    out = []
    for s in grid:
        trace = np.minimum(float(s), sig_a)
        res = run(design, cycle, p, front, rear, battery,
                  policy="sigma-trace", sigma_trace=trace)
        out.append((float(s), res.E_c))
    return out
