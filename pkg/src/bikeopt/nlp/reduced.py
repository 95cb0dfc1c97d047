"""Nested-decomposition backend.

The transcription is separable across time steps once the three sizing
scalars are fixed: each step's split fraction only couples to the others
through the design mass and the battery closure.  The backend exploits
this with three nested layers:

* inner: for a fixed design, a vectorized grid-plus-golden-section
  search over the per-step split within its admissible interval
  (adherence above, rear wheel-lock below), with the serial brake /
  transfer repartition applied at each candidate;
* battery closure: the smallest battery scale meeting the range target
  and the SoC window, found by a monotone fixed point (mass grows with
  the scale, consumption grows with mass);
* outer: SLSQP over gear ratio and motor scale against the performance
  constraints, warm-started from the sizing heuristic, with explicit
  corner candidates as safeguards.

The pinned-split (adherence policy) variant skips the inner search, so
a free solve that includes the pinned candidate in its inner grid can
never come out worse at the same design.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from bikeopt import performance as perf
from bikeopt import simulate as simu
from bikeopt.battery import BatteryModel
from bikeopt.blending import sigma_adherence
from bikeopt.cycle import DrivingCycle
from bikeopt.machines import FrontMotorModel, RearMotorModel
from bikeopt.nlp.problem import GAMMA_MIN, S_B_BOUNDS, S_M_BOUNDS
from bikeopt.nlp.start import _min_motor_scale, heuristic_design
from bikeopt.simulate import Design
from bikeopt.vehicle import VehicleParams, required_force

#: objective penalty per newton of rear capacity overflow
OVERFLOW_PENALTY = 1e4
GOLDEN = 0.5 * (3.0 - np.sqrt(5.0))


class _Instance:
    def __init__(self, cycle, p, front, rear, battery, mode, n_grid,
                 golden_iters):
        self.cycle, self.p = cycle, p
        self.front, self.rear, self.battery = front, rear, battery
        self.mode = mode
        self.n_grid = n_grid
        self.golden_iters = golden_iters
        self.win = battery.usable_fraction * battery.Ebar_max

    def mass(self, d: Design) -> float:
        return (self.p.m_fixed + self.battery.mbar_b * d.S_b
                + self.rear.mbar_m * d.S_m)

    def sigma_bounds(self, m: float):
        """Admissible per-step split interval [lo, hi]."""
        p, c = self.p, self.cycle
        F_v = required_force(p, m, c.v, c.a, c.theta)
        sig_a = sigma_adherence(p, m, F_v, c.theta)
        hi = np.minimum(1.0, sig_a)
        # rear wheel-lock floor while braking: (1-sig)*F_v >= mu*D
        D = (m * p.g * np.cos(c.theta) / p.w_b) * (p.w_b - p.b - p.h * p.c_r) \
            + (p.h / p.w_b) * F_v
        with np.errstate(divide="ignore", invalid="ignore"):
            lo_brk = 1.0 - p.mu_brk_peak_r * D / np.where(F_v < 0, F_v, -1.0)
        lo = np.where(F_v < 0, np.clip(lo_brk, 0.0, 1.0), 0.0)
        hi = np.clip(hi, lo, 1.0)
        return lo, hi, sig_a, F_v

    def step_cost(self, d: Design, m: float, sigma):
        """Per-step cost of one or many split candidates.

        ``sigma`` has shape (..., N); returns the same shape.  The cost
        is the per-step battery energy in Wh plus the weighted transfer
        force and a large penalty on rear capacity overflow.
        """
        c, p = self.cycle, self.p
        split = simu.heuristic_forces(p, self.front, self.rear, d, m,
                                      c.v, c.a, c.theta, sigma)
        pw = simu.powers_from_forces(p, self.front, self.rear, d,
                                     c.v, split["F_m_f"], split["F_m_r"])
        cost = (pw["P_b"] * c.dt / 3600.0 + p.w_obj * split["F_tr_f"]
                + OVERFLOW_PENALTY * split["rear_over"])
        return cost, split, pw

    def best_sigma(self, d: Design):
        """Inner search: optimal per-step splits for a fixed design."""
        m = self.mass(d)
        lo, hi, sig_a, _ = self.sigma_bounds(m)
        pinned = np.clip(np.clip(sig_a, 0.0, 1.0), lo, hi)
        if self.mode == "fixed-sigma-adherence":
            return pinned, m
        # coarse grid (pinned candidate appended for dominance)
        ts = np.linspace(0.0, 1.0, self.n_grid)[:, None]
        grid = lo + ts * (hi - lo)                       # (G, N)
        grid = np.vstack([grid, pinned[None, :]])
        cost = self.step_cost(d, m, grid)[0]             # (G+1, N)
        ibest = np.argmin(cost, axis=0)
        N = self.cycle.n
        cols = np.arange(N)
        # golden refinement inside the bracket around the best gridpoint
        span = (hi - lo) / (self.n_grid - 1)
        a = np.maximum(lo, grid[ibest, cols] - span)
        b = np.minimum(hi, grid[ibest, cols] + span)
        for _ in range(self.golden_iters):
            x1 = a + GOLDEN * (b - a)
            x2 = b - GOLDEN * (b - a)
            f1 = self.step_cost(d, m, x1)[0]
            f2 = self.step_cost(d, m, x2)[0]
            left = f1 < f2
            b = np.where(left, x2, b)
            a = np.where(left, a, x1)
        refined = 0.5 * (a + b)
        cand = np.vstack([refined[None, :], grid[ibest, cols][None, :],
                          pinned[None, :]])
        ccost = self.step_cost(d, m, cand)[0]
        sigma = cand[np.argmin(ccost, axis=0), cols]
        return sigma, m

    def evaluate(self, d: Design):
        """Inner-optimal trajectory and totals for a fixed design."""
        sigma, m = self.best_sigma(d)
        cost, split, pw = self.step_cost(d, m, sigma)
        drop = np.cumsum(pw["P_b"]) * self.cycle.dt
        E_c = float(drop[-1])
        return {
            "sigma": sigma, "m": m, "split": split, "pw": pw,
            "E_c": E_c, "max_drop": float(max(np.max(drop), 0.0)),
            "J": float(np.sum(cost)),
            "overflow": float(np.sum(split["rear_over"])),
        }

    def close_battery(self, gamma: float, S_m: float, S_b0: float = 1.0):
        """Smallest admissible battery scale for the sized powertrain."""
        S_b = float(np.clip(S_b0, *S_B_BOUNDS))
        ev = None
        for _ in range(60):
            d = Design(gamma=gamma, S_m=S_m, S_b=S_b)
            ev = self.evaluate(d)
            need = max(
                ev["E_c"] * self.p.D_r / (self.cycle.length_m * self.win),
                ev["max_drop"] / self.win,
                S_B_BOUNDS[0],
            )
            new = float(np.clip(need * (1.0 + 1e-9), *S_B_BOUNDS))
            if abs(new - S_b) <= 1e-12 * max(1.0, S_b):
                S_b = new
                break
            S_b = new
        d = Design(gamma=gamma, S_m=S_m, S_b=S_b)
        return d, self.evaluate(d)


def solve_reduced(cycle: DrivingCycle, p: VehicleParams,
                  front: FrontMotorModel, rear: RearMotorModel,
                  battery: BatteryModel, mode: str = "free-sigma",
                  n_grid: int = 33, golden_iters: int = 40,
                  warm_designs=(), maxiter: int = 60):
    """Run the decomposition; returns (design, inner evaluation, info)."""
    inst = _Instance(cycle, p, front, rear, battery, mode, n_grid,
                     golden_iters)
    d0 = heuristic_design(cycle, p, front, rear, battery)
    gamma_ub = rear.omega_max * p.r_wr / p.v_max

    sb_guess = {"S_b": d0.S_b}

    def closed(gamma, S_m):
        d, ev = inst.close_battery(float(gamma), float(S_m), sb_guess["S_b"])
        sb_guess["S_b"] = d.S_b
        return d, ev

    def objective(y):
        return closed(y[0], y[1])[1]["J"]

    def perf_margins(y):
        d, ev = closed(y[0], y[1])
        m = ev["m"]
        return np.array([
            p.t_a_max - perf.accel_time(p, m, front, rear, d.S_m, d.gamma),
            perf.top_speed_margin(p, m, front, rear, d.S_m) / 1e4,
            perf.power_gradeability_margin(p, m, front, rear, d.S_m) / 1e4,
            perf.torque_gradeability_margin(p, m, front, rear, d.S_m,
                                            d.gamma) / 1e3,
        ])

    y0 = np.array([d0.gamma, d0.S_m])
    res = minimize(
        objective, y0, method="SLSQP",
        bounds=[(GAMMA_MIN, gamma_ub), S_M_BOUNDS],
        constraints=[{"type": "ineq", "fun": perf_margins}],
        options={"maxiter": maxiter, "ftol": 1e-10, "eps": 1e-6},
    )

    # candidate pool: SLSQP result, heuristic start, top-gear corner with
    # the minimum performance-feasible motor scale, and any warm designs
    candidates = [(float(res.x[0]), float(res.x[1])), (d0.gamma, d0.S_m)]
    m0 = inst.mass(d0)
    candidates.append((gamma_ub, _min_motor_scale(p, m0, front, rear, gamma_ub)))
    for wd in warm_designs:
        candidates.append((wd.gamma, wd.S_m))

    best = None
    for gamma, S_m in candidates:
        gamma = float(np.clip(gamma, GAMMA_MIN, gamma_ub))
        S_m = float(np.clip(S_m, *S_M_BOUNDS))
        d, ev = closed(gamma, S_m)
        margins = perf_margins([gamma, S_m])
        feasible = bool(np.all(margins >= -1e-9) and ev["overflow"] <= 1e-9)
        key = (not feasible, ev["J"])
        if best is None or key < best[0]:
            best = (key, d, ev, feasible)
    _, d, ev, feasible = best
    info = {
        "iterations": int(res.nit),
        "slsqp_status": int(res.status),
        "feasible": feasible,
        "n_candidates": len(candidates),
    }
    return d, ev, info
