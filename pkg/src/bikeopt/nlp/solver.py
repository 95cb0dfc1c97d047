"""Solver facade: backend dispatch, post-solve projection, replay audit.

Whatever the backend, the returned trajectory is projected to exact
complementarity (the relaxed products only matter inside the solve) and
replayed through the forward simulator, so the reported consumption and
violation figures come from the same physics path used for any fixed
design.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from bikeopt import simulate as simu
from bikeopt.battery import BatteryModel
from bikeopt.cycle import DrivingCycle
from bikeopt.machines import FrontMotorModel, RearMotorModel
from bikeopt.nlp import problem as prob
from bikeopt.nlp import reduced
from bikeopt.nlp.layout import F_BRK_F, F_BRK_R, F_M_F, F_TR_F, GAMMA, SIGMA, S_B, S_M, F_M_R_NEG, F_M_R_POS
from bikeopt.nlp.start import point_from_simulation
from bikeopt.simulate import Design
from bikeopt.vehicle import VehicleParams


@dataclass(frozen=True)
class SolverOptions:
    backend: str = "reduced"        # "reduced" or "trust-constr"
    max_iter: int = 300
    tol: float = 1e-9
    n_grid: int = 33
    golden_iters: int = 40
    warm_designs: tuple = ()
    verbose: bool = False


@dataclass(frozen=True)
class SolveResult:
    design: Design
    mode: str
    backend: str
    sigma: np.ndarray
    F_m_f: np.ndarray
    F_m_r: np.ndarray
    F_brk_f: np.ndarray
    F_brk_r: np.ndarray
    F_tr_f: np.ndarray
    P_b: np.ndarray
    E_b: np.ndarray
    E_c: float                     # J over the cycle
    J: float                       # objective (Wh + weighted transfers)
    Ec_wh_per_km: float
    max_violation: float           # scaled constraint residual after replay
    status: str
    iterations: int
    wall_time: float
    sim: simu.SimResult = field(repr=False, default=None)

    @property
    def feasible(self) -> bool:
        return self.max_violation <= 1e-6


def _measure_violation(problem: prob.NlpProblem, z: np.ndarray) -> float:
    """Worst scaled residual: equalities and violated inequalities."""
    c_eq = problem.cons_eq(z)
    c_in = problem.cons_ineq(z)
    v_eq = float(np.max(np.abs(c_eq))) if c_eq.size else 0.0
    v_in = float(np.max(np.maximum(0.0, -c_in))) if c_in.size else 0.0
    return max(v_eq, v_in)


def _finish(cycle, p, front, rear, battery, mode, backend, design, sigma,
            forces, status, iterations, t0) -> SolveResult:
    """Replay the solved forces through the simulator and package up."""
    sim = simu.run(design, cycle, p, front, rear, battery, policy="trace",
                   forces={"sigma": sigma, **forces})
    audit = prob.build(cycle, p, front, rear, battery, mode="free-sigma")
    z = point_from_simulation(audit, sim)
    J = sim.E_c / 3600.0 + p.w_obj * float(np.sum(sim.F_tr_f))
    return SolveResult(
        design=design, mode=mode, backend=backend, sigma=sim.sigma,
        F_m_f=sim.F_m_f, F_m_r=sim.F_m_r, F_brk_f=sim.F_brk_f,
        F_brk_r=sim.F_brk_r, F_tr_f=sim.F_tr_f, P_b=sim.P_b, E_b=sim.E_b,
        E_c=sim.E_c, J=J, Ec_wh_per_km=sim.Ec_wh_per_km,
        max_violation=_measure_violation(audit, z), status=status,
        iterations=iterations, wall_time=time.perf_counter() - t0, sim=sim,
    )


def _solve_reduced(cycle, p, front, rear, battery, mode, opts, t0):
    design, ev, info = reduced.solve_reduced(
        cycle, p, front, rear, battery, mode=mode, n_grid=opts.n_grid,
        golden_iters=opts.golden_iters, warm_designs=opts.warm_designs,
        maxiter=opts.max_iter)
    split = ev["split"]
    forces = {k: split[k] for k in
              ("F_m_f", "F_m_r", "F_brk_f", "F_brk_r", "F_tr_f")}
    status = "optimal" if info["feasible"] else "infeasible-candidates"
    return _finish(cycle, p, front, rear, battery, mode, "reduced", design,
                   ev["sigma"], forces, status, info["iterations"], t0)


def _solve_trust_constr(cycle, p, front, rear, battery, mode, opts, t0):
    # warm start from the decomposition solution: the interior-point
    # method then only has to polish across the policy-family boundary
    warm = _solve_reduced(cycle, p, front, rear, battery, mode, opts, t0)
    sigma_pin = warm.sigma if mode == "fixed-sigma-adherence" else None
    problem = prob.build(cycle, p, front, rear, battery, mode=mode,
                         sigma_pin=sigma_pin)
    z0 = point_from_simulation(problem, warm.sim)
    z0 = np.clip(z0, problem.lb, problem.ub)
    zero_hess = sp.csr_matrix((problem.n, problem.n))
    constraints = [
        sopt.NonlinearConstraint(problem.cons_eq, 0.0, 0.0,
                                 jac=problem.jac_eq),
        sopt.NonlinearConstraint(problem.cons_ineq, 0.0, np.inf,
                                 jac=problem.jac_ineq),
    ]
    res = sopt.minimize(
        problem.objective, z0, jac=problem.gradient, method="trust-constr",
        hess=lambda z: zero_hess,
        bounds=sopt.Bounds(problem.lb, problem.ub), constraints=constraints,
        options={"maxiter": opts.max_iter, "gtol": opts.tol,
                 "xtol": opts.tol, "verbose": 3 if opts.verbose else 0},
    )
    x = problem.unscale(res.x)
    lay = problem.layout
    design = Design(gamma=float(x[GAMMA]), S_m=float(x[S_M]),
                    S_b=float(x[S_B]))
    # exact-complementarity projection of the rear force pair
    F_m_r = lay.get(x, F_M_R_POS) - lay.get(x, F_M_R_NEG)
    forces = {
        "F_m_f": lay.get(x, F_M_F), "F_m_r": F_m_r,
        "F_brk_f": lay.get(x, F_BRK_F), "F_brk_r": lay.get(x, F_BRK_R),
        "F_tr_f": lay.get(x, F_TR_F),
    }
    status = f"trust-constr:{res.status}"
    out = _finish(cycle, p, front, rear, battery, mode, "trust-constr",
                  design, lay.get(x, SIGMA), forces, status, int(res.nit),
                  t0)
    # an iteration-capped barrier iterate can be worse than its warm
    # start; never return the worse of the two
    if out.max_violation > 1e-6 or out.J > warm.J:
        return dataclasses.replace(
            warm, backend="trust-constr",
            status=f"{status}:kept-warm-start",
            wall_time=time.perf_counter() - t0)
    return out


def solve(cycle: DrivingCycle, p: VehicleParams, front: FrontMotorModel,
          rear: RearMotorModel, battery: BatteryModel,
          mode: str = "free-sigma",
          options: SolverOptions | None = None) -> SolveResult:
    """Size the powertrain and blend the braking/traction split.

    ``mode`` selects whether the per-step split is a free decision or
    pinned to the adherence value.  The default backend is the nested
    decomposition; ``trust-constr`` solves the full sparse transcription
    and is practical for short cycles.
    """
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    if mode not in ("free-sigma", "fixed-sigma-adherence"):
        raise ValueError(f"unknown mode {mode!r}")
    if opts.backend == "reduced":
        return _solve_reduced(cycle, p, front, rear, battery, mode, opts, t0)
    if opts.backend == "trust-constr":
        return _solve_trust_constr(cycle, p, front, rear, battery, mode,
                                   opts, t0)
    raise ValueError(f"unknown backend {opts.backend!r}")
