"""Sparse transcription of the joint sizing + blending problem.

Per-step physics (demand split, force balances, loss chain, battery
branch epigraph, forward-Euler energy dynamics) and the scalar
performance constraints are assembled into separated equality and
inequality evaluators with an analytic sparse Jacobian of fixed
structure.  Nonsmooth branches (gearbox direction, battery
charge/discharge) enter through nonnegative split pairs with relaxed
complementarity, so every evaluator is smooth and finite, including at
standstill samples.

All evaluators operate on a diagonally scaled decision vector (forces in
kN, powers in 10 kW, energies in MJ) so the variables are O(1) for
interior-point solvers; the scaling is part of the problem definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from bikeopt import performance as perf
from bikeopt.battery import BatteryModel
from bikeopt.cycle import DrivingCycle
from bikeopt.machines import FrontMotorModel, RearMotorModel
from bikeopt.nlp.layout import (
    BLOCK, DecisionLayout, E_B, F_BRK_F, F_BRK_R, F_M_F, F_M_R_NEG,
    F_M_R_POS, F_TR_F, GAMMA, P_B_NEG, P_B_POS, SIGMA, S_B, S_M,
)
from bikeopt.vehicle import VehicleParams

#: complementarity relaxation for the force pair (N^2) and power pair (W^2)
EPS_COMP_F = 1e-3
EPS_COMP_P = 1e-3

GAMMA_MIN = 1.0
S_M_BOUNDS = (0.05, 10.0)
S_B_BOUNDS = (0.02, 10.0)


class BuildError(ValueError):
    """Raised when a problem instance cannot be transcribed."""


@dataclass
class _Model:
    """Precomputed per-step data shared by all evaluators."""

    cycle: DrivingCycle
    p: VehicleParams
    front: FrontMotorModel
    rear: RearMotorModel
    battery: BatteryModel
    mode: str
    sigma_pin: np.ndarray | None
    layout: DecisionLayout = field(init=False)

    def __post_init__(self):
        c, p = self.cycle, self.p
        self.layout = DecisionLayout(c.n)
        self.N = c.n
        self.dt = c.dt
        self.v = c.v
        self.cos_t = np.cos(c.theta)
        self.sin_t = np.sin(c.theta)
        # per-unit-mass longitudinal demand and speed-only drag force
        self.A = p.c_r * p.g * self.cos_t + p.g * self.sin_t + c.a
        self.drag = 0.5 * p.rho * p.CdA * self.v ** 2
        # front loss map constants at the per-step front speed
        wf = self.v / p.r_wf
        cf = self.front.coeffs
        self.c0f = (cf.a_Fe * wf + cf.a_Mech + cf.b_Mech * wf
                    + cf.c_Mech * wf ** 2 + cf.d_Mech * wf ** 3)
        self.cuf = cf.a_Cu + cf.b_Cu * wf ** 2
        self.wrb = self.v / p.r_wr          # omega_r = gamma * wrb
        self.geo = p.w_b - p.b - p.h * p.c_r

    # -- design-scalar helpers -------------------------------------------

    def mass(self, x):
        return (self.p.m_fixed + self.battery.mbar_b * x[S_B]
                + self.rear.mbar_m * x[S_M])

    def f_v(self, x):
        return self.mass(x) * self.A + self.drag

    # -- rear machine loss pieces ----------------------------------------

    def mech_iron_poly(self, w):
        cr = self.rear.coeffs
        return (cr.a_Fe * w + cr.a_Mech + cr.b_Mech * w
                + cr.c_Mech * w ** 2 + cr.d_Mech * w ** 3)

    def mech_iron_poly_d(self, w):
        cr = self.rear.coeffs
        return cr.a_Fe + cr.b_Mech + 2 * cr.c_Mech * w + 3 * cr.d_Mech * w ** 2

    def q_copper(self, S):
        r = self.rear
        L = r.l_co + r.l_ew
        return (S * r.l_co + r.l_ew) / (L * S ** 2)

    def q_copper_d(self, S):
        r = self.rear
        L = r.l_co + r.l_ew
        return -(r.l_co * S + 2 * r.l_ew) / (L * S ** 3)

    def p_ac(self, x):
        """AC-side power per step plus its partials, as one pass."""
        p = self.p
        gamma, S = x[GAMMA], x[S_M]
        lay = self.layout
        Ff = lay.get(x, F_M_F)
        Frp = lay.get(x, F_M_R_POS)
        Frn = lay.get(x, F_M_R_NEG)
        v = self.v
        eta = p.eta_gb
        u = Frp / eta - Frn * eta
        w = gamma * self.wrb
        cr = self.rear.coeffs
        cu = cr.a_Cu + cr.b_Cu * w ** 2
        Q = self.q_copper(S)
        R2 = p.r_wr ** 2
        ucoef = Q * cu * R2 / gamma ** 2
        p_ac = (Ff * v + self.c0f + self.cuf * (Ff * p.r_wf) ** 2
                + v * u + S * self.mech_iron_poly(w) + ucoef * u ** 2)
        d_Ff = v + 2 * self.cuf * p.r_wf ** 2 * Ff
        d_u = 2 * ucoef * u
        d_Frp = v / eta + d_u / eta
        d_Frn = -v * eta - d_u * eta
        d_gamma = (S * self.mech_iron_poly_d(w) * self.wrb
                   + Q * u ** 2 * R2 * (2 * cr.b_Cu * self.wrb ** 2 / gamma
                                        - 2 * cu / gamma ** 3))
        d_S = self.mech_iron_poly(w) + self.q_copper_d(S) * cu * u ** 2 * R2 / gamma ** 2
        return p_ac, d_Ff, d_Frp, d_Frn, d_gamma, d_S


def _variable_bounds(m: _Model):
    p, lay = m.p, m.layout
    n = lay.n
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    gamma_ub = m.rear.omega_max * p.r_wr / p.v_max
    if gamma_ub < GAMMA_MIN:
        raise BuildError("gear-ratio box is empty: omega_max too low for v_max")
    lb[GAMMA], ub[GAMMA] = GAMMA_MIN, gamma_ub
    lb[S_M], ub[S_M] = S_M_BOUNDS
    lb[S_B], ub[S_B] = S_B_BOUNDS
    f_big = 5e4
    p_big = 10.0 * (m.front.P_max + m.rear.Pbar_max * S_M_BOUNDS[1])
    e_big = m.battery.xi_max * S_B_BOUNDS[1] * m.battery.Ebar_max

    def set_field(fieldno, lo, hi):
        cols = lay.col(fieldno)
        lb[cols] = lo
        ub[cols] = hi

    ff_cap = m.front.T_max / p.r_wf
    set_field(SIGMA, 0.0, 1.0)
    set_field(F_M_F, -ff_cap, ff_cap)
    set_field(F_M_R_POS, 0.0, f_big)
    set_field(F_M_R_NEG, 0.0, f_big)
    set_field(F_BRK_F, -f_big, 0.0)
    set_field(F_BRK_R, -f_big, 0.0)
    set_field(F_TR_F, 0.0, f_big)
    set_field(P_B_POS, 0.0, p_big)
    set_field(P_B_NEG, 0.0, p_big)
    set_field(E_B, 0.0, e_big)
    if m.mode == "fixed-sigma-adherence":
        cols = lay.col(SIGMA)
        lb[cols] = m.sigma_pin
        ub[cols] = m.sigma_pin
    return lb, ub


class NlpProblem:
    """Scaled smooth NLP with separated equalities/inequalities.

    Equalities are ordered: per-step front balance, per-step rear
    balance, forward-Euler energy links, initial-energy pin.
    Inequalities are grouped per family (adherence, rear lock, battery
    branches, complementarity, coherence, motor limits, SoC window,
    performance scalars, range); all are written as g(x) >= 0.
    """

    #: inequality family labels in row order (N rows each unless noted)
    INEQ_FAMILIES = [
        "sigma-adherence", "rear-adherence", "battery-discharge",
        "battery-charge", "comp-force", "comp-power", "coh-motor",
        "coh-front-brake", "coh-rear-brake", "front-power-hi",
        "front-power-lo", "rear-power-hi", "rear-power-lo",
        "rear-torque-hi", "rear-torque-lo", "soc-lo", "soc-hi",
        # scalar tail: final-soc, accel-time, top-speed, power-grade,
        # torque-grade, range
    ]

    def __init__(self, model: _Model):
        self._m = model
        self.layout = model.layout
        self.mode = model.mode
        N = model.N
        self.n = self.layout.n
        self.n_eq = 3 * N
        self.n_ineq = 17 * N + 6
        lb_phys, ub_phys = _variable_bounds(model)
        self.x_scale = np.ones(self.n)
        for f in (F_M_F, F_M_R_POS, F_M_R_NEG, F_BRK_F, F_BRK_R, F_TR_F):
            self.x_scale[self.layout.col(f)] = 1e3
        for f in (P_B_POS, P_B_NEG):
            self.x_scale[self.layout.col(f)] = 1e4
        self.x_scale[self.layout.col(E_B)] = 1e6
        self.lb = lb_phys / self.x_scale
        self.ub = ub_phys / self.x_scale
        self.c_eq_scale = np.concatenate([
            np.full(2 * N, 1e3),           # force balances
            np.full(N - 1, 1e6),           # Euler links
            [1e6],                         # initial energy
        ])
        self.c_ineq_scale = np.concatenate([
            np.ones(N),                    # sigma adherence
            np.full(N, 1e3),               # rear adherence force margin
            np.full(2 * N, 1e4),           # battery branches
            np.full(N, 1e6),               # comp force (N^2)
            np.full(N, 1e8),               # comp power (W^2)
            np.full(3 * N, 1e6),           # coherence products
            np.full(4 * N, 1e4),           # front/rear power limits
            np.full(2 * N, 1e3),           # rear torque limits
            np.full(2 * N, 1e6),           # SoC window
            [1e6, 1.0, 1e4, 1e4, 1e3, 1e6],
        ])
        self._jac_structure()

    # -- public scaled API -----------------------------------------------

    def unscale(self, z):
        return np.asarray(z) * self.x_scale

    def scale(self, x):
        return np.asarray(x) / self.x_scale

    def objective(self, z):
        return self._objective_phys(self.unscale(z))

    def gradient(self, z):
        return self._gradient_phys() * self.x_scale

    def cons_eq(self, z):
        return self._cons_eq_phys(self.unscale(z)) / self.c_eq_scale

    def cons_ineq(self, z):
        return self._cons_ineq_phys(self.unscale(z)) / self.c_ineq_scale

    def jac_eq(self, z):
        J = self._jac_eq_phys(self.unscale(z))
        return sp.diags(1.0 / self.c_eq_scale) @ J @ sp.diags(self.x_scale)

    def jac_ineq(self, z):
        J = self._jac_ineq_phys(self.unscale(z))
        return sp.diags(1.0 / self.c_ineq_scale) @ J @ sp.diags(self.x_scale)

    def ineq_family(self, row: int) -> tuple[str, int | None]:
        """Name the inequality family and step index of a scaled row."""
        N = self._m.N
        if row < 17 * N:
            return self.INEQ_FAMILIES[row // N], row % N
        tail = ["final-soc", "accel-time", "top-speed", "power-grade",
                "torque-grade", "range"]
        return tail[row - 17 * N], None

    # -- objective --------------------------------------------------------

    def _objective_phys(self, x):
        m = self._m
        lay = self.layout
        e_c_wh = (np.sum(lay.get(x, P_B_POS)) - np.sum(lay.get(x, P_B_NEG))) \
            * m.dt / 3600.0
        return e_c_wh + m.p.w_obj * np.sum(lay.get(x, F_TR_F))

    def _gradient_phys(self):
        m = self._m
        g = np.zeros(self.n)
        g[self.layout.col(P_B_POS)] = m.dt / 3600.0
        g[self.layout.col(P_B_NEG)] = -m.dt / 3600.0
        g[self.layout.col(F_TR_F)] = m.p.w_obj
        return g

    # -- equalities -------------------------------------------------------

    def _cons_eq_phys(self, x):
        m = self._m
        lay = self.layout
        F_v = m.f_v(x)
        sig = lay.get(x, SIGMA)
        Ff = lay.get(x, F_M_F)
        Frp = lay.get(x, F_M_R_POS)
        Frn = lay.get(x, F_M_R_NEG)
        Fbf = lay.get(x, F_BRK_F)
        Fbr = lay.get(x, F_BRK_R)
        Ftr = lay.get(x, F_TR_F)
        Pbp = lay.get(x, P_B_POS)
        Pbn = lay.get(x, P_B_NEG)
        Eb = lay.get(x, E_B)
        g_front = sig * F_v - Ff - Fbf - Ftr
        g_rear = (1.0 - sig) * F_v + Ftr - (Frp - Frn) - Fbr
        g_euler = Eb[1:] - Eb[:-1] + (Pbp[:-1] - Pbn[:-1]) * m.dt
        g_init = Eb[0] - m.battery.xi_max * m.battery.Ebar_max * x[S_B]
        return np.concatenate([g_front, g_rear, g_euler, [g_init]])

    # -- inequalities -----------------------------------------------------

    def _cons_ineq_phys(self, x):
        m = self._m
        p = m.p
        lay = self.layout
        N = m.N
        gamma, S = x[GAMMA], x[S_M]
        mass = m.mass(x)
        F_v = m.f_v(x)
        sig = lay.get(x, SIGMA)
        Ff = lay.get(x, F_M_F)
        Frp = lay.get(x, F_M_R_POS)
        Frn = lay.get(x, F_M_R_NEG)
        Fbf = lay.get(x, F_BRK_F)
        Fbr = lay.get(x, F_BRK_R)
        Ftr = lay.get(x, F_TR_F)
        Pbp = lay.get(x, P_B_POS)
        Pbn = lay.get(x, P_B_NEG)
        Eb = lay.get(x, E_B)
        eta = p.eta_gb

        sig_a = (p.b / p.w_b
                 - (p.h / p.w_b) * ((m.A + m.drag / mass) / (p.g * m.cos_t) - p.c_r))
        g0 = sig_a - sig

        D = (mass * p.g * m.cos_t / p.w_b) * m.geo + (p.h / p.w_b) * F_v
        X_r = (1.0 - sig) * F_v + Ftr
        g1 = X_r - p.mu_brk_peak_r * D

        p_ac = m.p_ac(x)[0]
        P_b = Pbp - Pbn
        g2 = P_b - (p_ac / p.eta_inv + p.P_aux) / p.eta_b
        g3 = P_b - (p.eta_inv * p_ac + p.P_aux) * p.eta_b

        g4 = EPS_COMP_F - Frp * Frn
        g5 = EPS_COMP_P - Pbp * Pbn

        Fr = Frp - Frn
        g6 = Ff * Fr
        g7 = Ff * Fbf
        g8 = Fr * Fbr

        P_m_r = m.v * (Frp / eta - Frn * eta)
        g9 = m.front.P_max - Ff * m.v
        g10 = m.front.P_max + Ff * m.v
        g11 = m.rear.Pbar_max * S - P_m_r
        g12 = m.rear.Pbar_max * S + P_m_r
        u_r = (Frp / eta - Frn * eta) * p.r_wr
        g13 = m.rear.Tbar_max * S * gamma - u_r
        g14 = m.rear.Tbar_max * S * gamma + u_r

        e_lo = m.battery.xi_min * m.battery.Ebar_max * x[S_B]
        e_hi = m.battery.xi_max * m.battery.Ebar_max * x[S_B]
        g15 = Eb - e_lo
        g16 = e_hi - Eb

        e_final = Eb[-1] - (Pbp[-1] - Pbn[-1]) * m.dt
        g17 = e_final - e_lo

        t_a = perf.accel_time(p, mass, m.front, m.rear, S, gamma)
        g18 = p.t_a_max - t_a
        g19 = perf.top_speed_margin(p, mass, m.front, m.rear, S)
        g20 = perf.power_gradeability_margin(p, mass, m.front, m.rear, S)
        g21 = perf.torque_gradeability_margin(p, mass, m.front, m.rear, S, gamma)

        win = m.battery.usable_fraction * m.battery.Ebar_max
        e_c = np.sum(Pbp - Pbn) * m.dt
        g22 = x[S_B] * win * m.cycle.length_m / p.D_r - e_c

        return np.concatenate([
            g0, g1, g2, g3, g4, g5, g6, g7, g8, g9, g10, g11, g12, g13, g14,
            g15, g16, [g17, g18, g19, g20, g21, g22],
        ])

    # -- Jacobians --------------------------------------------------------

    def _jac_structure(self):
        """Fixed sparsity pattern; values are filled per evaluation."""
        m = self._m
        lay = self.layout
        N = m.N
        ks = np.arange(N)

        def cols(f):
            return lay.col(f)

        rows_eq, cols_eq = [], []

        def add_eq(r, c):
            rows_eq.append(np.broadcast_to(r, np.shape(c)).ravel()
                           if np.ndim(c) else np.atleast_1d(r))
            cols_eq.append(np.atleast_1d(c))

        # front balance rows 0..N-1
        for c in (cols(SIGMA), cols(F_M_F), cols(F_BRK_F), cols(F_TR_F)):
            add_eq(ks, c)
        add_eq(ks, np.full(N, S_M))
        add_eq(ks, np.full(N, S_B))
        # rear balance rows N..2N-1
        for c in (cols(SIGMA), cols(F_TR_F), cols(F_M_R_POS), cols(F_M_R_NEG),
                  cols(F_BRK_R)):
            add_eq(N + ks, c)
        add_eq(N + ks, np.full(N, S_M))
        add_eq(N + ks, np.full(N, S_B))
        # Euler rows 2N..3N-2
        ke = np.arange(N - 1)
        for c in (cols(E_B)[1:], cols(E_B)[:-1], cols(P_B_POS)[:-1],
                  cols(P_B_NEG)[:-1]):
            add_eq(2 * N + ke, c)
        # init row
        add_eq(3 * N - 1, lay.idx(E_B, 0))
        add_eq(3 * N - 1, S_B)

        self._eq_rows = np.concatenate([np.ravel(r) for r in rows_eq])
        self._eq_cols = np.concatenate([np.ravel(c) for c in cols_eq])

        rows_in, cols_in = [], []

        def add_in(r, c):
            rows_in.append(np.ravel(np.broadcast_to(r, np.shape(np.ravel(c)))))
            cols_in.append(np.ravel(c))

        base = 0
        # g0 sigma adherence
        add_in(base + ks, cols(SIGMA))
        add_in(base + ks, np.full(N, S_M))
        add_in(base + ks, np.full(N, S_B))
        base += N
        # g1 rear adherence
        add_in(base + ks, cols(SIGMA))
        add_in(base + ks, cols(F_TR_F))
        add_in(base + ks, np.full(N, S_M))
        add_in(base + ks, np.full(N, S_B))
        base += N
        # g2, g3 battery branches
        for _ in range(2):
            for c in (cols(P_B_POS), cols(P_B_NEG), cols(F_M_F),
                      cols(F_M_R_POS), cols(F_M_R_NEG)):
                add_in(base + ks, c)
            add_in(base + ks, np.full(N, GAMMA))
            add_in(base + ks, np.full(N, S_M))
            base += N
        # g4 comp force, g5 comp power
        add_in(base + ks, cols(F_M_R_POS))
        add_in(base + ks, cols(F_M_R_NEG))
        base += N
        add_in(base + ks, cols(P_B_POS))
        add_in(base + ks, cols(P_B_NEG))
        base += N
        # g6..g8 coherence
        add_in(base + ks, cols(F_M_F))
        add_in(base + ks, cols(F_M_R_POS))
        add_in(base + ks, cols(F_M_R_NEG))
        base += N
        add_in(base + ks, cols(F_M_F))
        add_in(base + ks, cols(F_BRK_F))
        base += N
        add_in(base + ks, cols(F_M_R_POS))
        add_in(base + ks, cols(F_M_R_NEG))
        add_in(base + ks, cols(F_BRK_R))
        base += N
        # g9, g10 front power
        add_in(base + ks, cols(F_M_F))
        base += N
        add_in(base + ks, cols(F_M_F))
        base += N
        # g11..g14 rear power/torque
        for _ in range(4):
            add_in(base + ks, cols(F_M_R_POS))
            add_in(base + ks, cols(F_M_R_NEG))
            add_in(base + ks, np.full(N, S_M))
            base += N
        # gamma appears in the torque rows only
        add_in(base - 2 * N + ks, np.full(N, GAMMA))
        add_in(base - N + ks, np.full(N, GAMMA))
        # g15, g16 SoC
        add_in(base + ks, cols(E_B))
        add_in(base + ks, np.full(N, S_B))
        base += N
        add_in(base + ks, cols(E_B))
        add_in(base + ks, np.full(N, S_B))
        base += N
        # g17 final SoC
        add_in(base, lay.idx(E_B, N - 1))
        add_in(base, lay.idx(P_B_POS, N - 1))
        add_in(base, lay.idx(P_B_NEG, N - 1))
        add_in(base, S_B)
        base += 1
        # g18 accel time
        add_in(base, GAMMA)
        add_in(base, S_M)
        add_in(base, S_B)
        base += 1
        # g19 top speed, g20 power grade
        for _ in range(2):
            add_in(base, S_M)
            add_in(base, S_B)
            base += 1
        # g21 torque grade
        add_in(base, GAMMA)
        add_in(base, S_M)
        add_in(base, S_B)
        base += 1
        # g22 range
        add_in(base, S_B)
        add_in(np.full(N, base), cols(P_B_POS))
        add_in(np.full(N, base), cols(P_B_NEG))

        self._in_rows = np.concatenate(rows_in)
        self._in_cols = np.concatenate(cols_in)

    def _jac_eq_phys(self, x):
        m = self._m
        lay = self.layout
        N = m.N
        F_v = m.f_v(x)
        sig = lay.get(x, SIGMA)
        dFv_dSm = m.rear.mbar_m * m.A
        dFv_dSb = m.battery.mbar_b * m.A
        one = np.ones(N)
        vals = [
            # front balance
            F_v, -one, -one, -one, sig * dFv_dSm, sig * dFv_dSb,
            # rear balance
            -F_v, one, -one, one, -one, (1 - sig) * dFv_dSm, (1 - sig) * dFv_dSb,
            # Euler
            np.ones(N - 1), -np.ones(N - 1),
            np.full(N - 1, m.dt), np.full(N - 1, -m.dt),
            # init
            [1.0], [-m.battery.xi_max * m.battery.Ebar_max],
        ]
        data = np.concatenate([np.ravel(v) for v in vals])
        return sp.coo_matrix((data, (self._eq_rows, self._eq_cols)),
                             shape=(self.n_eq, self.n)).tocsr()

    def _jac_ineq_phys(self, x):
        m = self._m
        p = m.p
        lay = self.layout
        N = m.N
        gamma, S = x[GAMMA], x[S_M]
        mass = m.mass(x)
        F_v = m.f_v(x)
        sig = lay.get(x, SIGMA)
        Ff = lay.get(x, F_M_F)
        Frp = lay.get(x, F_M_R_POS)
        Frn = lay.get(x, F_M_R_NEG)
        Fbf = lay.get(x, F_BRK_F)
        Fbr = lay.get(x, F_BRK_R)
        eta = p.eta_gb
        one = np.ones(N)
        dm_dSm = m.rear.mbar_m
        dm_dSb = m.battery.mbar_b
        dFv_dSm = dm_dSm * m.A
        dFv_dSb = dm_dSb * m.A

        vals = []

        # g0: sigma adherence
        dsig_a_dm = (p.h / p.w_b) * m.drag / (mass ** 2 * p.g * m.cos_t)
        vals += [-one, dsig_a_dm * dm_dSm, dsig_a_dm * dm_dSb]

        # g1: rear adherence
        dD_dm = (p.g * m.cos_t / p.w_b) * m.geo
        mu = p.mu_brk_peak_r
        dg1_dSm = (1 - sig) * dFv_dSm - mu * (dD_dm * dm_dSm + (p.h / p.w_b) * dFv_dSm)
        dg1_dSb = (1 - sig) * dFv_dSb - mu * (dD_dm * dm_dSb + (p.h / p.w_b) * dFv_dSb)
        vals += [-F_v, one, dg1_dSm, dg1_dSb]

        # g2, g3: battery branches
        _, dFf, dFrp, dFrn, dgam, dS = m.p_ac(x)
        for coef in (1.0 / (p.eta_inv * p.eta_b), p.eta_inv * p.eta_b):
            vals += [one, -one, -coef * dFf, -coef * dFrp, -coef * dFrn,
                     np.full(N, -coef) * dgam, np.full(N, -coef) * dS]

        # g4, g5 complementarity
        Pbp = lay.get(x, P_B_POS)
        Pbn = lay.get(x, P_B_NEG)
        vals += [-Frn, -Frp]
        vals += [-Pbn, -Pbp]

        # g6..g8 coherence
        Fr = Frp - Frn
        vals += [Fr, Ff, -Ff]
        vals += [Fbf, Ff]
        vals += [Fbr, -Fbr, Fr]

        # g9, g10 front power
        vals += [-m.v]
        vals += [m.v]

        # g11..g14 rear power/torque (order matches structure: per family
        # Frp, Frn, S_m; gamma columns for the torque rows appended after)
        vals += [-m.v / eta, m.v * eta, np.full(N, m.rear.Pbar_max)]
        vals += [m.v / eta, -m.v * eta, np.full(N, m.rear.Pbar_max)]
        vals += [np.full(N, -p.r_wr / eta), np.full(N, p.r_wr * eta),
                 np.full(N, m.rear.Tbar_max * gamma)]
        vals += [np.full(N, p.r_wr / eta), np.full(N, -p.r_wr * eta),
                 np.full(N, m.rear.Tbar_max * gamma)]
        vals += [np.full(N, m.rear.Tbar_max * S), np.full(N, m.rear.Tbar_max * S)]

        # g15, g16 SoC
        e_ref = m.battery.Ebar_max
        vals += [one, np.full(N, -m.battery.xi_min * e_ref)]
        vals += [-one, np.full(N, m.battery.xi_max * e_ref)]

        # g17 final SoC
        vals += [[1.0], [-m.dt], [m.dt], [-m.battery.xi_min * e_ref]]

        # g18 accel time: g = t_a_max - t_a
        dta = perf.accel_time_gradient(p, mass, m.front, m.rear, S, gamma,
                                       dm_dSm, dm_dSb)
        vals += [[-dta[0]], [-dta[1]], [-dta[2]]]

        # g19 top speed
        vals += [[m.rear.Pbar_max * p.eta_gb - dm_dSm * p.g * p.c_r * p.v_max],
                 [-dm_dSb * p.g * p.c_r * p.v_max]]
        # g20 power gradeability
        sth = math.sin(p.theta_max)
        vals += [[m.rear.Pbar_max * p.eta_gb - dm_dSm * p.g * sth * p.v_min_climb],
                 [-dm_dSb * p.g * sth * p.v_min_climb]]
        # g21 torque gradeability
        vals += [[S * m.rear.Tbar_max / p.r_wr],
                 [m.rear.Tbar_max * gamma / p.r_wr - dm_dSm * p.g * sth],
                 [-dm_dSb * p.g * sth]]
        # g22 range
        win = m.battery.usable_fraction * e_ref
        vals += [[win * m.cycle.length_m / p.D_r],
                 np.full(N, -m.dt), np.full(N, m.dt)]

        data = np.concatenate([np.ravel(np.asarray(v, dtype=float)) for v in vals])
        return sp.coo_matrix((data, (self._in_rows, self._in_cols)),
                             shape=(self.n_ineq, self.n)).tocsr()


def build(cycle: DrivingCycle, params: VehicleParams, front: FrontMotorModel,
          rear: RearMotorModel, battery: BatteryModel,
          mode: str = "free-sigma", sigma_pin=None) -> NlpProblem:
    """Transcribe one instance.

    ``mode`` is ``free-sigma`` or ``fixed-sigma-adherence``; the fixed
    variant pins every per-step split to ``sigma_pin`` (clamped adherence
    values precomputed at a nominal design mass).
    """
    if cycle.n < 2:
        raise BuildError("cycle too short")
    if mode not in ("free-sigma", "fixed-sigma-adherence"):
        raise BuildError(f"unknown mode {mode!r}")
    if mode == "fixed-sigma-adherence":
        if sigma_pin is None:
            raise BuildError("fixed mode needs sigma_pin")
        sigma_pin = np.asarray(sigma_pin, dtype=float)
        if sigma_pin.shape != cycle.v.shape:
            raise BuildError("sigma_pin length mismatch")
    model = _Model(cycle=cycle, p=params, front=front, rear=rear,
                   battery=battery, mode=mode, sigma_pin=sigma_pin)
    return NlpProblem(model)


@dataclass(frozen=True)
class DerivativeReport:
    max_rel_error: float
    worst_coordinate: int
    n_checked: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= 1e-6


def check_derivatives(problem: NlpProblem, z: np.ndarray, n_samples: int = 100,
                      seed: int = 0, step: float = 1e-6) -> DerivativeReport:
    """Central finite differences vs the analytic Jacobian and gradient.

    Samples random coordinates of the scaled decision vector; pinned
    coordinates (equal bounds) are skipped since their columns never
    enter the solve.  The objective step is widened with the objective's
    magnitude so subtractive cancellation stays below the tolerance (the
    objective is linear, so the larger step costs no truncation error).
    """
    rng = np.random.default_rng(seed)
    free = np.nonzero(problem.ub - problem.lb > 0)[0]
    coords = rng.choice(free, size=min(n_samples, free.size), replace=False)
    J_eq = problem.jac_eq(z).tocsc()
    J_in = problem.jac_ineq(z).tocsc()
    grad = problem.gradient(z)
    h_obj_mag = max(1.0, math.sqrt(abs(problem.objective(z))))
    worst = (0.0, -1)
    for j in coords:
        h = step * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        fd_eq = (problem.cons_eq(zp) - problem.cons_eq(zm)) / (2 * h)
        fd_in = (problem.cons_ineq(zp) - problem.cons_ineq(zm)) / (2 * h)
        ho = h * h_obj_mag
        zp[j], zm[j] = z[j] + ho, z[j] - ho
        fd_obj = (problem.objective(zp) - problem.objective(zm)) / (2 * ho)
        for fd, an in ((fd_eq, np.asarray(J_eq[:, j].todense()).ravel()),
                       (fd_in, np.asarray(J_in[:, j].todense()).ravel()),
                       (np.array([fd_obj]), np.array([grad[j]]))):
            denom = np.maximum(1.0, np.abs(an))
            err = float(np.max(np.abs(fd - an) / denom))
            if err > worst[0]:
                worst = (err, int(j))
    return DerivativeReport(max_rel_error=worst[0], worst_coordinate=worst[1],
                            n_checked=len(coords))
