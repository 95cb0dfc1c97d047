"""Electric machine models: loss polynomials, scaling, limits, map fitting.

The rear motor scales linearly along its axial dimension; torque, power,
mass, iron and mechanical losses scale with the factor ``S_m``, while the
copper loss picks up the end-winding correction.  The front in-wheel
motor uses the same loss family at fixed unit scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls


class MotorModelError(ValueError):
    """Raised for invalid motor model data."""


class IdentifiabilityError(MotorModelError):
    """Raised when a loss-map fit lacks the excitation to identify terms."""


@dataclass(frozen=True)
class LossCoefficients:
    """Seven-term loss family.

    Iron: a_Fe * omega.  Mechanical: a_M + b_M*omega + c_M*omega^2 +
    d_M*omega^3.  Copper: (a_Cu + b_Cu*omega^2) * torque^2.  The linear
    iron and mechanical speed terms are collinear on any single map, so
    fitted models carry the combined slope in ``a_Fe`` with ``b_Mech`` 0.
    """

    a_Fe: float
    a_Mech: float
    b_Mech: float
    c_Mech: float
    d_Mech: float
    a_Cu: float
    b_Cu: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a_Fe, self.a_Mech, self.b_Mech, self.c_Mech,
                         self.d_Mech, self.a_Cu, self.b_Cu])


def _validate_loss_grid(coeffs: LossCoefficients, omega_max: float, t_max: float):
    """Numerically check nonnegativity of each loss family on the box."""
    w = np.linspace(0.0, omega_max, 64)
    fe = coeffs.a_Fe * w
    mech = coeffs.a_Mech + coeffs.b_Mech * w + coeffs.c_Mech * w ** 2 + coeffs.d_Mech * w ** 3
    cu_factor = coeffs.a_Cu + coeffs.b_Cu * w ** 2
    if np.any(fe < -1e-9) or np.any(mech < -1e-9) or np.any(cu_factor * t_max ** 2 < -1e-9):
        raise MotorModelError("loss polynomials go negative on the operating grid")


@dataclass(frozen=True)
class RearMotorModel:
    """Reference rear motor with axial scaling geometry."""

    Pbar_max: float      # reference max power, W
    Tbar_max: float      # reference max torque, N*m
    omega_max: float     # max speed, rad/s
    mbar_m: float        # reference mass, kg
    coeffs: LossCoefficients
    l_co: float          # stack length, m
    l_ew: float          # end-winding length, m

    def __post_init__(self):
        for name in ("Pbar_max", "Tbar_max", "omega_max", "mbar_m", "l_co", "l_ew"):
            if getattr(self, name) <= 0:
                raise MotorModelError(f"{name} must be strictly positive")
        _validate_loss_grid(self.coeffs, self.omega_max, self.Tbar_max)

    def copper_prefactor(self, S_m):
        """End-winding-corrected scale factor multiplying the copper loss."""
        L = self.l_co + self.l_ew
        return (S_m * self.l_co + self.l_ew) / L


@dataclass(frozen=True)
class FrontMotorModel:
    """Fixed-size in-wheel front motor, directly coupled (no reduction)."""

    P_max: float
    T_max: float
    omega_max: float
    omega_rated: float   # end of the constant-torque region, rad/s
    coeffs: LossCoefficients

    def __post_init__(self):
        for name in ("P_max", "T_max", "omega_max", "omega_rated"):
            if getattr(self, name) <= 0:
                raise MotorModelError(f"{name} must be strictly positive")
        _validate_loss_grid(self.coeffs, self.omega_max, self.T_max)


@dataclass(frozen=True)
class LossMapSample:
    omega: float
    torque: float
    p_loss: float


# ---------------------------------------------------------------------------
# Kinematic and power relations
# ---------------------------------------------------------------------------


def rear_speed(v, gamma: float, r_wr: float):
    """Rear motor speed from vehicle speed, assuming no tire slip."""
    return v * gamma / r_wr


def front_speed(v, r_wf: float):
    return v / r_wf


def gamma_upper_bound(m: RearMotorModel, r_wr: float, v_max: float) -> float:
    """Largest gear ratio that keeps the motor below its max speed at v_max."""
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    return m.omega_max * r_wr / v_max


def rear_mech_power(F_m_r, v, eta_gb: float):
    """Electrical-side rear power: traction divides by the gearbox
    efficiency, regeneration multiplies.  Continuous at zero force."""
    F_m_r = np.asarray(F_m_r, dtype=float)
    return np.where(F_m_r >= 0, F_m_r * v / eta_gb, F_m_r * v * eta_gb)


def rear_motor_torque(F_m_r, gamma: float, r_wr: float, eta_gb: float):
    """Motor-side torque of the rear machine, finite at standstill."""
    F_m_r = np.asarray(F_m_r, dtype=float)
    per_force = np.where(F_m_r >= 0, 1.0 / eta_gb, eta_gb)
    return F_m_r * per_force * r_wr / gamma


def rear_losses(m: RearMotorModel, S_m: float, omega, torque):
    """Scaled (iron, mechanical, copper) losses of the rear machine.

    ``torque`` is the motor-side shaft torque; the copper loss uses the
    per-unit-scale torque torque/S_m, which is the finite-at-standstill
    equivalent of P/(omega*S_m).
    """
    if S_m <= 0:
        raise MotorModelError("S_m must be strictly positive")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or np.any(omega > m.omega_max * (1 + 1e-9)):
        raise MotorModelError("omega outside [0, omega_max]")
    c = m.coeffs
    p_fe = S_m * c.a_Fe * omega
    p_mech = S_m * (c.a_Mech + c.b_Mech * omega + c.c_Mech * omega ** 2
                    + c.d_Mech * omega ** 3)
    torque = np.asarray(torque, dtype=float)
    p_cu = m.copper_prefactor(S_m) * (c.a_Cu + c.b_Cu * omega ** 2) * (torque / S_m) ** 2
    return p_fe, p_mech, p_cu


def front_losses(m: FrontMotorModel, omega, torque):
    """Total front motor loss: same family as the rear at unit scale."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or np.any(omega > m.omega_max * (1 + 1e-9)):
        raise MotorModelError("omega outside [0, omega_max]")
    c = m.coeffs
    torque = np.asarray(torque, dtype=float)
    return (c.a_Fe * omega
            + c.a_Mech + c.b_Mech * omega + c.c_Mech * omega ** 2 + c.d_Mech * omega ** 3
            + (c.a_Cu + c.b_Cu * omega ** 2) * torque ** 2)


def total_ac_power(P_m_f, P_loss_f, P_m_r, P_Fe_r, P_Mech_r, P_Cu_r):
    """Overall AC-side electric power: both shaft powers plus all losses."""
    return P_m_f + P_loss_f + P_m_r + P_Fe_r + P_Mech_r + P_Cu_r


def check_limits(front: FrontMotorModel, rear: RearMotorModel, S_m: float,
                 F_m_f: float, v: float, P_m_r: float, omega_r: float,
                 gamma: float, r_wf: float, r_wr: float, eta_gb: float,
                 rtol: float = 1e-9) -> list[str]:
    """Diagnostics: list of violated operational limits (empty if none).

    Limits are enforced symmetrically in magnitude so regeneration is
    bounded by the same ratings as traction.
    """
    out = []
    P_m_f = F_m_f * v
    if abs(P_m_f) > front.P_max * (1 + rtol):
        out.append(f"front power {P_m_f:.1f} W exceeds {front.P_max:.1f} W")
    T_f = F_m_f * r_wf
    if abs(T_f) > front.T_max * (1 + rtol):
        out.append(f"front torque {T_f:.1f} Nm exceeds {front.T_max:.1f} Nm")
    if abs(P_m_r) > rear.Pbar_max * S_m * (1 + rtol):
        out.append(f"rear power {P_m_r:.1f} W exceeds {rear.Pbar_max * S_m:.1f} W")
    if omega_r > 1e-9:
        T_r = P_m_r / omega_r
    else:
        T_r = 0.0
    if abs(T_r) > rear.Tbar_max * S_m * (1 + rtol):
        out.append(f"rear torque {T_r:.1f} Nm exceeds {rear.Tbar_max * S_m:.1f} Nm")
    return out


# ---------------------------------------------------------------------------
# Loss-map identification
# ---------------------------------------------------------------------------

#: basis exponents (omega_power, torque_power) for the identifiable terms
_BASIS = [(1, 0), (0, 0), (2, 0), (3, 0), (0, 2), (2, 2)]
#: coefficient attribute fed by each basis column
_BASIS_NAMES = ["a_Fe", "a_Mech", "c_Mech", "d_Mech", "a_Cu", "b_Cu"]


@dataclass(frozen=True)
class FitReport:
    r_squared: float
    nrmse: float
    residual_rms: float
    n_samples: int


def fit_loss_map(samples, l_co: float, l_ew: float,
                 omega_max: float | None = None):
    """Identify loss coefficients from (omega, torque, p_loss) samples.

    Nonnegative least squares over the six identifiable basis terms; the
    linear-in-speed iron and mechanical terms cannot be separated on a
    single map, so their combined slope is reported as ``a_Fe``.

    Returns ``(LossCoefficients, FitReport)``.
    """
    if len(samples) < 7:
        raise IdentifiabilityError("need at least 7 samples to identify the loss model")
    w = np.array([s.omega for s in samples], dtype=float)
    T = np.array([s.torque for s in samples], dtype=float)
    y = np.array([s.p_loss for s in samples], dtype=float)
    if np.any(w < 0):
        raise MotorModelError("negative speed in loss-map samples")
    if np.any(y < 0):
        raise MotorModelError("negative loss in loss-map samples")
    w_ref = np.max(w)
    t_ref = np.max(np.abs(T))
    if w_ref <= 0:
        raise IdentifiabilityError("no speed variation in loss-map samples")
    if t_ref <= 0:
        raise IdentifiabilityError(
            "no torque variation: copper coefficients unidentifiable")
    # column-scaled design matrix keeps the high-order speed terms conditioned
    wn = w / w_ref
    tn = T / t_ref
    A = np.column_stack([wn ** pw * tn ** pt for pw, pt in _BASIS])
    col_ok = np.linalg.norm(A, axis=0) > 1e-12
    if not np.all(col_ok):
        missing = [n for n, ok in zip(_BASIS_NAMES, col_ok) if not ok]
        raise IdentifiabilityError(f"missing excitation for terms: {missing}")
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise IdentifiabilityError("rank-deficient design matrix: vary speed and torque jointly")
    x, _ = nnls(A, y)
    # undo the column normalization
    scale = np.array([w_ref ** pw * t_ref ** pt for pw, pt in _BASIS])
    x_phys = x / scale
    coeffs = LossCoefficients(
        a_Fe=x_phys[0], a_Mech=x_phys[1], b_Mech=0.0,
        c_Mech=x_phys[2], d_Mech=x_phys[3], a_Cu=x_phys[4], b_Cu=x_phys[5],
    )
    resid = A @ x - y
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    span = float(np.max(y) - np.min(y))
    rms = float(np.sqrt(ss_res / len(y)))
    nrmse = rms / span if span > 0 else 0.0
    return coeffs, FitReport(r_squared=r2, nrmse=nrmse, residual_rms=rms,
                             n_samples=len(y))


def loss_map_grid(coeffs: LossCoefficients, omega_max: float, t_max: float,
                  n_omega: int = 15, n_torque: int = 11,
                  noise_frac: float = 0.0, seed: int | None = None):
    """Tabulate the loss family on a speed/torque grid as samples.

    With ``noise_frac`` > 0, applies multiplicative Gaussian noise (used
    to exercise the fit under realistic map scatter).
    """
    rng = np.random.default_rng(seed)
    ws = np.linspace(0.0, omega_max, n_omega)
    ts = np.linspace(0.0, t_max, n_torque)
    out = []
    for w in ws:
        for t in ts:
            p = (coeffs.a_Fe * w
                 + coeffs.a_Mech + coeffs.b_Mech * w + coeffs.c_Mech * w ** 2
                 + coeffs.d_Mech * w ** 3
                 + (coeffs.a_Cu + coeffs.b_Cu * w ** 2) * t ** 2)
            if noise_frac > 0:
                p *= 1.0 + noise_frac * rng.standard_normal()
                p = max(p, 0.0)
            out.append(LossMapSample(omega=w, torque=t, p_loss=p))
    return out


# ---------------------------------------------------------------------------
# Synthetic reference machines.  The production motor map behind the
# shipped numbers is proprietary, so the toolkit generates plausible
# coefficient sets for examples and tests; treat absolute energy figures
# obtained with them as illustrative.
# ---------------------------------------------------------------------------


def synthetic_rear_motor(seed: int = 0) -> RearMotorModel:
    """Plausible high-performance rear PMSM (reference scale S_m = 1)."""
    rng = np.random.default_rng(seed)

    def jitter(x, frac=0.15):
        return x * (1.0 + frac * (rng.random() * 2 - 1))

    coeffs = LossCoefficients(
        a_Fe=jitter(0.9),
        a_Mech=jitter(25.0),
        b_Mech=0.0,
        c_Mech=jitter(8.0e-4),
        d_Mech=jitter(2.5e-7),
        a_Cu=jitter(0.16),
        b_Cu=jitter(3.0e-8),
    )
    return RearMotorModel(
        Pbar_max=110e3, Tbar_max=120.0, omega_max=1150.0, mbar_m=20.0,
        coeffs=coeffs, l_co=0.10, l_ew=0.025,
    )


def synthetic_front_motor(seed: int = 1) -> FrontMotorModel:
    """Plausible direct-drive in-wheel front hub motor."""
    rng = np.random.default_rng(seed)

    def jitter(x, frac=0.15):
        return x * (1.0 + frac * (rng.random() * 2 - 1))

    P_max, T_max = 10e3, 130.0
    coeffs = LossCoefficients(
        a_Fe=jitter(1.1),
        a_Mech=jitter(8.0),
        b_Mech=0.0,
        c_Mech=jitter(1.5e-2),
        d_Mech=jitter(6.0e-6),
        a_Cu=jitter(0.075),
        b_Cu=jitter(1.2e-6),
    )
    return FrontMotorModel(
        P_max=P_max, T_max=T_max, omega_max=230.0,
        omega_rated=P_max / T_max, coeffs=coeffs,
    )
