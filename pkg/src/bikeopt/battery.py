"""Inverter/battery efficiency chain, energy dynamics, capacity scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BatteryModel:
    Ebar_max: float   # reference full capacity, J
    mbar_b: float     # reference pack mass, kg
    eta_b: float
    xi_min: float
    xi_max: float

    def __post_init__(self):
        if self.Ebar_max <= 0 or self.mbar_b <= 0:
            raise ValueError("reference capacity and mass must be positive")
        if not 0 < self.eta_b <= 1:
            raise ValueError("eta_b must be in (0, 1]")
        if not 0 <= self.xi_min < self.xi_max <= 1:
            raise ValueError("need 0 <= xi_min < xi_max <= 1")

    @property
    def usable_fraction(self) -> float:
        return self.xi_max - self.xi_min

    def soc_window(self, S_b: float) -> tuple[float, float]:
        """Energy bounds (J) of the operational SoC range at scale S_b."""
        return (self.Ebar_max * self.xi_min * S_b,
                self.Ebar_max * self.xi_max * S_b)


def battery_power_branches(P_ac, P_aux: float, eta_inv: float, eta_b: float):
    """(discharge, charge) branch evaluations of the battery power."""
    P_ac = np.asarray(P_ac, dtype=float)
    discharge = (P_ac / eta_inv + P_aux) / eta_b
    charge = (eta_inv * P_ac + P_aux) * eta_b
    return discharge, charge


def battery_power(P_ac, P_aux: float, eta_inv: float, eta_b: float):
    """Battery terminal power from AC-side power and auxiliary draw.

    Discharging applies both efficiencies as divisions, charging as
    multiplications.  The active branch is the larger of the two
    evaluations, which selects discharge whenever its evaluation is
    consistent in sign and interpolates continuously across the narrow
    band near P_ac = -eta_inv*P_aux where neither branch is
    self-consistent.
    """
    discharge, charge = battery_power_branches(P_ac, P_aux, eta_inv, eta_b)
    return np.maximum(discharge, charge)


def integrate(E_b0: float, P_b, dt: float) -> np.ndarray:
    """Forward-Euler battery energy trajectory.

    Returns N+1 grid-point energies for N interval powers:
    E[k+1] = E[k] - P_b[k]*dt.  Uses a compensated cumulative sum so the
    total drop equals dt * sum(P_b) to bookkeeping accuracy.
    """
    P_b = np.asarray(P_b, dtype=float)
    steps = P_b * dt
    drop = np.empty(steps.size + 1)
    drop[0] = 0.0
    total = 0.0
    comp = 0.0  # Kahan compensation term
    for k, s in enumerate(steps):
        y = s - comp
        t = total + y
        comp = (t - total) - y
        total = t
        drop[k + 1] = total
    return E_b0 - drop


def capacity_from_scale(S_b: float, Ebar_max: float) -> float:
    if S_b <= 0 or Ebar_max <= 0:
        raise ValueError("inputs must be positive")
    return S_b * Ebar_max


def scale_from_capacity(E_b_max: float, Ebar_max: float) -> float:
    if E_b_max <= 0 or Ebar_max <= 0:
        raise ValueError("inputs must be positive")
    return E_b_max / Ebar_max
