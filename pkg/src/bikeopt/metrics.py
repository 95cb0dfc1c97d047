"""Regenerative ratio and average efficiency from power trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UndefinedMetricError(ValueError):
    """Raised when the battery never discharges (zeta/eta undefined)."""


@dataclass(frozen=True)
class EnergyLedger:
    """Signed energy totals of one trajectory plus the derived ratios.

    ``zeta`` is the share of discharged energy recovered back into the
    battery; ``eta_avg`` is net mechanical energy at the wheels over net
    battery throughput, both in percent.
    """

    E_v_tr: float    # mechanical traction energy, J (>= 0)
    E_v_brk: float   # mechanical braking energy, J (<= 0)
    E_b_out: float   # energy out of the battery, J (>= 0)
    E_b_in: float    # energy into the battery, J (<= 0)
    zeta: float
    eta_avg: float


def ledger(P_v, P_b, dt: float) -> EnergyLedger:
    """Split wheel-demand and battery power into signed energy totals.

    Mechanical energies use the wheel demand power, not shaft power, so
    the efficiency metric reflects the full chain from battery terminals
    to tire contact.
    """
    P_v = np.asarray(P_v, dtype=float)
    P_b = np.asarray(P_b, dtype=float)
    if P_v.shape != P_b.shape:
        raise ValueError("P_v and P_b must be aligned")
    E_v_tr = dt * float(np.sum(np.maximum(P_v, 0.0)))
    E_v_brk = dt * float(np.sum(np.minimum(P_v, 0.0)))
    E_b_out = dt * float(np.sum(np.maximum(P_b, 0.0)))
    E_b_in = dt * float(np.sum(np.minimum(P_b, 0.0)))
    if E_b_out <= 0.0:
        raise UndefinedMetricError("battery never discharges: metrics undefined")
    zeta = 100.0 * abs(E_b_in) / E_b_out
    eta_avg = 100.0 * (E_v_tr + E_v_brk) / (E_b_out + E_b_in)
    return EnergyLedger(E_v_tr=E_v_tr, E_v_brk=E_v_brk, E_b_out=E_b_out,
                        E_b_in=E_b_in, zeta=zeta, eta_avg=eta_avg)
