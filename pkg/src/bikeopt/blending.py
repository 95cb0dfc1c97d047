"""Front/rear force repartition: adherence split, lock limits, serial
braking, and the saturation-transfer term."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bikeopt.vehicle import VehicleParams, required_force


class WheelLiftError(ValueError):
    """Raised when the rear normal load is non-positive (infeasible state)."""


@dataclass(frozen=True)
class BlendState:
    """Force repartition at one time step.

    ``F_v_f``/``F_v_r`` are the net wheel demands, with the transfer term
    already moved onto the rear; the invariant balances are
    F_v_f = F_m_f + F_brk_f + F_tr_f and F_v_r = F_m_r + F_brk_r.
    """

    sigma: float
    sigma_a_raw: float
    F_v_f: float
    F_v_r: float
    F_m_f: float
    F_m_r: float
    F_brk_f: float
    F_brk_r: float
    F_tr_f: float
    mu_r: float


def sigma_adherence(p: VehicleParams, m: float, X_total, theta):
    """Adherence-maximizing front split, unclamped.

    Places both tires at equal friction utilization, accounting for the
    longitudinal load transfer produced by the net force ``X_total``.
    """
    X_total = np.asarray(X_total, dtype=float)
    theta = np.asarray(theta, dtype=float)
    cos_t = np.cos(theta)
    return (p.b / p.w_b
            - (p.h / p.w_b) * (X_total / (m * p.g * cos_t) - p.c_r))


def sigma_adherence_clamped(p: VehicleParams, m: float, X_total, theta):
    """Adherence split clamped to [0, 1] for use as an applied strategy."""
    return np.clip(sigma_adherence(p, m, X_total, theta), 0.0, 1.0)


def rear_normal_load_force(p: VehicleParams, m: float, X_f, X_r, theta):
    """Denominator of the rear adherence ratio: rear normal load times
    the lever geometry, including the load-transfer contribution."""
    theta = np.asarray(theta, dtype=float)
    static = (m * p.g * np.cos(theta) / p.w_b) * (p.w_b - p.b - p.h * p.c_r)
    return static + (p.h / p.w_b) * (np.asarray(X_f) + np.asarray(X_r))


def rear_adherence(p: VehicleParams, m: float, X_f, X_r, theta):
    """Rear tire adherence utilization; negative while braking."""
    denom = rear_normal_load_force(p, m, X_f, X_r, theta)
    if np.any(np.asarray(denom) <= 0):
        raise WheelLiftError("non-positive rear normal load (rear wheel lift)")
    return np.asarray(X_r, dtype=float) / denom


def split_demand(p: VehicleParams, m: float, v, a, theta, sigma):
    """Per-wheel force demand for a given split fraction.

    Returns ``(F_v_f, F_v_r_base)``, the rear value before any transfer.
    """
    F_v = required_force(p, m, v, a, theta)
    sigma = np.asarray(sigma, dtype=float)
    return sigma * F_v, (1.0 - sigma) * F_v


def serial_brake_repartition(F_wheel, regen_capacity):
    """Serve a braking demand first by regeneration, then by friction.

    ``regen_capacity`` is the magnitude of the largest regenerative force
    available at the current speed and scale.  Returns (F_m, F_brk).
    """
    F_wheel = np.asarray(F_wheel, dtype=float)
    cap = np.asarray(regen_capacity, dtype=float)
    F_m = np.maximum(F_wheel, -cap)
    return F_m, F_wheel - F_m


def saturation_transfer(F_v_f, traction_capacity):
    """Front traction demand in excess of motor capacity, moved rearward."""
    F_v_f = np.asarray(F_v_f, dtype=float)
    return np.maximum(0.0, F_v_f - np.asarray(traction_capacity, dtype=float))
