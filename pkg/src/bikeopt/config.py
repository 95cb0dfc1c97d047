"""TOML configuration: vehicle, battery, and machine definitions.

A configuration file holds four tables -- ``[vehicle]``, ``[battery]``,
``[front_motor]``, and ``[rear_motor]`` -- whose keys map one-to-one to
the corresponding model dataclasses.  Motor loss coefficients live in
``[front_motor.loss]`` / ``[rear_motor.loss]`` subtables.  Any omitted
table falls back to the built-in reference machines; omitted vehicle
keys fall back to the dataclass defaults.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from bikeopt.battery import BatteryModel
from bikeopt.machines import (
    FrontMotorModel, LossCoefficients, RearMotorModel,
    synthetic_front_motor, synthetic_rear_motor,
)
from bikeopt.vehicle import VehicleParams


class ConfigError(ValueError):
    """Raised on malformed or inconsistent configuration input."""


@dataclass(frozen=True)
class ConfigBundle:
    vehicle: VehicleParams
    battery: BatteryModel
    front: FrontMotorModel
    rear: RearMotorModel


#: the reference superbike used when no configuration is given
REFERENCE_VEHICLE = dict(
    m_r=80.0, m_0=75.0, r_wf=0.321, r_wr=0.318, h=0.573, b=0.6935,
    w_b=1.37, c_r=0.015, CdA=0.32, mu_brk_peak_r=-0.8,
)
REFERENCE_BATTERY = dict(Ebar_max=3.6e7, mbar_b=55.0, eta_b=0.92,
                         xi_min=0.1, xi_max=0.9)


def default_bundle() -> ConfigBundle:
    """Reference superbike with the built-in synthetic machines."""
    return ConfigBundle(
        vehicle=VehicleParams(**REFERENCE_VEHICLE),
        battery=BatteryModel(**REFERENCE_BATTERY),
        front=synthetic_front_motor(),
        rear=synthetic_rear_motor(),
    )


def _known_fields(cls):
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(table: dict, cls, where: str):
    unknown = set(table) - _known_fields(cls)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")


def _loss(table: dict, where: str) -> LossCoefficients:
    _check_keys(table, LossCoefficients, where + ".loss")
    try:
        return LossCoefficients(**table)
    except TypeError as exc:
        raise ConfigError(f"[{where}.loss]: {exc}") from None


def load_config(path) -> ConfigBundle:
    """Parse a TOML file into a full model bundle."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None

    known_tables = {"vehicle", "battery", "front_motor", "rear_motor"}
    unknown = set(raw) - known_tables
    if unknown:
        raise ConfigError(f"unknown table(s): {sorted(unknown)}")

    veh_tab = dict(REFERENCE_VEHICLE)
    veh_tab.update(raw.get("vehicle", {}))
    _check_keys(veh_tab, VehicleParams, "vehicle")
    bat_tab = dict(REFERENCE_BATTERY)
    bat_tab.update(raw.get("battery", {}))
    _check_keys(bat_tab, BatteryModel, "battery")
    try:
        vehicle = VehicleParams(**veh_tab)
        battery = BatteryModel(**bat_tab)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    if "front_motor" in raw:
        tab = dict(raw["front_motor"])
        loss = _loss(tab.pop("loss", {}), "front_motor")
        _check_keys(tab, FrontMotorModel, "front_motor")
        try:
            front = FrontMotorModel(coeffs=loss, **tab)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[front_motor]: {exc}") from None
    else:
        front = synthetic_front_motor()

    if "rear_motor" in raw:
        tab = dict(raw["rear_motor"])
        loss = _loss(tab.pop("loss", {}), "rear_motor")
        _check_keys(tab, RearMotorModel, "rear_motor")
        try:
            rear = RearMotorModel(coeffs=loss, **tab)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[rear_motor]: {exc}") from None
    else:
        rear = synthetic_rear_motor()

    return ConfigBundle(vehicle=vehicle, battery=battery, front=front,
                        rear=rear)
