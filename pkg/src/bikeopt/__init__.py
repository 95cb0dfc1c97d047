"""Co-design toolkit for two-wheel-driven electric superbike powertrains.

Jointly sizes the gear ratio, rear motor, and battery of a dual-motor
electric motorbike while optimizing the per-instant front/rear force split
over a driving cycle, subject to tire-adherence and performance
constraints.  A forward simulator of fixed designs doubles as an
independent oracle for optimizer output.
"""

from bikeopt.cycle import DrivingCycle, load_cycle, resample
from bikeopt.vehicle import VehicleParams, MassBreakdown, total_mass, required_power, required_force
from bikeopt.machines import (
    RearMotorModel,
    FrontMotorModel,
    LossMapSample,
    fit_loss_map,
    synthetic_rear_motor,
    synthetic_front_motor,
)
from bikeopt.battery import BatteryModel
from bikeopt.performance import PerformanceSpec
from bikeopt.metrics import EnergyLedger, ledger
from bikeopt.simulate import SimResult, run as simulate_run

__version__ = "0.1.0"
