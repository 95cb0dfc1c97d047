import numpy as np
import pytest

from bikeopt.battery import BatteryModel
from bikeopt.cycle import (
    make_constant_cycle, make_road_cycle, make_sprint_brake_cycle,
    make_urban_cycle,
)
from bikeopt.machines import synthetic_front_motor, synthetic_rear_motor
from bikeopt.vehicle import VehicleParams


@pytest.fixture(scope="session")
def params():
    return VehicleParams(
        m_r=80.0, m_0=75.0, r_wf=0.321, r_wr=0.318, h=0.573, b=0.6935,
        w_b=1.37, c_r=0.015, CdA=0.32, mu_brk_peak_r=-0.8,
    )


@pytest.fixture(scope="session")
def front():
    return synthetic_front_motor()


@pytest.fixture(scope="session")
def rear():
    return synthetic_rear_motor()


@pytest.fixture(scope="session")
def battery():
    return BatteryModel(Ebar_max=3.6e7, mbar_b=55.0, eta_b=0.92,
                        xi_min=0.1, xi_max=0.9)


@pytest.fixture(scope="session")
def urban_cycle():
    return make_urban_cycle()


@pytest.fixture(scope="session")
def road_cycle():
    return make_road_cycle()


@pytest.fixture(scope="session")
def sprint_cycle():
    return make_sprint_brake_cycle()


@pytest.fixture(scope="session")
def constant_cycle():
    return make_constant_cycle(v=25.0, duration=120.0)


@pytest.fixture(scope="session")
def all_cycles(urban_cycle, road_cycle, sprint_cycle, constant_cycle):
    return {
        "urban": urban_cycle,
        "road": road_cycle,
        "sprint": sprint_cycle,
        "constant": constant_cycle,
    }
