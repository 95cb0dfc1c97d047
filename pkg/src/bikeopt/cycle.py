"""Driving-cycle ingestion, validation, and resampling.

A cycle supplies the kinematic demand (speed, acceleration, road grade)
that drives every downstream model.  Cycles are immutable after
construction and therefore safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Maximum allowed discrepancy between a supplied acceleration column and
# the forward difference of the speed trace (m/s^2).
ACCEL_CONSISTENCY_TOL = 0.01


class CycleError(ValueError):
    """Raised for malformed or inconsistent cycle data."""


@dataclass(frozen=True)
class DrivingCycle:
    """Uniformly sampled kinematic demand.

    Attributes:
        t: time grid in seconds, strictly increasing with constant step.
        v: longitudinal speed in m/s, nonnegative.
        a: acceleration in m/s^2 (forward difference of ``v``).
        theta: road grade angle in radians.
        name: human-readable label.
    """

    t: np.ndarray
    v: np.ndarray
    a: np.ndarray
    theta: np.ndarray
    name: str = "cycle"

    def __post_init__(self):
        for arr_name in ("t", "v", "a", "theta"):
            arr = np.asarray(getattr(self, arr_name), dtype=float)
            object.__setattr__(self, arr_name, arr)
            arr.setflags(write=False)
        n = self.t.size
        if n < 2:
            raise CycleError("cycle needs at least 2 samples")
        if any(getattr(self, k).size != n for k in ("v", "a", "theta")):
            raise CycleError("cycle arrays must share one length")
        if not np.all(np.isfinite(self.t)) or not np.all(np.isfinite(self.v)):
            raise CycleError("non-finite values in cycle data")
        steps = np.diff(self.t)
        if np.any(steps <= 0):
            raise CycleError("time grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=0.0, atol=1e-9 * max(1.0, steps[0])):
            raise CycleError("time grid must be uniform")
        if np.any(self.v < 0.0):
            raise CycleError("negative speed in cycle")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def n(self) -> int:
        return int(self.t.size)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) + self.dt

    @property
    def length_m(self) -> float:
        """Cycle distance, the rectangle-rule integral of speed."""
        return float(np.sum(self.v) * self.dt)


def _forward_difference(v: np.ndarray, dt: float) -> np.ndarray:
    a = np.empty_like(v)
    a[:-1] = np.diff(v) / dt
    a[-1] = 0.0
    return a


def make_cycle(t, v, theta=None, name="cycle", a_supplied=None) -> DrivingCycle:
    """Build a validated cycle from raw arrays.

    Acceleration is always recomputed by forward difference so that the
    discrete dynamics and the battery integration see one consistent
    kinematics; a supplied acceleration column is used only for a
    consistency check.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.size < 2:
        raise CycleError("cycle needs at least 2 samples")
    dt = float(t[1] - t[0])
    if dt <= 0:
        raise CycleError("time grid must be strictly increasing")
    a = _forward_difference(v, dt)
    if a_supplied is not None:
        a_supplied = np.asarray(a_supplied, dtype=float)
        err = np.max(np.abs(a_supplied[:-1] - a[:-1])) if t.size > 1 else 0.0
        if err > ACCEL_CONSISTENCY_TOL:
            raise CycleError(
                f"supplied acceleration disagrees with speed trace by {err:.4f} m/s^2"
            )
    if theta is None:
        theta = np.zeros_like(v)
    else:
        theta = np.asarray(theta, dtype=float)
    cyc = DrivingCycle(t=t, v=v, a=a, theta=theta, name=name)
    if cyc.length_m <= 0:
        raise CycleError("cycle distance must be positive")
    return cyc


def load_cycle(path, fmt: str = "auto", name: str | None = None) -> DrivingCycle:
    """Load a cycle from a CSV file with header ``t,v[,theta]`` (SI units).

    ``fmt`` may be ``speed-only`` (columns t,v), ``speed-grade``
    (columns t,v,theta) or ``auto`` to infer from the header.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().lower()
        cols = [c.strip() for c in header.split(",")]
        if fmt == "auto":
            fmt = "speed-grade" if "theta" in cols else "speed-only"
        want = 3 if fmt == "speed-grade" else 2
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < want:
                raise CycleError(f"{path}:{lineno}: expected {want} columns")
            try:
                vals = [float(p) for p in parts[:want]]
            except ValueError as exc:
                raise CycleError(f"{path}:{lineno}: {exc}") from exc
            if not all(math.isfinite(x) for x in vals):
                raise CycleError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if len(rows) < 2:
        raise CycleError(f"{path}: fewer than 2 data rows")
    data = np.asarray(rows, dtype=float)
    theta = data[:, 2] if want == 3 else None
    if name is None:
        name = str(path)
    return make_cycle(data[:, 0], data[:, 1], theta=theta, name=name)


def resample(c: DrivingCycle, dt_new: float) -> DrivingCycle:
    """Resample a cycle onto a new uniform grid by linear interpolation.

    Speed and grade are interpolated; acceleration is recomputed by
    forward difference on the new grid.
    """
    if dt_new <= 0:
        raise CycleError("dt_new must be positive")
    if dt_new > c.duration:
        raise CycleError("dt_new larger than cycle duration")
    if abs(dt_new - c.dt) < 1e-12:
        return c
    t0 = float(c.t[0])
    n_new = int(math.floor((c.t[-1] - t0) / dt_new + 1e-9)) + 1
    t_new = t0 + dt_new * np.arange(n_new)
    v_new = np.interp(t_new, c.t, c.v)
    th_new = np.interp(t_new, c.t, c.theta)
    return make_cycle(t_new, v_new, theta=th_new, name=c.name)


def grade_from_percent(slope_percent: float) -> float:
    """Convert a percent slope (rise/run * 100) to a grade angle in radians."""
    return math.atan(slope_percent / 100.0)


# ---------------------------------------------------------------------------
# Synthetic cycle builders used by the examples and the test suite.  The
# regulatory-style traces imitate the phase structure of homologation
# cycles (repeated trapezoidal speed humps at urban / extra-urban speed
# levels); the sprint-brake trace imitates aggressive circuit riding.
# ---------------------------------------------------------------------------


def _trapezoid(v_target, t_accel, t_hold, t_brake, dt, a_start=0.0):
    """Speed samples of one accelerate/hold/brake hump, ending at rest."""
    seg = []
    n_acc = max(1, int(round(t_accel / dt)))
    n_hold = max(1, int(round(t_hold / dt)))
    n_brk = max(1, int(round(t_brake / dt)))
    seg.extend(np.linspace(a_start, v_target, n_acc, endpoint=False))
    seg.extend(np.full(n_hold, v_target))
    seg.extend(np.linspace(v_target, 0.0, n_brk, endpoint=False))
    return seg


def make_constant_cycle(v: float = 20.0, duration: float = 60.0, dt: float = 1.0,
                        name: str = "constant") -> DrivingCycle:
    n = int(round(duration / dt))
    t = dt * np.arange(n)
    return make_cycle(t, np.full(n, float(v)), name=name)


def make_urban_cycle(dt: float = 1.0, name: str = "urban") -> DrivingCycle:
    """Low-speed regulatory-style trace: stop-and-go humps up to ~50 km/h."""
    v = [0.0] * 5
    for v_top, ta, th, tb in [(8.0, 8, 10, 6), (11.0, 10, 14, 8), (14.0, 12, 20, 9),
                              (9.0, 8, 8, 6), (13.5, 11, 25, 9), (11.0, 9, 12, 7)]:
        v.extend(_trapezoid(v_top, ta, th, tb, dt))
        v.extend([0.0] * 6)
    t = dt * np.arange(len(v))
    return make_cycle(t, v, name=name)


def make_road_cycle(dt: float = 1.0, name: str = "road") -> DrivingCycle:
    """Mixed-speed regulatory-style trace with extra-urban cruise phases."""
    v = [0.0] * 4
    for v_top, ta, th, tb in [(14.0, 10, 12, 8), (19.0, 12, 30, 10), (25.0, 16, 40, 12),
                              (17.0, 10, 15, 9), (28.0, 18, 45, 14), (22.0, 12, 20, 10)]:
        v.extend(_trapezoid(v_top, ta, th, tb, dt))
        v.extend([0.0] * 5)
    t = dt * np.arange(len(v))
    return make_cycle(t, v, name=name)


def make_sprint_brake_cycle(dt: float = 1.0, v_top: float = 34.0, n_laps: int = 6,
                            name: str = "sprint-brake") -> DrivingCycle:
    """Brake-heavy sporty trace: hard launches to ``v_top`` and hard stops."""
    v = [0.0] * 3
    for lap in range(n_laps):
        vt = v_top * (0.85 + 0.15 * ((lap * 2) % 3) / 2.0)
        v.extend(_trapezoid(vt, int(round(vt / 4.5)), 6, int(round(vt / 5.5)), dt))
        v.extend([0.0] * 3)
        # mid-corner dip: partial braking and re-acceleration
        vm = 0.6 * vt
        v.extend(_trapezoid(vm, int(round(vm / 4.0)), 4, int(round(vm / 5.0)), dt))
        v.extend([0.0] * 2)
    t = dt * np.arange(len(v))
    return make_cycle(t, v, name=name)
