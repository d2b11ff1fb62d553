"""
UAV trajectory kinematics and emitter/UAV distances.

A trajectory is piecewise constant-velocity and the UAV samples RSS exactly at
the leg boundaries, so waypoint j sits at the initial position plus the sum of
the first j-1 leg displacements. All coordinates are meters in a local ENU
frame; z is altitude.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolation


def _vector3(value, name):
    array = np.array(value, dtype=float).reshape(-1)
    if array.shape != (3,):
        raise ContractViolation(f"{name} must be a 3-vector, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ContractViolation(f"{name} must be finite, got {array.tolist()}")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Leg:
    """One constant-velocity segment between two consecutive samples."""
    velocity: np.ndarray
    duration: float

    def __post_init__(self):
        object.__setattr__(self, 'velocity', _vector3(self.velocity, 'velocity'))
        if not self.duration > 0:
            raise ContractViolation(f"leg duration must be strictly positive, got {self.duration}")
        object.__setattr__(self, 'duration', float(self.duration))

    @property
    def displacement(self):
        return self.duration * self.velocity


@dataclass(frozen=True, eq=False)
class TrajectoryPlan:
    initial_position: np.ndarray
    legs: tuple
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, 'initial_position', _vector3(self.initial_position, 'initial_position'))
        legs = tuple(leg if isinstance(leg, Leg) else Leg(*leg) for leg in self.legs)
        object.__setattr__(self, 'legs', legs)
        if int(self.sample_count) < 1:
            raise ContractViolation(f"sample_count must be positive, got {self.sample_count}")
        object.__setattr__(self, 'sample_count', int(self.sample_count))
        if len(legs) != self.sample_count - 1:
            raise ContractViolation(
                f"a plan with {self.sample_count} samples needs {self.sample_count - 1} legs, got {len(legs)}"
            )

    def positions(self):
        """All M waypoint positions as an (M, 3) array, accumulated leg by leg."""
        points = np.empty((self.sample_count, 3))
        points[0] = self.initial_position
        for k, leg in enumerate(self.legs):
            points[k + 1] = points[k] + leg.displacement
        return points

    @property
    def duration(self):
        return sum(leg.duration for leg in self.legs)


@dataclass(frozen=True, eq=False)
class Waypoint:
    position: np.ndarray
    uav_index: int
    sample_index: int

    def __post_init__(self):
        object.__setattr__(self, 'position', _vector3(self.position, 'position'))


@dataclass(frozen=True)
class Aoi:
    """Axis-aligned area of interest known to contain the emitter."""
    x_range: tuple
    y_range: tuple
    z_range: tuple = (0.0, 0.0)
    bounds: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = []
        for name in ('x_range', 'y_range', 'z_range'):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise ContractViolation(f"{name} must be a finite interval with lo <= hi, got ({lo}, {hi})")
            object.__setattr__(self, name, (lo, hi))
            rows.append((lo, hi))
        bounds = np.array(rows)
        bounds.flags.writeable = False
        object.__setattr__(self, 'bounds', bounds)

    @property
    def free_axes(self):
        """Axes whose interval is non-degenerate, i.e. the searched dimensions."""
        return tuple(int(a) for a in np.flatnonzero(self.bounds[:, 1] > self.bounds[:, 0]))

    @property
    def lengths(self):
        return self.bounds[:, 1] - self.bounds[:, 0]

    @property
    def center(self):
        return self.bounds.mean(axis=1)

    def contains(self, point):
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.bounds[:, 0]) and np.all(p <= self.bounds[:, 1]))

    def clamp(self, point):
        return np.clip(np.asarray(point, dtype=float), self.bounds[:, 0], self.bounds[:, 1])

    def grid_axis(self, axis, step):
        """Cell-center nodes along one axis; a degenerate axis yields its single value."""
        lo, hi = self.bounds[axis]
        if hi == lo:
            return np.array([lo])
        count = max(1, math.ceil((hi - lo) / step - 1e-9))
        return np.minimum(lo + step / 2 + step * np.arange(count), hi)

    def grid_nodes(self, step):
        """All grid nodes as a (G, 3) array in lexicographic (x, then y, then z) order."""
        if not step > 0:
            raise ContractViolation(f"grid step must be positive, got {step}")
        axes = [self.grid_axis(a, step) for a in range(3)]
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)


def waypoint(plan, j, uav_index=1):
    """Position of the j-th sample (1-based) along a trajectory plan."""
    if not 1 <= j <= plan.sample_count:
        raise ContractViolation(f"sample index {j} outside 1..{plan.sample_count}")
    return Waypoint(plan.positions()[j - 1], uav_index=uav_index, sample_index=j)


def waypoints(plan, uav_index=1):
    return [Waypoint(p, uav_index=uav_index, sample_index=j) for j, p in enumerate(plan.positions(), start=1)]


def distance(p, s):
    return float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(s, dtype=float)))


def distances(points, s):
    """Distances from every row of an (M, 3) array to the point s."""
    return np.linalg.norm(np.asarray(points, dtype=float) - np.asarray(s, dtype=float), axis=-1)


# =============================================================================
# Plan constructors
# =============================================================================

def straight_plan(start, velocity, leg_duration, sample_count):
    legs = tuple(Leg(velocity, leg_duration) for _ in range(sample_count - 1))
    return TrajectoryPlan(start, legs, sample_count)


def plan_through(points, speed):
    """Constant-speed plan that samples exactly at each of the given points."""
    points = np.asarray(points, dtype=float)
    if not speed > 0:
        raise ContractViolation(f"speed must be positive, got {speed}")
    legs = []
    for a, b in zip(points[:-1], points[1:]):
        length = np.linalg.norm(b - a)
        if length == 0:
            raise ContractViolation("consecutive samples must not coincide")
        duration = length / speed
        legs.append(Leg((b - a) / duration, duration))
    return TrajectoryPlan(points[0], tuple(legs), len(points))


def sweep_plan(x_range, y_range, altitude, sample_count, lanes=2, speed=20.0):
    """
    Lawnmower sweep over a rectangle: `lanes` parallel passes along x, stepping
    in y between passes, with samples spread evenly along the flown path.
    """
    if sample_count < 2 or lanes < 1:
        raise ContractViolation("a sweep needs at least two samples and one lane")
    (x0, x1), (y0, y1) = x_range, y_range
    lane_y = np.linspace(y0, y1, lanes) if lanes > 1 else np.array([(y0 + y1) / 2])
    corners = []
    for k, y in enumerate(lane_y):
        xs = (x0, x1) if k % 2 == 0 else (x1, x0)
        corners.extend([(xs[0], y), (xs[1], y)])
    corners = np.array(corners)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(corners, axis=0), axis=1))])
    targets = np.linspace(0.0, arc[-1], sample_count)
    xy = np.column_stack([np.interp(targets, arc, corners[:, 0]), np.interp(targets, arc, corners[:, 1])])
    points = np.column_stack([xy, np.full(sample_count, float(altitude))])
    return plan_through(points, speed)
