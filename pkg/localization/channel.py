"""
RSS path-loss channel, measurement synthesis and the objectives built on it.

Mean received power follows the log-distance model
    f(d) = P0 - 10*gamma*log10(d / d0)
and each sample carries Gaussian shadowing in the dB domain with per-UAV
variance sigma (log-normal in linear power). The least-squares objective works
on ranges recovered by inverting the mean model; the likelihood is the
standard Gaussian log-density of the dB samples.
"""
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ContractViolation,
    DegenerateLikelihoodError,
    HarnessIOError,
    SingularGeometryError,
)
from .geometry import Aoi, TrajectoryPlan, Waypoint, distances

logger = logging.getLogger(__name__)

# Floor for the noise variance wherever Fisher information is formed
MIN_NOISE_VAR = 1e-12

MEASUREMENT_CSV_COLUMNS = ['uav_id', 'sample_id', 'x', 'y', 'z', 'rss_db']

LN10 = math.log(10.0)


@dataclass(frozen=True)
class ChannelParams:
    p0: float = 30.0
    d0: float = 1.0
    ple: float = 3.0
    noise_var: float = 6.0

    def __post_init__(self):
        for name in ('p0', 'd0', 'ple', 'noise_var'):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.d0 > 0:
            raise ContractViolation(f"reference distance d0 must be positive, got {self.d0}")
        if not self.ple > 0:
            raise ContractViolation(f"path-loss exponent must be positive, got {self.ple}")
        if not self.noise_var >= 0:
            raise ContractViolation(f"noise variance must be non-negative, got {self.noise_var}")

    @property
    def information_var(self):
        return max(self.noise_var, MIN_NOISE_VAR)

    @property
    def slope(self):
        """dB lost per natural-log unit of distance: 10*gamma/ln(10)."""
        return 10.0 * self.ple / LN10


@dataclass(frozen=True, eq=False)
class Scenario:
    """One emitter inside an AOI, observed by N UAVs flying known plans."""
    aoi: Aoi
    emitter: np.ndarray
    plans: tuple
    params: tuple = field(default=())

    def __post_init__(self):
        emitter = np.array(self.emitter, dtype=float).reshape(-1)
        if emitter.shape != (3,):
            raise ContractViolation(f"emitter must be a 3-vector, got shape {emitter.shape}")
        emitter.flags.writeable = False
        object.__setattr__(self, 'emitter', emitter)
        plans = tuple(self.plans)
        if not plans or not all(isinstance(p, TrajectoryPlan) for p in plans):
            raise ContractViolation("a scenario needs at least one TrajectoryPlan")
        object.__setattr__(self, 'plans', plans)
        params = self.params
        if isinstance(params, ChannelParams):
            params = (params,) * len(plans)
        params = tuple(params) or (ChannelParams(),) * len(plans)
        if len(params) != len(plans):
            raise ContractViolation(f"{len(plans)} plans but {len(params)} channel parameter sets")
        object.__setattr__(self, 'params', params)

    @property
    def n_uavs(self):
        return len(self.plans)

    @property
    def sample_counts(self):
        return [plan.sample_count for plan in self.plans]

    @property
    def total_samples(self):
        return sum(self.sample_counts)

    def positions(self, i):
        """Waypoints of UAV i (0-based) as an (M_i, 3) array."""
        return self.plans[i].positions()


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """RSS samples (dB) one UAV took at its waypoints."""
    uav_index: int
    positions: np.ndarray
    rss: np.ndarray
    params: ChannelParams

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float).reshape(-1, 3)
        rss = np.array(self.rss, dtype=float).reshape(-1)
        if len(rss) != len(positions):
            raise ContractViolation(f"{len(rss)} RSS samples for {len(positions)} waypoints")
        positions.flags.writeable = False
        rss.flags.writeable = False
        object.__setattr__(self, 'positions', positions)
        object.__setattr__(self, 'rss', rss)

    @property
    def sample_count(self):
        return len(self.rss)

    @property
    def waypoints(self):
        return [Waypoint(p, self.uav_index, j) for j, p in enumerate(self.positions, start=1)]

    @property
    def range_estimates(self):
        return invert_rss(self.params, self.rss)


# =============================================================================
# Path-loss model
# =============================================================================

def mean_rss(params, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise SingularGeometryError("mean RSS is undefined at zero distance from the emitter")
    value = params.p0 - 10.0 * params.ple * np.log10(d / params.d0)
    return float(value) if value.ndim == 0 else value


def invert_rss(params, rss):
    """Range whose noiseless mean RSS equals the given value."""
    value = params.d0 * np.power(10.0, (params.p0 - np.asarray(rss, dtype=float)) / (10.0 * params.ple))
    return float(value) if np.ndim(value) == 0 else value


def rss_partials(params, positions, s):
    """(M, 3) matrix of dP_j/ds for the mean RSS at each waypoint."""
    offsets = np.asarray(s, dtype=float) - np.asarray(positions, dtype=float)
    squared = np.einsum('ij,ij->i', offsets, offsets)
    if np.any(squared == 0):
        raise SingularGeometryError("point coincides with a waypoint")
    return -params.slope * offsets / squared[:, None]


# =============================================================================
# Measurement synthesis
# =============================================================================

def noiseless_rss(scenario, i):
    return mean_rss(scenario.params[i], distances(scenario.positions(i), scenario.emitter))


def sample_measurements(scenario, seed):
    """
    Draw one MeasurementSet per UAV. `seed` may be an int, a SeedSequence or a
    Generator; the same seed always yields bit-identical samples.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    measurements = []
    for i, plan in enumerate(scenario.plans):
        params = scenario.params[i]
        mean = noiseless_rss(scenario, i)
        noise = rng.normal(0.0, math.sqrt(params.noise_var), size=plan.sample_count)
        measurements.append(MeasurementSet(i + 1, scenario.positions(i), mean + noise, params))
    return measurements


# =============================================================================
# Objectives
# =============================================================================

def _as_list(meas):
    return [meas] if isinstance(meas, MeasurementSet) else list(meas)


def ls_residuals(meas_i, s):
    return meas_i.range_estimates - distances(meas_i.positions, s)


def ls_objective(meas, s):
    """Sum over all UAVs and samples of (range estimate - geometric distance)^2."""
    return float(sum(np.sum(ls_residuals(m, s) ** 2) for m in _as_list(meas)))


def ls_gradient(meas_i, s):
    s = np.asarray(s, dtype=float)
    offsets = s - meas_i.positions
    d = np.linalg.norm(offsets, axis=1)
    if np.any(d == 0):
        raise SingularGeometryError(f"iterate coincides with a waypoint of UAV {meas_i.uav_index}")
    weights = 2.0 * (d - meas_i.range_estimates) / d
    return weights @ offsets


def log_likelihood(meas, s):
    total = 0.0
    unbounded = False
    for m in _as_list(meas):
        residual = m.rss - mean_rss(m.params, distances(m.positions, s))
        sigma = m.params.noise_var
        if sigma == 0:
            if np.any(residual != 0):
                raise DegenerateLikelihoodError(
                    f"UAV {m.uav_index} has zero noise variance but a nonzero residual"
                )
            unbounded = True
            continue
        total += -0.5 * m.sample_count * math.log(2 * math.pi * sigma) - float(residual @ residual) / (2 * sigma)
    return math.inf if unbounded else total


# =============================================================================
# CSV interchange
# =============================================================================

def measurements_to_csv(measurements, path):
    try:
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(MEASUREMENT_CSV_COLUMNS)
            for m in measurements:
                for j, (point, rss) in enumerate(zip(m.positions, m.rss), start=1):
                    writer.writerow([m.uav_index, j, *(repr(float(v)) for v in point), repr(float(rss))])
    except OSError as exc:
        raise HarnessIOError(path, f"cannot write measurements: {exc}") from exc
    logger.info("Wrote %d measurement sets to %s", len(measurements), path)


def measurements_from_csv(path, params):
    """
    Read measurements back; `params` is one ChannelParams shared by every UAV
    or a mapping from uav_id to ChannelParams.
    """
    rows = {}
    try:
        with open(path, newline='') as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != MEASUREMENT_CSV_COLUMNS:
                raise HarnessIOError(path, f"expected columns {MEASUREMENT_CSV_COLUMNS}, got {reader.fieldnames}")
            for row in reader:
                rows.setdefault(int(row['uav_id']), []).append(row)
    except OSError as exc:
        raise HarnessIOError(path, f"cannot read measurements: {exc}") from exc

    measurements = []
    for uav_id in sorted(rows):
        samples = sorted(rows[uav_id], key=lambda r: int(r['sample_id']))
        positions = [[float(r['x']), float(r['y']), float(r['z'])] for r in samples]
        rss = [float(r['rss_db']) for r in samples]
        uav_params = params if isinstance(params, ChannelParams) else params[uav_id]
        measurements.append(MeasurementSet(uav_id, positions, rss, uav_params))
    return measurements
