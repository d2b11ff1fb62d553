"""
Scenario construction and Monte Carlo RMSE experiments.

Each trial draws a fresh emitter position and fresh shadowing from a seed
sequence keyed by (base seed, sweep index, trial index), so a table is fully
reproducible from its config. All methods in a trial see the same scenario and
the same measurements.
"""
import csv
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from tqdm import tqdm

from .channel import ChannelParams, Scenario, sample_measurements
from .config import SweepKind
from .crlb import crlb
from .exceptions import ConfigurationError, HarnessIOError, LocalizationError
from .geometry import Aoi, Leg, TrajectoryPlan, straight_plan, sweep_plan
from .simnet import ProtocolOptions, run_protocol

logger = logging.getLogger(__name__)

RMSE_CSV_COLUMNS = ['sweep', 'method', 'rmse_m', 'crlb_root_m', 'bits', 'flops', 'trials', 'failures']

TEMPLATES = ('circle', 'sweep', 'line')


# =============================================================================
# Scenario templates
# =============================================================================

def _circle_plans(aoi, n_uavs, samples, altitude, radius, speed, leg_duration=None):
    """
    Starts on a circle around the AOI center; radial legs inward, then a
    tangential dogleg. Without an explicit leg duration the radial legs end at
    the AOI center and the dogleg legs have the same length.
    """
    center = aoi.center
    radial_legs = math.ceil((samples - 1) / 2)
    if leg_duration is None:
        leg_duration = radius / (speed * max(radial_legs, 1))
    plans = []
    for i in range(n_uavs):
        angle = 2 * math.pi * i / n_uavs
        outward = np.array([math.cos(angle), math.sin(angle), 0.0])
        tangent = np.array([-math.sin(angle), math.cos(angle), 0.0])
        start = np.array([center[0], center[1], altitude]) + radius * outward
        legs = [Leg(-speed * outward, leg_duration) for _ in range(radial_legs)]
        legs += [Leg(speed * tangent, leg_duration) for _ in range(samples - 1 - radial_legs)]
        plans.append(TrajectoryPlan(start, tuple(legs), samples))
    return plans


def _sweep_plans(aoi, n_uavs, samples, altitude, speed):
    """Each UAV sweeps its own horizontal strip of the AOI in two lanes."""
    (x0, x1), (y0, y1) = aoi.x_range, aoi.y_range
    width = (y1 - y0) / n_uavs
    return [
        sweep_plan((x0, x1), (y0 + (i + 0.25) * width, y0 + (i + 0.75) * width), altitude, samples, lanes=2, speed=speed)
        for i in range(n_uavs)
    ]


def _line_plans(aoi, n_uavs, samples, altitude, speed, leg_duration=None):
    """Parallel straight passes along x, evenly spaced in y; by default each pass spans the AOI."""
    (x0, x1), (y0, y1) = aoi.x_range, aoi.y_range
    if leg_duration is None:
        leg_duration = (x1 - x0) / (speed * max(samples - 1, 1))
    spacing = (y1 - y0) / (n_uavs + 1)
    return [
        straight_plan((x0, y0 + (i + 1) * spacing, altitude), (speed, 0.0, 0.0), leg_duration, samples)
        for i in range(n_uavs)
    ]


def build_scenario(template='circle', n_uavs=5, samples_per_uav=8, seed=None, channel=None,
                   altitude=60.0, aoi_size=12000.0, emitter_altitude=(0.0, 0.0),
                   radius=4000.0, speed=20.0, leg_duration=None):
    """
    Scenario over a square AOI of side `aoi_size` with UAVs at `altitude` and an
    emitter drawn uniformly in the AOI from `seed`. Leave `leg_duration` unset
    to let the circle and line trajectories cross the AOI.
    """
    if n_uavs < 2:
        raise ConfigurationError(f"a cluster needs at least two UAVs, got {n_uavs}")
    if template not in TEMPLATES:
        raise ConfigurationError(f"unknown scenario template {template!r}; expected one of {TEMPLATES}")
    aoi = Aoi((0.0, aoi_size), (0.0, aoi_size), emitter_altitude)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    emitter = rng.uniform(aoi.bounds[:, 0], aoi.bounds[:, 1])

    if template == 'circle':
        plans = _circle_plans(aoi, n_uavs, samples_per_uav, altitude, radius, speed, leg_duration)
    elif template == 'sweep':
        plans = _sweep_plans(aoi, n_uavs, samples_per_uav, altitude, speed)
    else:
        plans = _line_plans(aoi, n_uavs, samples_per_uav, altitude, speed, leg_duration)
    return Scenario(aoi, emitter, tuple(plans), channel or ChannelParams())


def scale_noise(scenario, factor):
    """Copy of the scenario with every UAV's noise variance multiplied by `factor`."""
    params = tuple(dataclasses.replace(p, noise_var=p.noise_var * factor) for p in scenario.params)
    return dataclasses.replace(scenario, params=params)


def trial_streams(seed, sweep_index, trial):
    """(scenario, noise) seed sequences of one Monte Carlo trial."""
    return np.random.SeedSequence([seed, sweep_index, trial]).spawn(2)


def scenario_from_config(config, seed, n_uavs=None):
    if config.scenario is not None:
        return config.scenario.to_scenario()
    return build_scenario(
        template=config.template,
        n_uavs=n_uavs or config.n_uavs,
        samples_per_uav=config.samples_per_uav,
        seed=seed,
        channel=config.channel.to_params(),
        altitude=config.altitude,
        aoi_size=config.aoi_size,
        emitter_altitude=config.emitter_altitude,
        radius=config.radius,
        speed=config.speed,
        leg_duration=config.leg_duration,
    )


def protocol_options(config, grid_step=None, rounds=None):
    """Protocol options for one sweep point; a rounds sweep runs exactly `rounds` iterations."""
    return ProtocolOptions(
        tau=config.tau,
        p_bits=config.p_bits,
        q_bits=config.q_bits,
        tol=0.0 if rounds is not None else config.tol,
        max_iter=rounds if rounds is not None else config.max_iter,
        grid_step=grid_step or config.grid_step,
        damping=config.damping,
        init=config.init,
    )


@dataclass(frozen=True, eq=False)
class SingleRun:
    """One seeded draw and every configured method's (method, estimate, report) on it."""
    scenario: Scenario
    measurements: tuple
    runs: tuple

    @property
    def reports(self):
        return [report for _, _, report in self.runs]


def single_run(config):
    """
    Trial 0 of an unswept experiment with the same config: one scenario, one
    set of measurements and one protocol run per method.
    """
    scenario_seed, noise_seed = trial_streams(config.seed, 0, 0)
    scenario = scenario_from_config(config, scenario_seed)
    meas = tuple(sample_measurements(scenario, noise_seed))
    options = protocol_options(config)
    runs = tuple((method, *run_protocol(method, scenario, meas, options)) for method in config.ordered_methods)
    return SingleRun(scenario, meas, runs)


# =============================================================================
# Result tables
# =============================================================================

@dataclass(frozen=True)
class RmseRow:
    sweep: object
    method: str
    rmse_m: float
    crlb_root_m: float
    bits: float
    flops: float
    trials: int
    failures: int

    def as_csv(self):
        def number(value):
            return repr(float(value))
        sweep = '' if self.sweep is None else self.sweep
        return [sweep, self.method, number(self.rmse_m), number(self.crlb_root_m),
                number(self.bits), number(self.flops), self.trials, self.failures]


@dataclass(frozen=True)
class RmseTable:
    rows: tuple = ()

    def row(self, sweep, method):
        for r in self.rows:
            if r.sweep == sweep and r.method == method:
                return r
        raise KeyError((sweep, method))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


class _MethodTally:
    def __init__(self):
        self.squared_errors = []
        self.bits = []
        self.flops = []
        self.failures = 0

    def row(self, sweep, method, crlb_root):
        def mean(values):
            return math.fsum(values) / len(values) if values else math.nan
        return RmseRow(
            sweep=sweep,
            method=method.value,
            rmse_m=math.sqrt(mean(self.squared_errors)) if self.squared_errors else math.nan,
            crlb_root_m=crlb_root,
            bits=mean(self.bits),
            flops=mean(self.flops),
            trials=len(self.squared_errors),
            failures=self.failures,
        )


def monte_carlo(config, progress=False):
    """
    Run `config.trials` seeded trials per sweep point and method and return
    the RMSE table, with the matching CRLB root sqrt(mean Tr F^-1).
    """
    methods = config.ordered_methods
    rows = []
    for sweep_index, value in enumerate(config.sweep.points):
        kind = config.sweep.kind
        n_uavs = int(value) if kind is SweepKind.UAV_COUNT else None
        options = protocol_options(
            config,
            grid_step=value if kind is SweepKind.GRID_STEP else None,
            rounds=int(value) if kind is SweepKind.ROUNDS else None,
        )
        tallies = {m: _MethodTally() for m in methods}
        bounds = []
        label = f"{config.name} [{kind.value}={value}]" if value is not None else config.name

        for trial in tqdm(range(config.trials), desc=label, disable=not progress, leave=False):
            scenario_seed, noise_seed = trial_streams(config.seed, sweep_index, trial)
            scenario = scenario_from_config(config, scenario_seed, n_uavs)
            try:
                meas = sample_measurements(scenario, noise_seed)
            except LocalizationError as exc:
                for tally in tallies.values():
                    tally.failures += 1
                logger.warning("Trial %d: cannot sample measurements: %s", trial, exc)
                continue
            try:
                bounds.append(crlb(scenario, scenario.emitter))
            except LocalizationError as exc:
                logger.warning("Trial %d: CRLB skipped: %s", trial, exc)

            for method in methods:
                tally = tallies[method]
                try:
                    estimate, report = run_protocol(method, scenario, meas, options)
                except LocalizationError as exc:
                    tally.failures += 1
                    logger.warning("Trial %d: %s failed: %s", trial, method.value, exc)
                    continue
                tally.squared_errors.append(float(np.sum((estimate.position - scenario.emitter) ** 2)))
                tally.bits.append(report.bits_total)
                tally.flops.append(report.flops_total)

        crlb_root = math.sqrt(math.fsum(bounds) / len(bounds)) if bounds else math.nan
        rows.extend(tallies[m].row(value, m, crlb_root) for m in methods)
        logger.info("Sweep point %s done: %d trials x %d methods", value, config.trials, len(methods))
    return RmseTable(tuple(rows))


# =============================================================================
# CSV emission
# =============================================================================

def emit_csv(table, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(RMSE_CSV_COLUMNS)
            for row in table:
                writer.writerow(row.as_csv())
    except OSError as exc:
        raise HarnessIOError(path, f"cannot write results: {exc}") from exc
    logger.info("Wrote %d rows to %s", len(table), path)
    return path


def read_csv(path):
    """Load a table written by emit_csv."""
    def sweep_value(text):
        if text == '':
            return None
        number = float(text)
        return int(number) if number.is_integer() and '.' not in text else number

    try:
        with open(path, newline='') as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != RMSE_CSV_COLUMNS:
                raise HarnessIOError(path, f"expected columns {RMSE_CSV_COLUMNS}, got {reader.fieldnames}")
            rows = [
                RmseRow(
                    sweep=sweep_value(r['sweep']),
                    method=r['method'],
                    rmse_m=float(r['rmse_m']),
                    crlb_root_m=float(r['crlb_root_m']),
                    bits=float(r['bits']),
                    flops=float(r['flops']),
                    trials=int(r['trials']),
                    failures=int(r['failures']),
                )
                for r in reader
            ]
    except OSError as exc:
        raise HarnessIOError(path, f"cannot read results: {exc}") from exc
    return RmseTable(tuple(rows))
