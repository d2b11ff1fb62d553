"""
Round-based simulation of the center/edge protocol.

UAV 1 is the center; UAVs 2..N are edges. Every value that crosses a link is
logged as a Message whose size is (#position values)*p + (#weight values)*q
bits, with tau (position dimension) kept as an accounting parameter. Work the
center does on its own measurements never touches a link. Messages carry full
precision values; p and q only drive the accounting.
"""
import csv
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .estimators import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    Method,
    PositionEstimate,
    avg_fuse,
    centroid_init,
    def_fuse,
    dem_fuse_scalars,
    dem_precision,
    dgn_center_step,
    dgn_local_terms,
    dmm_converged,
    dmm_fuse,
    dmm_local_update,
    grid_search_local,
)
from .exceptions import (
    ConfigurationError,
    ContractViolation,
    HarnessIOError,
    RankDeficientFusionError,
)

logger = logging.getLogger(__name__)

CENTER = 1

COST_CSV_COLUMNS = ['method', 'N', 'rounds', 'bits_total', 'flops_total']


class PayloadKind(str, Enum):
    ITERATE = 'iterate'
    ESTIMATE = 'estimate'
    GRADIENT = 'gradient'
    MATRIX = 'matrix'
    SCALAR_WEIGHT = 'scalar-weight'
    GRADIENT_MATRIX = 'gradient+matrix'
    ESTIMATE_INFO = 'estimate+info'
    ESTIMATE_SCALAR = 'estimate+scalar'

    def value_counts(self, tau):
        """(#position values, #weight values) carried by this payload."""
        return {
            PayloadKind.ITERATE: (tau, 0),
            PayloadKind.ESTIMATE: (tau, 0),
            PayloadKind.GRADIENT: (tau, 0),
            PayloadKind.MATRIX: (0, tau * tau),
            PayloadKind.SCALAR_WEIGHT: (0, 1),
            PayloadKind.GRADIENT_MATRIX: (tau, tau * tau),
            PayloadKind.ESTIMATE_INFO: (tau, tau * tau),
            PayloadKind.ESTIMATE_SCALAR: (tau, 1),
        }[self]

    def bit_size(self, tau, p_bits, q_bits):
        positions, weights = self.value_counts(tau)
        return positions * p_bits + weights * q_bits


@dataclass(frozen=True, eq=False)
class Message:
    sender: int
    receiver: int
    round: int
    kind: PayloadKind
    bit_size: int
    payload: object = None


@dataclass(frozen=True)
class CostReport:
    method: str
    n_uavs: int
    rounds: int
    bits_total: int
    flops_total: int
    per_round: tuple = ()
    messages: int = 0
    fallback: bool = False

    def as_row(self):
        return [self.method, self.n_uavs, self.rounds, self.bits_total, self.flops_total]


@dataclass(frozen=True)
class ProtocolOptions:
    tau: int = 3
    p_bits: int = 32
    q_bits: int = 32
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    grid_step: float = 200.0
    damping: float = None
    init: str = 'centroid'

    def __post_init__(self):
        for name in ('tau', 'p_bits', 'q_bits'):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.tol < 0 or self.max_iter < 0:
            raise ConfigurationError("tol and max_iter must be non-negative")
        if not self.grid_step > 0:
            raise ConfigurationError(f"grid_step must be positive, got {self.grid_step}")
        if self.init not in ('centroid', 'grid'):
            raise ConfigurationError(f"init must be 'centroid' or 'grid', got {self.init!r}")


class ClusterNetwork:
    """
    Logical star network between the center and the edges. Keeps the message
    log and enforces strictly increasing rounds on every directed link.
    """

    def __init__(self, n_uavs, tau=3, p_bits=32, q_bits=32):
        if n_uavs < 2:
            raise ConfigurationError(f"the protocol needs a center and at least one edge, got N={n_uavs}")
        self.n_uavs = n_uavs
        self.tau = tau
        self.p_bits = p_bits
        self.q_bits = q_bits
        self.messages = []
        self._last_round = {}

    @property
    def edges(self):
        return range(CENTER + 1, self.n_uavs + 1)

    def send(self, sender, receiver, round_, kind, payload=None):
        link = (sender, receiver)
        if round_ <= self._last_round.get(link, 0):
            raise ContractViolation(f"round {round_} on link {sender}->{receiver} is not after round {self._last_round[link]}")
        self._last_round[link] = round_
        message = Message(sender, receiver, round_, kind, kind.bit_size(self.tau, self.p_bits, self.q_bits), payload)
        self.messages.append(message)
        return message

    def broadcast(self, round_, kind, payload):
        return [self.send(CENTER, edge, round_, kind, payload) for edge in self.edges]

    @property
    def bits_total(self):
        return sum(m.bit_size for m in self.messages)

    def bits_per_round(self):
        rounds = {}
        for m in self.messages:
            rounds[m.round] = rounds.get(m.round, 0) + m.bit_size
        return tuple(rounds[r] for r in sorted(rounds))

    def report(self, method, rounds, flops, fallback=False):
        return CostReport(
            method=method.value,
            n_uavs=self.n_uavs,
            rounds=rounds,
            bits_total=self.bits_total,
            flops_total=flops,
            per_round=self.bits_per_round(),
            messages=len(self.messages),
            fallback=fallback,
        )


# =============================================================================
# Closed-form costs
# =============================================================================

def _require_positive(**values):
    for name, value in values.items():
        if value is None or value <= 0:
            raise ContractViolation(f"{name} must be positive, got {value}")


def comm_bits_closed_form(method, n_uavs, tau, p_bits, q_bits, k=1):
    """Total transmitted bits for a run of `k` rounds (k is ignored by one-round methods)."""
    method = Method.parse(method)
    _require_positive(n_uavs=n_uavs, tau=tau, p_bits=p_bits, q_bits=q_bits, k=k)
    edges = n_uavs - 1
    if method is Method.DMM:
        return 2 * edges * tau * p_bits * k
    if method is Method.DGN:
        return edges * (2 * tau * p_bits + tau * tau * q_bits) * k
    if method is Method.DEF:
        return edges * (tau * p_bits + tau * tau * q_bits)
    if method is Method.DEM:
        return edges * (tau * p_bits + q_bits)
    return edges * tau * p_bits


def grid_node_count(aoi, grid_step):
    """Number of nodes a local grid search visits; same cell layout as AOI.grid_nodes."""
    _require_positive(grid_step=grid_step)
    return math.prod(len(aoi.grid_axis(axis, grid_step)) for axis in range(3))


def flops_closed_form(method, tau, total_samples, k=1, grid_nodes=1):
    method = Method.parse(method)
    _require_positive(tau=tau, total_samples=total_samples)
    if method is Method.DMM:
        _require_positive(k=k)
        return 3 * tau * total_samples * k
    if method is Method.DGN:
        _require_positive(k=k)
        return (5 * tau * tau + 5 * tau) * total_samples * k
    _require_positive(grid_nodes=grid_nodes)
    return 3 * tau * total_samples * grid_nodes


# =============================================================================
# Protocol execution
# =============================================================================

def initial_point(meas, aoi, options):
    """Starting iterate: the UAV-start centroid, or the center's own grid estimate."""
    if options.init == 'grid':
        return grid_search_local(meas[0], aoi, options.grid_step).position.copy()
    return centroid_init(meas, aoi)


def _run_dmm(net, meas, aoi, options):
    n_uavs = len(meas)
    total_samples = sum(m.sample_count for m in meas)
    s = initial_point(meas, aoi, options)
    rounds = 0
    previous_step = None
    while rounds < options.max_iter:
        rounds += 1
        down = net.broadcast(rounds, PayloadKind.ITERATE, s.copy())
        local_center = dmm_local_update(s, meas[0], n_uavs, total_samples)
        up = [
            net.send(msg.receiver, CENTER, rounds, PayloadKind.ITERATE,
                     dmm_local_update(msg.payload, meas[msg.receiver - 1], n_uavs, total_samples))
            for msg in down
        ]
        fused = aoi.clamp(dmm_fuse([local_center] + [msg.payload for msg in up]))
        step = float(np.linalg.norm(fused - s))
        s = fused
        if dmm_converged(step, previous_step, options.tol):
            break
        previous_step = step
    return PositionEstimate(s, source=Method.DMM.value), rounds, False


def _run_dgn(net, meas, aoi, options):
    axes = list(aoi.free_axes)
    s = initial_point(meas, aoi, options)
    rounds = 0
    while rounds < options.max_iter:
        rounds += 1
        down = net.broadcast(rounds, PayloadKind.ITERATE, s.copy())
        terms = [dgn_local_terms(meas[0], s, axes)]
        terms += [
            net.send(msg.receiver, CENTER, rounds, PayloadKind.GRADIENT_MATRIX,
                     dgn_local_terms(meas[msg.receiver - 1], msg.payload, axes)).payload
            for msg in down
        ]
        delta = dgn_center_step(terms, options.damping)
        moved = s.copy()
        moved[axes] += delta
        projected = aoi.clamp(moved)
        step = float(np.linalg.norm(projected - s))
        s = projected
        if step <= options.tol:
            break
    return PositionEstimate(s, source=Method.DGN.value), rounds, False


def _run_one_round(method, net, meas, aoi, options):
    axes = aoi.free_axes
    locals_ = [grid_search_local(m, aoi, options.grid_step) for m in meas]
    center, edges = locals_[0], locals_[1:]

    if method is Method.DEF:
        received = [net.send(e, CENTER, 1, PayloadKind.ESTIMATE_INFO, est).payload for e, est in zip(net.edges, edges)]
        try:
            return def_fuse([center] + received, axes), 1, False
        except RankDeficientFusionError as exc:
            logger.warning("DEF fusion fell back to the plain average: %s", exc)
            fused = avg_fuse([center] + received)
            return PositionEstimate(fused.position, source=Method.DEF.value, fallback=True), 1, True

    if method is Method.DEM:
        received = [
            net.send(e, CENTER, 1, PayloadKind.ESTIMATE_SCALAR, (est.position, dem_precision(est.info, axes))).payload
            for e, est in zip(net.edges, edges)
        ]
        positions = [center.position] + [p for p, _ in received]
        precisions = [dem_precision(center.info, axes)] + [w for _, w in received]
        return dem_fuse_scalars(positions, precisions, axes), 1, False

    received = [net.send(e, CENTER, 1, PayloadKind.ESTIMATE, est).payload for e, est in zip(net.edges, edges)]
    return avg_fuse([center] + received), 1, False


def run_protocol(method, scenario, meas, options=None):
    """
    Execute one localization run as explicit message rounds and return the
    estimate together with its cost report.
    """
    method = Method.parse(method)
    options = options or ProtocolOptions()
    meas = list(meas)
    if scenario.n_uavs < 2:
        raise ConfigurationError(f"the protocol needs at least two UAVs, got {scenario.n_uavs}")
    if len(meas) != scenario.n_uavs:
        raise ContractViolation(f"{len(meas)} measurement sets for {scenario.n_uavs} UAVs")

    net = ClusterNetwork(scenario.n_uavs, options.tau, options.p_bits, options.q_bits)
    aoi = scenario.aoi
    total_samples = sum(m.sample_count for m in meas)

    if method is Method.DMM:
        estimate, rounds, fallback = _run_dmm(net, meas, aoi, options)
    elif method is Method.DGN:
        estimate, rounds, fallback = _run_dgn(net, meas, aoi, options)
    else:
        estimate, rounds, fallback = _run_one_round(method, net, meas, aoi, options)

    if method.is_iterative:
        flops = flops_closed_form(method, options.tau, total_samples, k=max(rounds, 1))
    else:
        grid_nodes = grid_node_count(aoi, options.grid_step)
        flops = flops_closed_form(method, options.tau, total_samples, grid_nodes=grid_nodes)

    report = net.report(method, rounds, flops, fallback)
    logger.info(
        "%s run: N=%d, rounds=%d, bits=%d, flops=%d%s",
        method.value, scenario.n_uavs, rounds, report.bits_total, flops, " (fallback)" if fallback else "",
    )
    return estimate, report


def cost_reports_to_csv(reports, path):
    try:
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(COST_CSV_COLUMNS)
            for report in reports:
                writer.writerow(report.as_row())
    except OSError as exc:
        raise HarnessIOError(path, f"cannot write cost reports: {exc}") from exc
