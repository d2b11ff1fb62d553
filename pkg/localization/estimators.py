"""
Position estimators for the UAV cluster.

Iterative methods (DMM, DGN) work on the range least-squares objective and
exchange a few numbers per round. One-round methods (DEF, DEM, AVG) let every
UAV solve its own problem by grid search and fuse the local estimates once at
the center. All of them act on the AOI's free axes only; fixed axes stay at
their AOI value.

Sums across UAVs go through math.fsum so fusion results do not depend on the
order in which local contributions arrive.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import ls_gradient, ls_objective, mean_rss, rss_partials
from .exceptions import (
    ContractViolation,
    RankDeficientFusionError,
    RankDeficientSolveError,
    SingularGeometryError,
)

logger = logging.getLogger(__name__)

# Matrices with a larger condition number are treated as singular
CONDITION_LIMIT = 1e12

DEFAULT_TOL = 1.0
DEFAULT_MAX_ITER = 50

# A DMM step shorter than this share of tol means the iterate has stalled
STALL_FRACTION = 1e-3


class Method(str, Enum):
    DMM = 'DMM'
    DGN = 'DGN'
    DEF = 'DEF'
    DEM = 'DEM'
    AVG = 'AVG'

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ContractViolation(f"unknown method {tag!r}; expected one of {[m.value for m in cls]}") from None

    @property
    def is_iterative(self):
        return self in (Method.DMM, Method.DGN)


@dataclass(frozen=True, eq=False)
class PositionEstimate:
    position: np.ndarray
    info: np.ndarray = None
    source: str = ''
    fallback: bool = False

    def __post_init__(self):
        position = np.array(self.position, dtype=float).reshape(-1)
        if position.shape != (3,):
            raise ContractViolation(f"position must be a 3-vector, got shape {position.shape}")
        position.flags.writeable = False
        object.__setattr__(self, 'position', position)
        if self.info is not None:
            info = np.array(self.info, dtype=float)
            if info.shape != (3, 3):
                raise ContractViolation(f"info must be 3x3, got shape {info.shape}")
            scale = max(1.0, float(np.max(np.abs(info))))
            if np.max(np.abs(info - info.T)) > 1e-12 * scale:
                raise ContractViolation("info matrix is not symmetric")
            if np.min(np.linalg.eigvalsh(info)) < -1e-10 * scale:
                raise ContractViolation("info matrix is not positive semidefinite")
            info.flags.writeable = False
            object.__setattr__(self, 'info', info)


@dataclass(frozen=True, eq=False)
class FusionWeights:
    """Per-UAV weight matrices over the fused axes; they sum to the identity."""
    matrices: tuple
    axes: tuple = (0, 1, 2)


@dataclass(frozen=True, eq=False)
class DmmState:
    iterate: np.ndarray
    iteration: int = 0
    history: tuple = field(default=())


def exact_sum(arrays):
    stacked = np.stack([np.asarray(a, dtype=float) for a in arrays])
    flat = stacked.reshape(len(stacked), -1)
    return np.array([math.fsum(column) for column in flat.T]).reshape(stacked.shape[1:])


def _block(matrix, axes):
    return np.asarray(matrix)[np.ix_(axes, axes)]


def _is_well_conditioned(matrix):
    if not np.all(np.isfinite(matrix)):
        return False
    return np.linalg.cond(matrix) <= CONDITION_LIMIT


def centroid_init(meas, aoi):
    """Centroid of every UAV's first waypoint, projected into the AOI."""
    starts = [m.positions[0] for m in meas]
    return aoi.clamp(exact_sum(starts) / len(starts))


def _check_init(init, aoi):
    init = np.asarray(init, dtype=float).reshape(3)
    if not aoi.contains(init):
        raise ContractViolation(f"initial point {init.tolist()} lies outside the AOI")
    return init


# =============================================================================
# Fisher information
# =============================================================================

def fim_single(params, waypoints, s):
    """
    Fisher information one UAV's samples carry about the emitter position:
    (1/sigma) * G^T G with G the M x 3 matrix of mean-RSS partials.
    """
    if len(waypoints) and not isinstance(waypoints, np.ndarray) and hasattr(waypoints[0], 'position'):
        waypoints = np.array([w.position for w in waypoints])
    partials = rss_partials(params, waypoints, s)
    info = partials.T @ partials / params.information_var
    return (info + info.T) / 2


# =============================================================================
# Distributed majorize-minimization
# =============================================================================

def dmm_local_update(s_c, meas_i, n_uavs, total_samples):
    """Edge step: minimizer of this UAV's share of the 2K-curvature surrogate."""
    s_c = np.asarray(s_c, dtype=float)
    return s_c - (n_uavs / (2.0 * total_samples)) * ls_gradient(meas_i, s_c)


def dmm_fuse(locals_):
    if len(locals_) == 0:
        raise ContractViolation("cannot fuse an empty list of local iterates")
    return exact_sum(locals_) / len(locals_)


def remaining_distance(step, previous_step):
    """
    Geometric-tail estimate of the distance from the latest iterate to the
    limit point, taking the last step ratio as the contraction rate. Returns
    inf while the ratio says nothing about convergence.
    """
    if step == 0:
        return 0.0
    if previous_step is None or previous_step <= 0:
        return math.inf
    rate = step / previous_step
    if rate >= 1:
        return math.inf
    return step * rate / (1.0 - rate)


def dmm_converged(step, previous_step, tol):
    """
    True once the tail estimate is within tol/2 or the iterate has stalled.
    """
    if step <= STALL_FRACTION * tol:
        return True
    return remaining_distance(step, previous_step) <= tol / 2


def run_dmm(meas, aoi, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """
    Iterate local updates and center fusion until dmm_converged says the
    iterate is within `tol` meters of its limit point or `max_iter` rounds
    have run. Returns the estimate, the number of rounds executed and the
    objective value at every iterate.
    """
    meas = list(meas)
    n_uavs = len(meas)
    total_samples = sum(m.sample_count for m in meas)
    start = centroid_init(meas, aoi) if init is None else _check_init(init, aoi)
    state = DmmState(start, 0, (ls_objective(meas, start),))
    previous_step = None

    while state.iteration < max_iter:
        locals_ = [dmm_local_update(state.iterate, m, n_uavs, total_samples) for m in meas]
        fused = aoi.clamp(dmm_fuse(locals_))
        step = float(np.linalg.norm(fused - state.iterate))
        state = DmmState(fused, state.iteration + 1, state.history + (ls_objective(meas, fused),))
        logger.debug("DMM round %d: step %.4f m, objective %.6g", state.iteration, step, state.history[-1])
        if dmm_converged(step, previous_step, tol):
            break
        previous_step = step

    return PositionEstimate(state.iterate, source=Method.DMM.value), state.iteration, list(state.history)


# =============================================================================
# Distributed Gauss-Newton
# =============================================================================

def dgn_local_terms(meas_i, s, axes=(0, 1, 2)):
    """Edge contribution (J^T J, J^T r) for the range residuals of one UAV."""
    s = np.asarray(s, dtype=float)
    offsets = s - meas_i.positions
    d = np.linalg.norm(offsets, axis=1)
    if np.any(d == 0):
        raise SingularGeometryError(f"iterate coincides with a waypoint of UAV {meas_i.uav_index}")
    jacobian = offsets[:, list(axes)] / d[:, None]
    residual = meas_i.range_estimates - d
    normal = jacobian.T @ jacobian
    return (normal + normal.T) / 2, jacobian.T @ residual


def default_damping(normal):
    """1e-6 times a third of the trace, whatever the number of free axes."""
    return 1e-6 * float(np.trace(normal)) / 3


def dgn_center_step(terms, damping=None):
    """Solve (sum A_i + damping*I) delta = sum g_i at the center."""
    normal = exact_sum([a for a, _ in terms])
    gradient = exact_sum([g for _, g in terms])
    if damping is None:
        damping = default_damping(normal)
    if damping < 0:
        raise ContractViolation(f"damping must be non-negative, got {damping}")
    system = normal + damping * np.eye(len(normal))
    if not _is_well_conditioned(system):
        raise RankDeficientSolveError("Gauss-Newton normal matrix is singular; add damping")
    return np.linalg.solve(system, gradient)


def run_dgn(meas, aoi, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, damping=None):
    meas = list(meas)
    axes = list(aoi.free_axes)
    s = centroid_init(meas, aoi) if init is None else _check_init(init, aoi)
    iterations = 0
    while iterations < max_iter:
        delta = dgn_center_step([dgn_local_terms(m, s, axes) for m in meas], damping)
        moved = s.copy()
        moved[axes] += delta
        projected = aoi.clamp(moved)
        step = float(np.linalg.norm(projected - s))
        s = projected
        iterations += 1
        logger.debug("DGN round %d: projected step %.4f m", iterations, step)
        if step <= tol:
            break
    return PositionEstimate(s, source=Method.DGN.value), iterations


# =============================================================================
# Local grid search
# =============================================================================

def grid_objective(meas_i, nodes):
    """Per-UAV RSS residual sum at each grid node; nodes on a waypoint score inf."""
    d = np.linalg.norm(nodes[:, None, :] - meas_i.positions[None, :, :], axis=2)
    singular = np.any(d == 0, axis=1)
    d[singular] = 1.0
    residual = meas_i.rss[None, :] - mean_rss(meas_i.params, d)
    objective = np.sum(residual ** 2, axis=1)
    objective[singular] = np.inf
    return objective


def grid_search_local(meas_i, aoi, step):
    """
    Best grid node for one UAV's own samples, with the UAV's Fisher information
    evaluated at that node. Ties go to the lexicographically smallest node.
    """
    nodes = aoi.grid_nodes(step)
    best = nodes[int(np.argmin(grid_objective(meas_i, nodes)))]
    return PositionEstimate(best, fim_single(meas_i.params, meas_i.positions, best), source='GRID')


# =============================================================================
# One-round fusion rules
# =============================================================================

def _require_nonempty(locals_):
    if len(locals_) == 0:
        raise ContractViolation("cannot fuse an empty list of local estimates")


def _info_blocks(locals_, axes):
    if any(e.info is None for e in locals_):
        raise ContractViolation("every local estimate must carry an information matrix")
    return [_block(e.info, axes) for e in locals_]


def _combine(locals_, axes, coordinates):
    position = np.array(locals_[0].position)
    position[list(axes)] = coordinates
    return position


def def_weights(locals_, axes=(0, 1, 2)):
    """Matrix weights (sum_k F_k)^-1 F_i from the information at each local estimate."""
    _require_nonempty(locals_)
    axes = tuple(axes)
    blocks = _info_blocks(locals_, axes)
    if len(blocks) == 1:
        return FusionWeights((np.eye(len(axes)),), axes)
    total = exact_sum(blocks)
    if not _is_well_conditioned(total):
        raise RankDeficientFusionError("summed Fisher information is singular")
    return FusionWeights(tuple(np.linalg.solve(total, f) for f in blocks), axes)


def def_fuse(locals_, axes=(0, 1, 2)):
    weights = def_weights(locals_, axes)
    axes = list(weights.axes)
    weighted = [w @ e.position[axes] for w, e in zip(weights.matrices, locals_)]
    info = exact_sum([e.info for e in locals_])
    return PositionEstimate(_combine(locals_, axes, exact_sum(weighted)), (info + info.T) / 2, Method.DEF.value)


def dem_precision(info, axes=(0, 1, 2)):
    """Inverse of the local CRLB trace, the scalar a DEM edge transmits."""
    block = _block(info, axes)
    if not _is_well_conditioned(block):
        raise RankDeficientFusionError("local Fisher information is singular")
    return 1.0 / float(np.trace(np.linalg.inv(block)))


def dem_weights(precisions):
    total = math.fsum(precisions)
    return [p / total for p in precisions]


def dem_fuse_scalars(positions, precisions, axes=(0, 1, 2)):
    """Center side of DEM: fuse positions with normalized scalar weights."""
    if len(positions) == 0:
        raise ContractViolation("cannot fuse an empty list of local estimates")
    axes = list(axes)
    if len(positions) == 1:
        return PositionEstimate(positions[0], source=Method.DEM.value)
    weights = dem_weights(precisions)
    weighted = [w * np.asarray(p)[axes] for w, p in zip(weights, positions)]
    position = np.array(positions[0], dtype=float)
    position[axes] = exact_sum(weighted)
    return PositionEstimate(position, source=Method.DEM.value)


def dem_fuse(locals_, axes=(0, 1, 2)):
    _require_nonempty(locals_)
    precisions = [dem_precision(e.info, axes) for e in locals_]
    return dem_fuse_scalars([e.position for e in locals_], precisions, axes)


def avg_fuse(locals_):
    _require_nonempty(locals_)
    return PositionEstimate(exact_sum([e.position for e in locals_]) / len(locals_), source=Method.AVG.value)


# =============================================================================
# Fusion MSE diagnostics
# =============================================================================

def fusion_mse(weights, covariances):
    """Tr(sum_i W_i J_i W_i^T): MSE of a linear fusion of independent local errors."""
    return math.fsum(float(np.trace(w @ c @ w.T)) for w, c in zip(weights, covariances))


@dataclass(frozen=True)
class MseBounds:
    matrix_weighted: float
    scalar_weighted: float
    best_single: float
    average: float


def mse_bounds(covariances):
    """
    Minimum fused MSE for matrix weights, scalar weights, the best single
    estimate and the plain average of N independent unbiased estimates.
    """
    n = len(covariances)
    traces = [float(np.trace(c)) for c in covariances]
    information = exact_sum([np.linalg.inv(c) for c in covariances])
    return MseBounds(
        matrix_weighted=float(np.trace(np.linalg.inv(information))),
        scalar_weighted=1.0 / math.fsum(1.0 / t for t in traces),
        best_single=min(traces),
        average=math.fsum(traces) / n ** 2,
    )
