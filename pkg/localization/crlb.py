"""
Fisher information of the whole cluster and the resulting Cramer-Rao bound.

Per-UAV information matrices add up to the cluster information because the
shadowing is independent across UAVs. The bound is the trace of the inverse
information over the searched axes.
"""
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .estimators import CONDITION_LIMIT, exact_sum, fim_single
from .exceptions import UnobservableGeometryError


@dataclass(frozen=True, eq=False)
class FimReport:
    per_uav: tuple
    total: np.ndarray
    crlb_trace: float
    axes: tuple = (0, 1, 2)

    @property
    def crlb_root(self):
        return math.sqrt(self.crlb_trace)


def _axes_for(scenario, axes):
    if axes is None:
        axes = scenario.aoi.free_axes or (0, 1, 2)
    return tuple(axes)


def trace_inverse(information):
    """Tr(F^-1), refusing singular or badly conditioned matrices."""
    information = np.asarray(information, dtype=float)
    if not np.all(np.isfinite(information)) or np.linalg.cond(information) > CONDITION_LIMIT:
        raise UnobservableGeometryError("Fisher information is singular; the emitter is unobservable")
    return float(np.trace(np.linalg.inv(information)))


def crlb_cofactor(information):
    """
    Tr(F^-1) through the adjugate: the sum of the order-(n-1) principal minors
    over det F. For a 3x3 matrix the numerator is
    sum_{a<b} (e_aa * e_bb - e_ab^2).
    """
    information = np.asarray(information, dtype=float)
    n = len(information)
    determinant = float(np.linalg.det(information))
    if determinant == 0 or not math.isfinite(determinant):
        raise UnobservableGeometryError("Fisher information has zero determinant")
    if n == 1:
        return 1.0 / determinant
    minors = (
        np.linalg.det(information[np.ix_(rows, rows)])
        for rows in combinations(range(n), n - 1)
    )
    return math.fsum(float(m) for m in minors) / determinant


def fim_total(scenario, s, axes=None):
    """Per-UAV and total information at s, with the bound over the searched axes."""
    axes = _axes_for(scenario, axes)
    per_uav = tuple(
        fim_single(scenario.params[i], scenario.positions(i), s)
        for i in range(scenario.n_uavs)
    )
    total = exact_sum(per_uav)
    try:
        bound = trace_inverse(total[np.ix_(axes, axes)])
    except UnobservableGeometryError:
        bound = math.inf
    return FimReport(per_uav, total, bound, axes)


def crlb(scenario, s, axes=None):
    """Lower bound (m^2) on the MSE of any unbiased estimator of the emitter position."""
    axes = _axes_for(scenario, axes)
    report = fim_total(scenario, s, axes)
    return trace_inverse(report.total[np.ix_(axes, axes)])
