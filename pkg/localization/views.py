import logging

import numpy as np
from rest_framework import viewsets
from rest_framework.decorators import api_view
from rest_framework.response import Response

from .config import ExperimentConfig, validate_config
from .crlb import fim_total
from .exceptions import LocalizationError
from .harness import single_run
from .models import Experiment, ExperimentResult
from .serializers import CostQuerySerializer, ExperimentResultSerializer, ExperimentSerializer
from .simnet import comm_bits_closed_form, flops_closed_form

logger = logging.getLogger(__name__)


class ExperimentViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = Experiment.objects.prefetch_related('results')
    serializer_class = ExperimentSerializer


class ExperimentResultViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = ExperimentResult.objects.select_related('experiment')
    serializer_class = ExperimentResultSerializer

    def get_queryset(self):
        queryset = super().get_queryset()
        method = self.request.query_params.get('method')
        if method:
            queryset = queryset.filter(method=method.upper())
        experiment = self.request.query_params.get('experiment')
        if experiment:
            queryset = queryset.filter(experiment_id=experiment)
        return queryset


def _vector(array):
    return [float(v) for v in np.asarray(array)]


# =============================================================================
# Compute endpoints
# =============================================================================

@api_view(['POST'])
def localize(request):
    """
    One seeded localization run. The body takes the experiment config fields
    (template or explicit scenario, channel, protocol options, seed) and either
    `method` or `methods`. The draw matches trial 0 of an unswept experiment
    with the same seed.
    """
    try:
        data = dict(request.data)
        if 'method' in data:
            data['methods'] = [data.pop('method')]
        data.pop('trials', None)
        config = validate_config(ExperimentConfig, data)
        draw = single_run(config)
        scenario = draw.scenario

        fim = fim_total(scenario, scenario.emitter)
        runs = []
        for method, estimate, report in draw.runs:
            runs.append({
                'method': method.value,
                'estimate': _vector(estimate.position),
                'error_m': float(np.linalg.norm(estimate.position - scenario.emitter)),
                'fallback': estimate.fallback,
                'rounds': report.rounds,
                'messages': report.messages,
                'bits_total': report.bits_total,
                'bits_per_round': list(report.per_round),
                'flops_total': report.flops_total,
            })

        return Response({
            "success": True,
            "emitter": _vector(scenario.emitter),
            "n_uavs": scenario.n_uavs,
            "total_samples": scenario.total_samples,
            "crlb_root_m": fim.crlb_root if np.isfinite(fim.crlb_trace) else None,
            "runs": runs,
        })

    except LocalizationError as e:
        logger.info("Rejected localize request: %s", e)
        return Response({
            "success": False,
            "error": str(e),
            "kind": type(e).__name__,
        }, status=400)
    except Exception as e:
        logger.exception("Localize request failed")
        return Response({
            "success": False,
            "error": str(e)
        }, status=500)


@api_view(['GET'])
def cost(request):
    """Closed-form bits and FLOPs of one method for the given cluster size and quantization."""
    params = request.query_params.dict()
    if 'method' in params:
        params['method'] = params['method'].upper()
    query = CostQuerySerializer(data=params)
    if not query.is_valid():
        return Response({
            "success": False,
            "error": query.errors,
        }, status=400)

    q = query.validated_data
    try:
        bits = comm_bits_closed_form(q['method'], q['n_uavs'], q['tau'], q['p_bits'], q['q_bits'], k=q['k'])
        flops = None
        if 'total_samples' in q:
            flops = flops_closed_form(q['method'], q['tau'], q['total_samples'], k=q['k'], grid_nodes=q['grid_nodes'])
    except LocalizationError as e:
        return Response({
            "success": False,
            "error": str(e)
        }, status=400)

    return Response({
        "success": True,
        "method": q['method'],
        "n_uavs": q['n_uavs'],
        "k": q['k'],
        "bits_total": bits,
        "flops_total": flops,
    })
