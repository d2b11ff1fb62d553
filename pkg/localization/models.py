import math

from django.db import models
from django.utils import timezone


def _finite_or_none(value):
    return float(value) if value is not None and math.isfinite(value) else None


class Experiment(models.Model):
    STATUS_CHOICES = [
        ('RUNNING', 'Running'),
        ('COMPLETED', 'Completed'),
        ('FAILED', 'Failed'),
    ]

    name = models.CharField(max_length=200)
    command = models.CharField(max_length=50, default='run')
    created_at = models.DateTimeField(default=timezone.now)
    config = models.JSONField(default=dict, blank=True)
    trials = models.IntegerField(default=0)
    seed = models.BigIntegerField(default=0)
    output_path = models.CharField(max_length=500, blank=True, default='')
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='RUNNING')

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.name} ({self.command})"

    @classmethod
    def record(cls, table, config, command='run', output_path=''):
        """Store a finished RmseTable with the config that produced it."""
        experiment = cls.objects.create(
            name=config.name,
            command=command,
            config=config.model_dump(mode='json'),
            trials=config.trials,
            seed=config.seed,
            output_path=str(output_path or ''),
            status='COMPLETED',
        )
        ExperimentResult.objects.bulk_create([
            ExperimentResult(
                experiment=experiment,
                sweep=None if row.sweep is None else float(row.sweep),
                method=row.method,
                rmse_m=_finite_or_none(row.rmse_m),
                crlb_root_m=_finite_or_none(row.crlb_root_m),
                bits=_finite_or_none(row.bits),
                flops=_finite_or_none(row.flops),
                trials=row.trials,
                failures=row.failures,
            )
            for row in table
        ])
        return experiment


class ExperimentResult(models.Model):
    METHOD_CHOICES = [
        ('DMM', 'Distributed majorize-minimization'),
        ('DGN', 'Distributed Gauss-Newton'),
        ('DEF', 'Estimate fusion with Fisher weights'),
        ('DEM', 'Estimate fusion with scalar weights'),
        ('AVG', 'Plain average fusion'),
    ]

    experiment = models.ForeignKey(Experiment, on_delete=models.CASCADE, related_name='results')
    sweep = models.FloatField(null=True, blank=True)
    method = models.CharField(max_length=10, choices=METHOD_CHOICES)
    rmse_m = models.FloatField(null=True, blank=True)
    crlb_root_m = models.FloatField(null=True, blank=True)
    bits = models.FloatField(null=True, blank=True)
    flops = models.FloatField(null=True, blank=True)
    trials = models.IntegerField(default=0)
    failures = models.IntegerField(default=0)

    class Meta:
        ordering = ['experiment', 'sweep', 'id']

    def __str__(self):
        sweep = '' if self.sweep is None else f" @ {self.sweep:g}"
        return f"{self.method}{sweep} - {self.experiment.name}"
