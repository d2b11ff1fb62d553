from rest_framework import serializers

from .estimators import Method
from .models import Experiment, ExperimentResult


class ExperimentResultSerializer(serializers.ModelSerializer):
    experiment_name = serializers.CharField(source='experiment.name', read_only=True)

    class Meta:
        model = ExperimentResult
        fields = '__all__'


class ExperimentSerializer(serializers.ModelSerializer):
    results = ExperimentResultSerializer(many=True, read_only=True)

    class Meta:
        model = Experiment
        fields = '__all__'


class CostQuerySerializer(serializers.Serializer):
    """Query parameters of the closed-form cost endpoint."""
    method = serializers.ChoiceField(choices=[m.value for m in Method])
    n_uavs = serializers.IntegerField(min_value=2)
    tau = serializers.IntegerField(min_value=1, default=3)
    p_bits = serializers.IntegerField(min_value=1, default=32)
    q_bits = serializers.IntegerField(min_value=1, default=32)
    k = serializers.IntegerField(min_value=1, default=1)
    total_samples = serializers.IntegerField(min_value=1, required=False)
    grid_nodes = serializers.IntegerField(min_value=1, default=1)
