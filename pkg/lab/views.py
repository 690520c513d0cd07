from rest_framework import viewsets

from .models import ExperimentRun, LearnerRun
from .serializers import ExperimentRunDetailSerializer, ExperimentRunSerializer, LearnerRunSerializer


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    API endpoint for recorded experiments
    GET /api/experiments/ - List experiments (?tag=k-sweep)
    GET /api/experiments/{id}/ - Experiment with its learner runs
    """
    queryset = ExperimentRun.objects.all()

    def get_serializer_class(self):
        if self.action == 'retrieve':
            return ExperimentRunDetailSerializer
        return ExperimentRunSerializer

    def get_queryset(self):
        queryset = super().get_queryset()

        tag = self.request.query_params.get('tag', None)
        if tag:
            queryset = queryset.filter(tag=tag)

        return queryset.order_by('-created_at')


class LearnerRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    API endpoint for single learner runs
    GET /api/learner-runs/?experiment=1&algorithm=q-shaping&seed=0
    """
    queryset = LearnerRun.objects.all().select_related('experiment')
    serializer_class = LearnerRunSerializer

    def get_queryset(self):
        queryset = super().get_queryset()
        params = self.request.query_params

        experiment = params.get('experiment', None)
        if experiment:
            queryset = queryset.filter(experiment_id=experiment)

        algorithm = params.get('algorithm', None)
        if algorithm:
            queryset = queryset.filter(algorithm=algorithm)

        tag = params.get('tag', None)
        if tag:
            queryset = queryset.filter(experiment__tag=tag)

        seed = params.get('seed', None)
        if seed is not None and seed.lstrip('-').isdigit():
            queryset = queryset.filter(seed=int(seed))

        return queryset.order_by('experiment_id', 'algorithm', 'param', 'seed')
