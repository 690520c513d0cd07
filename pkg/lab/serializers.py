"""
DRF serializers for every JSON document the lab reads or writes, plus the registry API.

Each document serializer validates raw JSON into a domain object: `serializer.is_valid()`
runs the checks, `serializer.save()` returns the MDP, dataset, envelope or config.
Serializing goes the other way through `Serializer(obj).data`.
"""
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from .exceptions import LabError
from .experiments import DEFAULT_ALGORITHMS, ExperimentConfig, default_grid
from .jobs import EXPERIMENT_TAGS
from .learners import Algorithm
from .mdp import (INTERMEDIATE_CHOICES, Dataset, LayeredMdp, MdpGenSpec, MdpShape,
                  OptimalSolution)
from .models import ExperimentRun, LearnerRun
from .offline import ValueEnvelope
from .utils import SCHEMA_VERSION, read_json


@contextmanager
def domain_errors():
    """Re-raise domain validation failures as serializer errors."""
    try:
        yield
    except DjangoValidationError as e:
        raise serializers.ValidationError(e.messages)
    except LabError as e:
        raise serializers.ValidationError(str(e))


class NumberArrayField(serializers.Field):
    """Nested JSON lists <-> numpy array."""

    default_error_messages = {
        'invalid': 'Expected a rectangular array of numbers.',
        'ndim': 'Expected an array with {ndim} dimensions.',
    }

    def __init__(self, dtype=float, ndim=None, **kwargs):
        self.dtype = dtype
        self.ndim = ndim
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        try:
            array = np.asarray(data, dtype=self.dtype)
        except (TypeError, ValueError):
            self.fail('invalid')
        if self.ndim is not None and array.ndim != self.ndim:
            self.fail('ndim', ndim=self.ndim)
        return array

    def to_representation(self, value):
        return np.asarray(value).tolist()


class DocumentSerializer(serializers.Serializer):
    """Base for files carrying the schema_version / kind header."""
    kind_name = None

    schema_version = serializers.IntegerField(required=False, default=SCHEMA_VERSION)
    kind = serializers.CharField(required=False)

    def validate_schema_version(self, value):
        if value != SCHEMA_VERSION:
            raise serializers.ValidationError(f"Unsupported schema version {value}.")
        return value

    def validate_kind(self, value):
        if value != self.kind_name:
            raise serializers.ValidationError(f"Expected a '{self.kind_name}' document, got '{value}'.")
        return value

    def header(self):
        return {'schema_version': SCHEMA_VERSION, 'kind': self.kind_name}

    def create(self, validated_data):
        return validated_data['instance']


# ==================== MDP ====================

class MdpGenSpecSerializer(serializers.Serializer):
    horizon = serializers.IntegerField(min_value=1)
    states_per_layer = serializers.IntegerField(min_value=1)
    actions = serializers.IntegerField(min_value=1)
    reward_range = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                         required=False, default=[0.0, 1.0])
    intermediate_rewards = serializers.ChoiceField(choices=INTERMEDIATE_CHOICES, required=False,
                                                   default=INTERMEDIATE_CHOICES[0])
    concentration = serializers.FloatField(required=False, default=1.0)
    seed = serializers.IntegerField(required=False, default=0)

    def validate(self, attrs):
        spec = MdpGenSpec(
            horizon=attrs['horizon'],
            states_per_layer=attrs['states_per_layer'],
            actions=attrs['actions'],
            reward_range=tuple(attrs['reward_range']),
            intermediate_rewards=attrs['intermediate_rewards'],
            concentration=attrs['concentration'],
            seed=attrs['seed'],
        )
        with domain_errors():
            spec.validate()
        attrs['instance'] = spec
        return attrs

    def create(self, validated_data):
        return validated_data['instance']


class MdpSerializer(DocumentSerializer):
    """
    Layered MDP file: layers as lists of global state ids, transitions[step][s][a] the
    probability row over the next layer (a single terminal entry at the last step),
    rewards[step][s][a].
    """
    kind_name = 'mdp'

    horizon = serializers.IntegerField(min_value=1)
    actions = serializers.IntegerField(min_value=1)
    layers = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    terminal = serializers.IntegerField(required=False)
    initial_distribution = NumberArrayField(ndim=1)
    transitions = serializers.ListField(child=NumberArrayField(ndim=3))
    rewards = serializers.ListField(child=NumberArrayField(ndim=2))

    def validate_layers(self, layers):
        expected = 0
        for step, layer in enumerate(layers):
            if layer != list(range(expected, expected + len(layer))):
                raise serializers.ValidationError(
                    f"Layer {step} must hold the consecutive ids starting at {expected}.")
            expected += len(layer)
        return layers

    def validate(self, attrs):
        if len(attrs['layers']) != attrs['horizon']:
            raise serializers.ValidationError("There must be one layer per step.")
        with domain_errors():
            mdp = LayeredMdp(tuple(attrs['transitions']), tuple(attrs['rewards']),
                             attrs['initial_distribution'])
        if mdp.shape.layer_sizes != tuple(len(layer) for layer in attrs['layers']):
            raise serializers.ValidationError("Layer lists disagree with the table shapes.")
        if mdp.actions != attrs['actions']:
            raise serializers.ValidationError("The action count disagrees with the reward tables.")
        if attrs.get('terminal', mdp.shape.terminal) != mdp.shape.terminal:
            raise serializers.ValidationError(f"The terminal symbol must be {mdp.shape.terminal}.")
        attrs['instance'] = mdp
        return attrs

    def to_representation(self, mdp):
        shape = mdp.shape
        return {
            **self.header(),
            'horizon': shape.horizon,
            'actions': shape.actions,
            'layers': [shape.layer(step) for step in range(shape.horizon)],
            'terminal': shape.terminal,
            'initial_distribution': mdp.initial_distribution.tolist(),
            'transitions': [p.tolist() for p in mdp.transitions],
            'rewards': [r.tolist() for r in mdp.rewards],
        }


class TrajectorySerializer(serializers.Serializer):
    states = serializers.ListField(child=serializers.IntegerField(min_value=0))
    actions = serializers.ListField(child=serializers.IntegerField(min_value=0))
    rewards = serializers.ListField(child=serializers.FloatField())

    def validate(self, attrs):
        if not len(attrs['states']) == len(attrs['actions']) == len(attrs['rewards']):
            raise serializers.ValidationError("states, actions and rewards must have equal length.")
        return attrs


class DatasetSerializer(DocumentSerializer):
    kind_name = 'dataset'

    horizon = serializers.IntegerField(min_value=1)
    terminal = serializers.IntegerField(min_value=1)
    behavior_policy = serializers.CharField(required=False, default='uniform')
    trajectories = TrajectorySerializer(many=True, allow_empty=False)

    def validate(self, attrs):
        trajectories = attrs['trajectories']
        if any(len(t['states']) != attrs['horizon'] for t in trajectories):
            raise serializers.ValidationError("Every trajectory must have length H.")
        attrs['instance'] = Dataset(
            np.array([t['states'] for t in trajectories]),
            np.array([t['actions'] for t in trajectories]),
            np.array([t['rewards'] for t in trajectories]),
            attrs['terminal'],
            attrs['behavior_policy'],
        )
        return attrs

    def to_representation(self, data):
        return {
            **self.header(),
            'horizon': data.horizon,
            'terminal': data.terminal,
            'behavior_policy': data.behavior_policy,
            'size': len(data),
            'trajectories': [{'states': s, 'actions': a, 'rewards': r} for s, a, r in
                             zip(data.states.tolist(), data.actions.tolist(), data.rewards.tolist())],
        }


class SolutionSerializer(DocumentSerializer):
    """V*, Q*, the greedy policy and Range(V*) per step; V* carries the terminal zero last."""
    kind_name = 'solution'

    values = serializers.ListField(child=NumberArrayField(ndim=1))
    q_values = serializers.ListField(child=NumberArrayField(ndim=2))
    policy = serializers.ListField(child=NumberArrayField(dtype=np.int64, ndim=1))
    ranges = NumberArrayField(ndim=1)

    def validate(self, attrs):
        if len(attrs['values']) != len(attrs['q_values']) + 1:
            raise serializers.ValidationError("values must have one more entry than q_values.")
        attrs['instance'] = OptimalSolution(tuple(attrs['values']), tuple(attrs['q_values']),
                                            tuple(attrs['policy']), attrs['ranges'])
        return attrs

    def to_representation(self, solution):
        data = {
            **self.header(),
            'values': [v.tolist() for v in solution.values],
            'q_values': [q.tolist() for q in solution.q_values],
            'policy': [p.tolist() for p in solution.policy],
            'ranges': solution.ranges.tolist(),
        }
        mdp = self.context.get('mdp')
        if mdp is not None:
            data['initial_value'] = solution.initial_value(mdp)
        return data


class EnvelopeSerializer(DocumentSerializer):
    """lowQ/highQ are the source; V-tables, widths, midpoints and ranges are derived on save."""
    kind_name = 'envelope'

    horizon = serializers.IntegerField(min_value=1)
    layer_sizes = serializers.ListField(child=serializers.IntegerField(min_value=1))
    actions = serializers.IntegerField(min_value=1)
    delta = serializers.FloatField(required=False, allow_null=True, default=None)
    samples = serializers.IntegerField(required=False, default=0)
    low_q = serializers.ListField(child=NumberArrayField(ndim=2))
    high_q = serializers.ListField(child=NumberArrayField(ndim=2))

    def validate(self, attrs):
        shape = MdpShape(attrs['horizon'], tuple(attrs['layer_sizes']), attrs['actions'])
        with domain_errors():
            attrs['instance'] = ValueEnvelope(tuple(attrs['low_q']), tuple(attrs['high_q']), shape,
                                              attrs['delta'], attrs['samples'])
        return attrs

    def to_representation(self, envelope):
        return {
            **self.header(),
            **envelope.shape.as_dict(),
            'delta': envelope.delta,
            'samples': envelope.samples,
            'low_q': [q.tolist() for q in envelope.low_q],
            'high_q': [q.tolist() for q in envelope.high_q],
            'low_v': [v.tolist() for v in envelope.low_v],
            'high_v': [v.tolist() for v in envelope.high_v],
            'widths': [w.tolist() for w in envelope.widths],
            'midpoints': [m.tolist() for m in envelope.midpoints],
            'layer_ranges': envelope.layer_ranges.tolist(),
            'd_max': envelope.d_max,
            'r_max': envelope.r_max,
        }


class RunSummarySerializer(serializers.Serializer):
    """JSON summary of one RunRecord."""

    def to_representation(self, record):
        return {
            'schema_version': SCHEMA_VERSION,
            'kind': 'run-summary',
            'algorithm': record.algorithm,
            'seed': record.seed,
            'config': record.config,
            'episodes': record.episodes,
            'final_regret': record.final_regret,
            'r_max': record.r_max,
            'd_max': record.d_max,
            'runtime': record.wall_time,
        }


# ==================== EXPERIMENT CONFIG ====================

class ExperimentConfigSerializer(serializers.Serializer):
    """
    Experiment configuration file. Omitted optional keys fall back to the LAB_* settings
    (delta, jobs, output directory, chart points, traces) or to per-tag defaults
    (algorithms, grid).
    """
    tag = serializers.ChoiceField(choices=EXPERIMENT_TAGS)
    mdp = MdpGenSpecSerializer(required=False)
    mdp_file = serializers.CharField(required=False, allow_null=True, default=None)
    algorithms = serializers.ListField(child=serializers.ChoiceField(choices=[a.value for a in Algorithm]),
                                       required=False)
    grid = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    window = serializers.FloatField(required=False, default=0.1)
    episodes = serializers.IntegerField(min_value=0)
    delta = serializers.FloatField(required=False)
    seeds = serializers.ListField(child=serializers.IntegerField(), allow_empty=False)
    output_dir = serializers.CharField(required=False)
    samples = serializers.IntegerField(required=False, min_value=1, default=6000)
    jobs = serializers.IntegerField(required=False, min_value=1)
    width_step = serializers.IntegerField(required=False, min_value=0, default=1)
    write_traces = serializers.BooleanField(required=False)
    chart_points = serializers.IntegerField(required=False, min_value=2)

    def validate(self, attrs):
        if ('mdp' in attrs) == bool(attrs.get('mdp_file')):
            raise serializers.ValidationError("Give exactly one of 'mdp' (a generation spec) or 'mdp_file'.")
        if attrs.get('mdp_file'):
            with domain_errors():
                mdp = load_document(MdpSerializer, attrs['mdp_file'])
        else:
            mdp = attrs['mdp']['instance']
        tag = attrs['tag']
        window = attrs['window']
        cfg = ExperimentConfig(
            tag=tag,
            mdp=mdp,
            mdp_file=attrs.get('mdp_file'),
            algorithms=tuple(attrs.get('algorithms', DEFAULT_ALGORITHMS[tag])),
            grid=tuple(attrs.get('grid', default_grid(tag, window))),
            episodes=attrs['episodes'],
            seeds=tuple(attrs['seeds']),
            output_dir=attrs.get('output_dir', str(Path(settings.LAB_OUTPUT_DIR) / tag)),
            delta=attrs.get('delta', settings.LAB_DEFAULT_DELTA),
            window=window,
            samples=attrs['samples'],
            jobs=attrs.get('jobs', settings.LAB_JOBS),
            width_step=attrs['width_step'],
            write_traces=attrs.get('write_traces', settings.LAB_WRITE_TRACES),
            chart_points=attrs.get('chart_points', settings.LAB_CHART_POINTS),
        )
        with domain_errors():
            cfg.validate()
        attrs['instance'] = cfg
        return attrs

    def create(self, validated_data):
        return validated_data['instance']


def load_document(serializer_class, path, **context):
    """
    Read a JSON file and validate it into a domain object

    Args:
        serializer_class: one of the document serializers above
        path: JSON file
        **context: serializer context

    Returns:
        the domain object built by serializer.save()

    Raises:
        LabError: unreadable file
        rest_framework.exceptions.ValidationError: invalid document
    """
    serializer = serializer_class(data=read_json(path), context=context)
    serializer.is_valid(raise_exception=True)
    return serializer.save()


# ==================== REGISTRY API ====================

class LearnerRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = LearnerRun
        fields = ['run_id', 'experiment', 'algorithm', 'param', 'seed', 'final_regret', 'r_max', 'd_max',
                  'relative_improvement', 'sandwich_holds', 'runtime_seconds']
        read_only_fields = fields


class ExperimentRunSerializer(serializers.ModelSerializer):
    run_count = serializers.SerializerMethodField()

    class Meta:
        model = ExperimentRun
        fields = ['experiment_id', 'tag', 'config', 'output_dir', 'job_count', 'runtime_seconds',
                  'created_at', 'run_count']
        read_only_fields = fields

    def get_run_count(self, obj):
        return obj.learner_runs.count()


class ExperimentRunDetailSerializer(ExperimentRunSerializer):
    learner_runs = LearnerRunSerializer(many=True, read_only=True)

    class Meta(ExperimentRunSerializer.Meta):
        fields = ExperimentRunSerializer.Meta.fields + ['learner_runs']
        read_only_fields = fields
