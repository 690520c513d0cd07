import copy
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from lab.experiments import DEFAULT_ALGORITHMS, default_grid
from lab.jobs import K_SWEEP, SINGLE_RUN
from lab.mdp import collect_dataset, solve_optimal, uniform_policy
from lab.offline import OfflineConfig, compute_envelopes
from lab.serializers import (DatasetSerializer, EnvelopeSerializer, ExperimentConfigSerializer,
                             MdpGenSpecSerializer, MdpSerializer, SolutionSerializer)
from lab.streams import OFFLINE_DATA, OFFLINE_SPLIT, stream
from lab.utils import write_json

from .fixtures import small_mdp

GEN_SPEC = {'horizon': 3, 'states_per_layer': 3, 'actions': 2}


class MdpSerializerTests(SimpleTestCase):

    def setUp(self):
        self.mdp = small_mdp(seed=1)
        self.data = MdpSerializer(self.mdp).data

    def test_document_header_and_layers(self):
        self.assertEqual(self.data['kind'], 'mdp')
        self.assertEqual(self.data['schema_version'], 1)
        self.assertEqual(self.data['layers'], [[0, 1, 2], [3, 4, 5], [6, 7, 8]])
        self.assertEqual(self.data['terminal'], 9)

    def test_reload(self):
        serializer = MdpSerializer(data=self.data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        mdp = serializer.save()
        for p, q in zip(self.mdp.transitions, mdp.transitions):
            np.testing.assert_array_equal(p, q)
        np.testing.assert_array_equal(self.mdp.initial_distribution, mdp.initial_distribution)

    def test_rows_that_do_not_sum_to_one(self):
        data = copy.deepcopy(dict(self.data))
        data['transitions'][0][0][0] = [0.5, 0.2, 0.2]
        serializer = MdpSerializer(data=data)
        self.assertFalse(serializer.is_valid())
        self.assertIn('non_field_errors', serializer.errors)

    def test_wrong_kind_and_layers(self):
        data = dict(self.data, kind='dataset')
        serializer = MdpSerializer(data=data)
        self.assertFalse(serializer.is_valid())
        self.assertIn('kind', serializer.errors)

        data = dict(self.data, layers=[[0, 1, 2], [4, 5, 6], [7, 8, 9]])
        serializer = MdpSerializer(data=data)
        self.assertFalse(serializer.is_valid())
        self.assertIn('layers', serializer.errors)

    def test_generation_spec(self):
        serializer = MdpGenSpecSerializer(data=GEN_SPEC)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        spec = serializer.save()
        self.assertEqual(spec.reward_range, (0.0, 1.0))
        serializer = MdpGenSpecSerializer(data=dict(GEN_SPEC, reward_range=[0.6, 0.4]))
        self.assertFalse(serializer.is_valid())


class ResultDocumentTests(SimpleTestCase):

    def setUp(self):
        self.mdp = small_mdp(seed=2)
        self.data = collect_dataset(self.mdp, uniform_policy(self.mdp.shape), 60, stream(2, OFFLINE_DATA))

    def test_dataset_reload(self):
        document = DatasetSerializer(self.data).data
        self.assertEqual(document['size'], 60)
        serializer = DatasetSerializer(data=document)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        data = serializer.save()
        data.validate_against(self.mdp)
        np.testing.assert_array_equal(data.states, self.data.states)

    def test_dataset_length_errors(self):
        document = copy.deepcopy(dict(DatasetSerializer(self.data).data))
        document['trajectories'][0]['actions'] = document['trajectories'][0]['actions'][:-1]
        self.assertFalse(DatasetSerializer(data=document).is_valid())

        document = copy.deepcopy(dict(DatasetSerializer(self.data).data))
        document['horizon'] = 4
        self.assertFalse(DatasetSerializer(data=document).is_valid())

    def test_solution_carries_the_initial_value(self):
        solution = solve_optimal(self.mdp)
        document = SolutionSerializer(solution, context={'mdp': self.mdp}).data
        self.assertAlmostEqual(document['initial_value'], solution.initial_value(self.mdp))
        self.assertEqual(len(document['values']), self.mdp.horizon + 1)

    def test_envelope_reload(self):
        envelope = compute_envelopes(self.data, self.mdp, OfflineConfig(), stream(2, OFFLINE_SPLIT))
        document = EnvelopeSerializer(envelope).data
        self.assertEqual(document['samples'], 60)
        serializer = EnvelopeSerializer(data=document)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        reloaded = serializer.save()
        self.assertAlmostEqual(reloaded.d_max, envelope.d_max)
        self.assertEqual(reloaded.shape, envelope.shape)

    def test_envelope_with_the_wrong_shape(self):
        envelope = compute_envelopes(self.data, self.mdp, OfflineConfig(), stream(2, OFFLINE_SPLIT))
        document = dict(EnvelopeSerializer(envelope).data, layer_sizes=[3, 3, 2])
        serializer = EnvelopeSerializer(data=document)
        self.assertFalse(serializer.is_valid())


class ExperimentConfigSerializerTests(SimpleTestCase):

    @override_settings(LAB_OUTPUT_DIR=Path('/tmp/lab-output'), LAB_JOBS=3)
    def test_defaults(self):
        serializer = ExperimentConfigSerializer(
            data={'tag': K_SWEEP, 'mdp': GEN_SPEC, 'episodes': 50, 'seeds': [0, 1]})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        cfg = serializer.save()
        self.assertEqual(cfg.grid, default_grid(K_SWEEP))
        self.assertEqual(cfg.algorithms, DEFAULT_ALGORITHMS[K_SWEEP])
        self.assertEqual(cfg.output_dir, '/tmp/lab-output/k-sweep')
        self.assertEqual(cfg.jobs, 3)
        self.assertEqual(cfg.mdp.horizon, 3)

    def test_exactly_one_mdp_source(self):
        base = {'tag': SINGLE_RUN, 'episodes': 10, 'seeds': [0]}
        self.assertFalse(ExperimentConfigSerializer(data=base).is_valid())
        both = dict(base, mdp=GEN_SPEC, mdp_file='mdp.json')
        self.assertFalse(ExperimentConfigSerializer(data=both).is_valid())

    def test_mdp_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'mdp.json'
            write_json(path, MdpSerializer(small_mdp(seed=3)).data)
            serializer = ExperimentConfigSerializer(
                data={'tag': SINGLE_RUN, 'mdp_file': str(path), 'episodes': 10, 'seeds': [0]})
            self.assertTrue(serializer.is_valid(), serializer.errors)
            self.assertTrue(serializer.save().fixed_mdp)

    def test_invalid_values(self):
        base = {'tag': 'sliding-range', 'mdp': GEN_SPEC, 'episodes': 10, 'seeds': [0]}
        self.assertFalse(ExperimentConfigSerializer(data=dict(base, seeds=[])).is_valid())
        self.assertFalse(ExperimentConfigSerializer(data=dict(base, grid=[0.95])).is_valid())
        self.assertFalse(ExperimentConfigSerializer(data=dict(base, tag='grid-search')).is_valid())
        self.assertFalse(ExperimentConfigSerializer(data=dict(base, algorithms=['sarsa'])).is_valid())
