from lab.mdp import uniform_policy
from lab.offline import OfflineConfig, compute_envelopes, coverage_check, width_bound_check
from lab.serializers import DatasetSerializer, EnvelopeSerializer, load_document
from lab.streams import OFFLINE_SPLIT, stream

from ._common import LabCommand


class Command(LabCommand):
    help = 'Learn lower/upper value envelopes from an offline dataset'

    def add_arguments(self, parser):
        self.add_mdp(parser)
        parser.add_argument('--data', required=True, help='Dataset JSON file (see the sample command)')
        self.add_seed(parser)
        self.add_delta(parser)
        parser.add_argument('--check-width', action='store_true',
                            help='Compare the first-step width with its closed-form bound')
        self.add_out(parser, 'Target envelope file (default: LAB_OUTPUT_DIR/envelope.json)')

    def run(self, **options):
        mdp = self.load_mdp(options['mdp'])
        data = load_document(DatasetSerializer, options['data'])
        cfg = OfflineConfig(delta=options['delta'])
        envelope = compute_envelopes(data, mdp, cfg, stream(options['seed'], OFFLINE_SPLIT))

        self.stdout.write(f'Envelope from K={len(data)}: D^max={envelope.d_max:.6f} R^max={envelope.r_max:.6f}')
        if options['check_width']:
            coverage = coverage_check(mdp, uniform_policy(mdp.shape), len(data), cfg.delta)
            report = width_bound_check(envelope, len(data), coverage.d_b_min, cfg.delta)
            style = self.style.SUCCESS if report.holds else self.style.WARNING
            self.stdout.write(style(f'Width bound: {report.lhs:.6f} <= {report.rhs:.6f} is {report.holds}'))
        self.write_document(self.output_file(options, 'envelope.json'), EnvelopeSerializer(envelope).data)
