from lab.mdp import collect_dataset, uniform_policy
from lab.offline import coverage_check
from lab.serializers import DatasetSerializer
from lab.streams import OFFLINE_DATA, stream

from ._common import LabCommand


class Command(LabCommand):
    help = 'Collect K offline trajectories with the uniform behavior policy'

    def add_arguments(self, parser):
        self.add_mdp(parser)
        parser.add_argument('--K', type=int, required=True, help='Number of trajectories')
        self.add_seed(parser)
        self.add_delta(parser)
        self.add_out(parser, 'Target dataset file (default: LAB_OUTPUT_DIR/dataset.json)')

    def run(self, **options):
        mdp = self.load_mdp(options['mdp'])
        behavior = uniform_policy(mdp.shape)
        data = collect_dataset(mdp, behavior, options['K'], stream(options['seed'], OFFLINE_DATA))

        report = coverage_check(mdp, behavior, options['K'], options['delta'])
        if report.condition_met:
            self.stdout.write(self.style.SUCCESS(
                f'Coverage condition met (d_b_min={report.d_b_min:.4g}, required K={report.required_K})'))
        else:
            self.stdout.write(self.style.WARNING(
                f'K={options["K"]} misses the coverage condition, required K={report.required_K} '
                f'(d_b_min={report.d_b_min:.4g})'))
        self.write_document(self.output_file(options, 'dataset.json'), DatasetSerializer(data).data)
