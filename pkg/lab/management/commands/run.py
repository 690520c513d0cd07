import numpy as np
import pandas as pd

from lab.learners import Algorithm, OnlineConfig, run_learner
from lab.serializers import EnvelopeSerializer, RunSummarySerializer, load_document
from lab.streams import ONLINE_RUN, stream
from lab.utils import write_frame

from ._common import LabCommand


class Command(LabCommand):
    help = 'Run one online learner for T episodes and write its regret trace'

    def add_arguments(self, parser):
        self.add_mdp(parser)
        parser.add_argument('--envelope', help='Envelope JSON file; required by every learner but ucbvi')
        parser.add_argument('--algo', choices=[a.value for a in Algorithm], default=Algorithm.Q_SHAPING.value,
                            help='Learner to run')
        parser.add_argument('--T', type=int, required=True, dest='episodes', help='Number of episodes')
        self.add_seed(parser)
        self.add_delta(parser)
        self.add_out(parser, 'Output directory (default: LAB_OUTPUT_DIR/run-<algo>)')

    def run(self, **options):
        mdp = self.load_mdp(options['mdp'])
        envelope = None
        if options.get('envelope'):
            envelope = load_document(EnvelopeSerializer, options['envelope'])
        cfg = OnlineConfig(episodes=options['episodes'], delta=options['delta'],
                           algorithm=Algorithm(options['algo']))

        record = run_learner(mdp, envelope, cfg, stream(options['seed'], ONLINE_RUN), seed=options['seed'])

        out_dir = self.output_dir(options, f'run-{record.algorithm}')
        trace = pd.DataFrame({
            'episode': np.arange(1, record.episodes + 1),
            'inst_regret': record.instantaneous,
            'cum_regret': record.cumulative,
        })
        write_frame(trace, out_dir / 'trace.csv')
        self.stdout.write(
            f'{record.algorithm}: regret {record.final_regret:.4f} after {record.episodes} episodes '
            f'({record.wall_time:.1f}s)'
        )
        self.write_document(out_dir / 'summary.json', RunSummarySerializer(record).data)
