import pandas as pd

from lab.experiments import run_experiment
from lab.registry import record_experiment
from lab.serializers import ExperimentConfigSerializer
from lab.utils import read_json

from ._common import LabCommand


class Command(LabCommand):
    help = 'Run a configured experiment over its grid and seeds, then aggregate and plot'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment configuration JSON file')
        parser.add_argument('--jobs', type=int, help='Worker processes (overrides the config)')
        parser.add_argument('--T', type=int, dest='episodes', help='Episodes per run (overrides the config)')
        parser.add_argument('--K', type=int, dest='samples',
                            help='Offline trajectories for the tags without a K grid (overrides the config)')
        parser.add_argument('--delta', type=float, help='Failure probability (overrides the config)')
        parser.add_argument('--seed', type=int, action='append', dest='seeds',
                            help='Seed to run; repeat to run several (overrides the config)')
        parser.add_argument('--no-record', action='store_true', help='Do not index the run in the database')
        self.add_out(parser, 'Output directory (overrides the config)')

    def run(self, **options):
        data = read_json(options['config'])
        if options.get('out'):
            data['output_dir'] = options['out']
        for key in ('jobs', 'episodes', 'samples', 'delta', 'seeds'):
            if options.get(key) is not None:
                data[key] = options[key]

        serializer = ExperimentConfigSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        cfg = serializer.save()

        self.stdout.write('=' * 70)
        learners = ", ".join(cfg.learners) or "envelopes only"
        self.stdout.write(self.style.WARNING(
            f"Running {cfg.tag} ({learners}) over {len(cfg.grid)} grid points and {len(cfg.seeds)} seeds"))
        result = run_experiment(cfg)

        for row in result.summary.to_dict('records'):
            param = row['param']
            label = "baseline" if pd.isna(param) else f'{result.labels["param"]}={param:g}'
            line = f'  {row["algorithm"]:<12} {label:<12} n={row["n_seeds"]}'
            if row['algorithm'] == 'envelope':
                line += f'  median D^max {row["median_d_max"]:.4f}'
            else:
                line += f'  mean regret {row["mean_regret"]:.3f}'
                if not pd.isna(row["mean_improvement"]):
                    line += f'  improvement {row["mean_improvement"]:+.3f}'
            self.stdout.write(line)

        if not options['no_record']:
            experiment = record_experiment(cfg, result)
            self.stdout.write(f'Recorded as experiment #{experiment.experiment_id}')
        self.stdout.write('=' * 70)
        self.stdout.write(self.style.SUCCESS(f'Experiment written to {cfg.output_dir}'))
