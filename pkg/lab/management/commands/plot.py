from pathlib import Path

from lab.charts import PLOT_KINDS, emit_plots
from lab.experiments import AggregateResult
from lab.utils import ensure_output_dir, read_json

from ._common import LabCommand


class Command(LabCommand):
    help = 'Re-render the SVG charts of a finished experiment from its aggregate.json'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help='aggregate.json of an experiment, or the experiment directory')
        parser.add_argument('--kind', choices=PLOT_KINDS, help='Chart kind (default: the experiment\'s own)')
        self.add_out(parser, 'Directory for the SVG files (default: next to aggregate.json)')

    def run(self, **options):
        source = Path(options['config'])
        if source.is_dir():
            source = source / 'aggregate.json'
        aggregate = AggregateResult.from_dict(read_json(source))
        out_dir = ensure_output_dir(options['out']) if options.get('out') else source.parent

        written = emit_plots(aggregate, out_dir, options.get('kind'))
        if not written:
            self.stdout.write(self.style.WARNING('Nothing to plot: the aggregate is empty'))
            return
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
