import pandas as pd

from lab.diagnostics import envelope_report, pseudo_sub_sets
from lab.mdp import solve_optimal
from lab.serializers import EnvelopeSerializer, load_document
from lab.utils import document, write_frame

from ._common import LabCommand


class Command(LabCommand):
    help = 'Report envelope scalars and the PairEff / PS / PPS / BPS sets of an MDP'

    def add_arguments(self, parser):
        self.add_mdp(parser)
        parser.add_argument('--envelope', required=True, help='Envelope JSON file')
        parser.add_argument('--gap', type=float, default=0.1, help='Suboptimality threshold Delta > 0')
        parser.add_argument('--sets', action='store_true', help='Also write one CSV listing per set')
        self.add_out(parser, 'Output directory (default: LAB_OUTPUT_DIR/diag)')

    def run(self, **options):
        mdp = self.load_mdp(options['mdp'])
        envelope = load_document(EnvelopeSerializer, options['envelope'])
        solution = solve_optimal(mdp)

        report = envelope_report(mdp, solution, envelope)
        sets = pseudo_sub_sets(mdp, solution, envelope, options['gap'])
        out_dir = self.output_dir(options, 'diag')

        if report.sandwich_holds:
            self.stdout.write(self.style.SUCCESS('Envelope sandwich holds'))
        else:
            self.stdout.write(self.style.WARNING(f'Envelope sandwich fails at {len(report.violations)} entries'))
        for name, size in sets.cardinalities.items():
            self.stdout.write(f'  |{name}| = {size}')

        if options['sets']:
            listings = {
                'pair_eff': (['state', 'action'], sorted(sets.pair_eff)),
                'ps': (['state', 'action', 'step'], sorted(sets.ps)),
                'pps': (['state'], [(s,) for s in sorted(sets.pps)]),
                'bps': (['state', 'action', 'step'], sorted(sets.bps)),
            }
            for name, (columns, rows) in listings.items():
                write_frame(pd.DataFrame(rows, columns=columns), out_dir / f'{name}.csv')

        self.write_document(out_dir / 'diagnostics.json', document('diagnostics', {
            **report.as_dict(),
            'gap': sets.gap,
            'cardinalities': sets.cardinalities,
        }))
