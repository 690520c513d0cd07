from lab.mdp import solve_optimal
from lab.serializers import SolutionSerializer

from ._common import LabCommand


class Command(LabCommand):
    help = 'Solve an MDP exactly by backward induction and write V*, Q* and the greedy policy'

    def add_arguments(self, parser):
        self.add_mdp(parser)
        self.add_out(parser, 'Target solution file (default: LAB_OUTPUT_DIR/solution.json)')

    def run(self, **options):
        mdp = self.load_mdp(options['mdp'])
        solution = solve_optimal(mdp)

        self.stdout.write(f'V*(rho) = {solution.initial_value(mdp):.6f}')
        for step, width in enumerate(solution.ranges):
            self.stdout.write(f'  step {step}: Range(V*) = {width:.6f}')
        self.write_document(self.output_file(options, 'solution.json'),
                            SolutionSerializer(solution, context={'mdp': mdp}).data)
