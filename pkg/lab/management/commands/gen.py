from lab.mdp import INTERMEDIATE_CHOICES, generate_mdp
from lab.serializers import MdpGenSpecSerializer, MdpSerializer
from lab.utils import read_json

from ._common import LabCommand


class Command(LabCommand):
    help = 'Generate a random layered MDP and write it as JSON'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON generation spec; flags below override its keys')
        parser.add_argument('--H', type=int, dest='horizon', help='Horizon H')
        parser.add_argument('--states', type=int, dest='states_per_layer', help='States per layer')
        parser.add_argument('--actions', type=int, help='Number of actions A')
        parser.add_argument('--range', type=float, nargs=2, dest='reward_range', metavar=('R1', 'R2'),
                            help='Terminal reward range [r1, r2]')
        parser.add_argument('--intermediate', choices=INTERMEDIATE_CHOICES, dest='intermediate_rewards',
                            help='Rewards before the last step')
        parser.add_argument('--concentration', type=float, help='Dirichlet concentration of transition rows')
        parser.add_argument('--seed', type=int, help='Generation seed')
        self.add_out(parser, 'Target MDP file (default: LAB_OUTPUT_DIR/mdp.json)')

    def run(self, **options):
        data = read_json(options['config']) if options.get('config') else {}
        for key in ('horizon', 'states_per_layer', 'actions', 'reward_range',
                    'intermediate_rewards', 'concentration', 'seed'):
            if options.get(key) is not None:
                data[key] = options[key]

        serializer = MdpGenSpecSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        spec = serializer.save()
        mdp = generate_mdp(spec)

        self.stdout.write(
            f'MDP: H={mdp.horizon}, {mdp.shape.num_states} states, {mdp.shape.num_pairs} pairs, '
            f'terminal rewards in [{spec.reward_range[0]}, {spec.reward_range[1]}]'
        )
        self.write_document(self.output_file(options, 'mdp.json'), MdpSerializer(mdp).data)
