"""Shared plumbing of the lab management commands."""
import json
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError as DjangoValidationError
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError as ApiValidationError

from lab.exceptions import LabError
from lab.serializers import MdpSerializer, load_document
from lab.utils import ensure_output_dir, write_json


def format_errors(detail):
    if isinstance(detail, (dict, list)):
        return json.dumps(detail, indent=2, default=str)
    return str(detail)


class LabCommand(BaseCommand):
    """
    Base command: subclasses implement run(**options).

    Validation and I/O failures become CommandError, so manage.py exits nonzero with a
    readable message instead of a traceback.
    """

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except ApiValidationError as e:
            raise CommandError(f'Invalid input:\n{format_errors(e.detail)}')
        except DjangoValidationError as e:
            raise CommandError('Invalid input: ' + '; '.join(e.messages))
        except (LabError, ValueError) as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f'I/O error: {e}')

    def run(self, **options):
        raise NotImplementedError

    # ---- argument helpers ----

    def add_seed(self, parser):
        parser.add_argument('--seed', type=int, default=settings.LAB_DEFAULT_SEED,
                            help='Master seed of the named random streams')

    def add_delta(self, parser):
        parser.add_argument('--delta', type=float, default=settings.LAB_DEFAULT_DELTA,
                            help='Failure probability delta in (0, 1)')

    def add_mdp(self, parser, required=True):
        parser.add_argument('--mdp', required=required, help='MDP JSON file (see the gen command)')

    def add_out(self, parser, help_text):
        parser.add_argument('--out', help=help_text)

    # ---- I/O helpers ----

    def load_mdp(self, path):
        return load_document(MdpSerializer, path)

    def output_file(self, options, default_name):
        if options.get('out'):
            path = Path(options['out'])
            ensure_output_dir(path.parent)
            return path
        return ensure_output_dir(settings.LAB_OUTPUT_DIR) / default_name

    def output_dir(self, options, default_name):
        if options.get('out'):
            return ensure_output_dir(options['out'])
        return ensure_output_dir(Path(settings.LAB_OUTPUT_DIR) / default_name)

    def write_document(self, path, data):
        write_json(path, data)
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
