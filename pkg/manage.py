#!/usr/bin/env python
"""EnvelopeLab command-line utility: `gen`, `solve`, `sample`, `offline`, `run`, `diag`,
`experiment` and `plot` live next to Django's own administrative commands."""
import os
import sys


def main():
    """Run administrative and lab tasks."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'EnvelopeLab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
