"""
File Utility Functions for the lab
Reads and writes the JSON documents and CSV tables every command produces
"""
import json
import logging
from pathlib import Path

import numpy as np

from .exceptions import LabError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.12g'


def ensure_output_dir(path):
    """
    Create an output directory (and its parents) if it does not exist yet

    Args:
        path: directory path, str or Path

    Returns:
        Path: the directory

    Raises:
        LabError: if the path exists and is not a writable directory
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise LabError(f'Cannot create output directory {path}: {e}') from e
    if not path.is_dir():
        raise LabError(f'{path} is not a directory.')
    return path


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def write_json(path, document):
    """
    Write a JSON document with stable key order and a trailing newline

    Args:
        path: target file
        document: dict of plain values, numpy arrays and scalars allowed

    Returns:
        Path: the written file
    """
    path = Path(path)
    try:
        with path.open('w', encoding='utf-8') as handle:
            json.dump(document, handle, indent=2, default=_to_builtin)
            handle.write('\n')
    except OSError as e:
        raise LabError(f'Cannot write {path}: {e}') from e
    logger.debug('Wrote %s', path)
    return path


def read_json(path):
    """
    Load a JSON document

    Args:
        path: source file

    Returns:
        dict: the decoded document

    Raises:
        LabError: unreadable file or malformed JSON
    """
    path = Path(path)
    try:
        with path.open(encoding='utf-8') as handle:
            return json.load(handle)
    except OSError as e:
        raise LabError(f'Cannot read {path}: {e}') from e
    except json.JSONDecodeError as e:
        raise LabError(f'{path} is not valid JSON: {e}') from e


def write_frame(frame, path):
    """
    Write a pandas DataFrame as CSV, byte-stable across runs

    Args:
        frame: pandas.DataFrame
        path: target file

    Returns:
        Path: the written file
    """
    path = Path(path)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except OSError as e:
        raise LabError(f'Cannot write {path}: {e}') from e
    logger.debug('Wrote %d rows to %s', len(frame), path)
    return path


def document(kind, payload):
    """Wrap a payload with the schema header every JSON file carries."""
    return {'schema_version': SCHEMA_VERSION, 'kind': kind, **payload}
