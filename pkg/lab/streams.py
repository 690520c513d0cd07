"""
Named random streams derived from one master seed.

Each stream is a numpy Generator seeded from SeedSequence(master, spawn_key=(name, *keys)),
so the MDP generator, the offline data, and each online replicate draw from independent
streams: changing T or the K grid never perturbs the generated MDP.
"""
import zlib

import numpy as np

MDP_GEN = 'mdp-gen'
OFFLINE_DATA = 'offline-data'
OFFLINE_SPLIT = 'offline-split'
ONLINE_RUN = 'online-run'


def stream_key(name):
    """Stable 32-bit integer for a stream name (hash() is salted per process)."""
    return zlib.crc32(name.encode('utf-8'))


def stream(seed, name, *keys):
    """Return the Generator for stream `name` under master `seed`, further split by `keys`."""
    spawn_key = (stream_key(name),) + tuple(int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key))
