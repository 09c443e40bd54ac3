"""Seed plumbing.

Every stochastic routine takes a master seed and derives child streams
through ``SeedSequence`` spawn keys.  Streams are keyed by purpose and
index, so enlarging a dataset (more trajectories, more replications)
never reshuffles the streams that already existed.
"""

import numpy as np

# Spawn-key domains.  Values are arbitrary but frozen: changing them
# changes every simulated path.
SOURCE_TRAJ = 1
TARGET_TRAJ = 2
REPLICATION = 3
SEARCH = 4
INIT = 5


def substream(seed, domain, index=0):
    """Generator for stream ``index`` of the given domain under ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(domain, index))
    return np.random.Generator(np.random.Philox(ss))


def replication_seed(seed, rep):
    """Stable child seed for replication ``rep`` of an experiment."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(REPLICATION, rep))
    return int(ss.generate_state(1, dtype=np.uint64)[0] & 0x7FFFFFFF)
