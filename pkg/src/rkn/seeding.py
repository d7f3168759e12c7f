"""Labeled derivation of independent random streams from one root seed."""

import zlib

import numpy as np


def _label_key(label):
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    if isinstance(label, float):
        return zlib.crc32(repr(label).encode())
    return zlib.crc32(str(label).encode())


def derive_seed(root, *labels):
    """Return a SeedSequence for ``root`` specialised by ``labels``.

    Labels may be strings or integers; the same (root, labels) always maps to
    the same stream, and distinct label tuples give independent streams.
    """
    return np.random.SeedSequence(int(root), spawn_key=tuple(_label_key(l) for l in labels))


def derive_rng(root, *labels):
    return np.random.default_rng(derive_seed(root, *labels))


def child_seed(seed, index):
    """Deterministic child ``index`` of ``seed`` (an int or a SeedSequence).

    Unlike ``SeedSequence.spawn`` this does not mutate the parent, so repeated
    calls return the same stream.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (int(index),))


def derive_int_seed(root, *labels) -> int:
    """Like ``derive_seed`` but returns a plain 63-bit integer seed."""
    return int(derive_seed(root, *labels).generate_state(1, np.uint64)[0] >> np.uint64(1))
