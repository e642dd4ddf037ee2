"""Deterministic derivation of labeled RNG sub-streams from one root seed.

Every stochastic consumer in the package derives its own stream from the run
seed plus a label (and usually a match or trial index), so results do not
depend on scheduling or call order.
"""

from __future__ import annotations

import hashlib
import random

_SEED_BITS = 63


def derive_seed(*parts: object) -> int:
    """Hash ``(root_seed, label, ...)`` into a 63-bit child seed.

    The derivation is stable across processes and platforms; parts are mixed
    via their repr, so stick to ints, strings, and tuples of those.
    """
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") & ((1 << _SEED_BITS) - 1)


def spawn(*parts: object) -> random.Random:
    """A fresh ``random.Random`` seeded from :func:`derive_seed`."""
    return random.Random(derive_seed(*parts))
