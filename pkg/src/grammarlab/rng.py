"""Deterministic splittable random streams.

Every random draw in the package comes from a named stream: a
Philox4x64-10 counter-based generator (numpy's implementation) whose
128-bit key is the first 16 bytes of SHA-256(little-endian 64-bit seed,
then each path label UTF-8 encoded and terminated by 0x1F). The same
(seed, path) therefore yields the same stream on any platform, and
independent paths give independent streams, which is what makes
datasets and training runs reproducible bit-exactly.
"""

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def _digest(seed: int, path) -> bytes:
    h = hashlib.sha256()
    h.update(struct.pack("<Q", seed & _MASK64))
    for part in path:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return h.digest()


def stream(seed: int, *path) -> np.random.Generator:
    """Named substream for (seed, *path); path parts may be str or int."""
    key = int.from_bytes(_digest(seed, path)[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def derived_seed(seed: int, *path) -> int:
    """A 63-bit integer seed derived from the same hash family (for torch)."""
    return int.from_bytes(_digest(seed, path)[16:24], "little") >> 1
