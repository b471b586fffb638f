"""Counter-based SplitMix64 streams.

Every random quantity in the package comes from SplitMix64.  A stream is identified by a 64-bit ``seed``; its ``k``-th
output (``k = 0, 1, ...``) is::

    mix64(seed + (k + 1) * GOLDEN_GAMMA)        (mod 2**64)

with the standard finaliser::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

which is exactly the output sequence of the sequential SplitMix64 generator
started from state ``seed``.  A uniform double in ``[0, 1)`` is formed from the
top 53 bits: ``(out >> 11) * 2**-53``.

Because the ``k``-th draw is a closed-form function of ``(seed, k)``, whole
matrices of draws can be produced with vectorised numpy arithmetic and any
implementation can reproduce the streams bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int (a bijection of 64-bit words)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64 without warnings
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def stream_output(seed: int, k: int) -> int:
    """The ``k``-th raw 64-bit output of the stream ``seed``."""
    return mix64((seed + (k + 1) * GOLDEN_GAMMA) & MASK64)


def stream_outputs(seeds, count: int) -> np.ndarray:
    """Raw outputs ``0..count-1`` for each seed; shape ``(len(seeds), count)``."""
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
    k = np.arange(1, count + 1, dtype=np.uint64).reshape(1, -1)
    return mix64_array(seeds + k * np.uint64(GOLDEN_GAMMA))


def to_unit(raw: np.ndarray) -> np.ndarray:
    """Map raw 64-bit outputs to doubles in ``[0, 1)`` using the top 53 bits."""
    return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniforms(seeds, count: int) -> np.ndarray:
    """Uniform draws ``0..count-1`` for each seed; shape ``(len(seeds), count)``."""
    return to_unit(stream_outputs(seeds, count))
