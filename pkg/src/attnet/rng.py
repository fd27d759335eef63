"""Seeded random streams.

Every stochastic component draws from NumPy's PCG64 bit generator, seeded
through ``SeedSequence(seed, spawn_key=keys)``.  The spawn key identifies a
sub-stream (for example ``(sample_index,)`` for one null-model sample), so a
task's draws do not depend on which worker runs it or in what order.

Uniform doubles come from ``Generator.random`` (53 high bits of one 64-bit
output).  Gaussian variates use the Box-Muller transform on those uniforms
rather than NumPy's ziggurat sampler, so test vectors depend only on PCG64
and IEEE-754 ``log``/``sqrt``/``cos``.
"""
from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))


def gaussian(gen: np.random.Generator, size: int) -> np.ndarray:
    pairs = (size + 1) // 2
    u1 = gen.random(pairs)
    u2 = gen.random(pairs)
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:size]
