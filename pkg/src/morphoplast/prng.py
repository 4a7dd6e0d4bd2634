"""Counter-based random numbers for environment resets.

Episode reproducibility has to survive platform, numpy-version and process
boundaries, so environment seeding does not go through any library RNG.
Instead we use the splitmix64 generator, which is fully specified by two
64-bit constants and a handful of shifts:

    state_i = (seed + (i + 1) * 0x9E3779B97F4A7C15) mod 2^64
    z = state_i
    z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
    z = (z XOR (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
    output_i = z XOR (z >> 31)

``splitmix64(seed, i)`` returns ``output_i``, i.e. the i-th draw of the
reference splitmix64 stream seeded with ``seed``.  Reference vectors (seed 0):

    splitmix64(0, 0) == 0xE220A8397B1DCDAF
    splitmix64(0, 1) == 0x6E789E6AA1B965F4
    splitmix64(0, 2) == 0x06C45D188009454F
    splitmix64(0, 3) == 0xF88BB8A8724C81EC

Floats are derived as output / 2^64, giving a uniform draw in [0, 1).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB
_TWO64 = float(1 << 64)


def splitmix64(seed: int, index: int) -> int:
    """The ``index``-th 64-bit output of the splitmix64 stream for ``seed``."""
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_2) & _MASK64
    return z ^ (z >> 31)


def unit_uniform(seed: int, index: int) -> float:
    """Uniform draw in [0, 1), the ``index``-th of the stream for ``seed``."""
    return splitmix64(seed, index) / _TWO64


def uniform(seed: int, index: int, lo: float, hi: float) -> float:
    return lo + (hi - lo) * unit_uniform(seed, index)


def uniforms(seed: int, count: int, lo: float, hi: float) -> list[float]:
    """First ``count`` uniform draws in [lo, hi) from the stream for ``seed``."""
    return [uniform(seed, i, lo, hi) for i in range(count)]
