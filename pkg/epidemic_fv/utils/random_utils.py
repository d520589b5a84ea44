"""
SplitMix64 pseudo-random generator for reproducible initial perturbations.

The stream depends only on the seed, so the same seed gives the same fields on every
platform and in every implementation following the same recipe:

    state += 0x9E3779B97F4A7C15           (mod 2^64)
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

and a uniform double on [0, 1) is (z >> 11) * 2^-53.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be nonnegative, got {seed}")
        self.state = seed & MASK64

    def next_u64(self) -> int:
        """
        Next 64-bit output.

        Examples:
            SplitMix64(1234567) -> 6457827717110365317, 3203168211198807973,
                                   9817491932198370423, 4593380528125082431,
                                   16408922859458223821
        """
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_array(self, size: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(size)], dtype=float)
