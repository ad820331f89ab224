"""SplitMix64, the one generator used for every random decision in the package.

The generator state is a single uint64 held in a length-1 array so that
numba kernels can advance it in place.  Output is identical on every
platform, which keeps stream files and part vectors reproducible.
"""
import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def new_state(seed):
    return np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)


@njit(cache=True)
def next_u64(state):
    state[0] += GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def bounded(state, n):
    """Uniform integer in [0, n) by rejection; n must be positive."""
    un = np.uint64(n)
    limit = np.uint64(0xFFFFFFFFFFFFFFFF) - (np.uint64(0xFFFFFFFFFFFFFFFF) % un)
    while True:
        x = next_u64(state)
        if x < limit:
            return np.int64(x % un)


def splitmix64_reference(seed, count):
    """Pure-Python SplitMix64, used to cross-check the compiled version."""
    mask = 0xFFFFFFFFFFFFFFFF
    s = seed & mask
    out = []
    for _ in range(count):
        s = (s + 0x9E3779B97F4A7C15) & mask
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out
