"""SplitMix64 primitives for compiled kernels; bit-identical to :mod:`rng`.

A stream is a one-element ``uint64`` array holding the state.
"""

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
INV53 = 1.0 / (1 << 53)
ZERO = np.uint64(0)
ONE = np.uint64(1)


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@nb.njit(cache=True)
def derive_seed(seed, index):
    return mix64(np.uint64(seed) + (np.uint64(index) + ONE) * GOLDEN)


@nb.njit(cache=True, inline="always")
def next_u64(st):
    st[0] = st[0] + GOLDEN
    return mix64(st[0])


@nb.njit(cache=True, inline="always")
def unit(st):
    return np.float64(next_u64(st) >> S11) * INV53


@nb.njit(cache=True)
def below(st, n):
    un = np.uint64(n)
    rem = (ZERO - un) % un  # 2**64 mod n
    while True:
        x = next_u64(st)
        if rem == ZERO or x < ZERO - rem:
            return np.int64(x % un)


def stream(seed: int) -> np.ndarray:
    return np.array([seed & ((1 << 64) - 1)], dtype=np.uint64)
