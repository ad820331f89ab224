"""Fixed-memory sketches for the low-memory partitioners.

``BloomFilter`` stores (net, part) tuples.  A tuple is encoded as the single
integer ``net * K + part`` and mapped to k bit positions by double hashing,
``g_i(x) = (h_a(x) + i * h_b(x)) mod m``, with the SplitMix64 finalizer as
``h_a`` and the MurmurHash3 64-bit finalizer as ``h_b``.

``MinHashFamily`` holds k affine hashes ``h_i(x) = (a_i x + b_i) mod q``.
A vertex's part is the product of its per-function minima, reduced mod K.
When any minimum is 0 the product, and so the part, is 0.
"""
import math

import numpy as np
from numba import njit

from . import _rng

MERSENNE31 = (1 << 31) - 1
DEFAULT_BF_BITS = 20_000_000
DEFAULT_HASHES = 4

_U64 = 0xFFFFFFFFFFFFFFFF
_MUR1 = np.uint64(0xFF51AFD7ED558CCD)
_MUR2 = np.uint64(0xC4CEB9FE1A85EC53)
_SALT = np.uint64(0x2545F4914F6CDD1D)
_S33 = np.uint64(33)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)
_SIX = np.uint64(6)
_LOW6 = np.uint64(63)


@njit(cache=True)
def _hash_a(x):
    z = x + _rng.GOLDEN
    z = (z ^ (z >> _S30)) * _rng._M1
    z = (z ^ (z >> _S27)) * _rng._M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _hash_b(x):
    z = x ^ _SALT
    z = (z ^ (z >> _S33)) * _MUR1
    z = (z ^ (z >> _S33)) * _MUR2
    return z ^ (z >> _S33)


@njit(cache=True)
def _bf_insert(words, m, k, key):
    um = np.uint64(m)
    x = np.uint64(key)
    ha = _hash_a(x) % um
    hb = _hash_b(x) % um
    for i in range(k):
        bit = (ha + np.uint64(i) * hb) % um
        words[bit >> _SIX] |= _ONE << (bit & _LOW6)


@njit(cache=True)
def _bf_query(words, m, k, key):
    um = np.uint64(m)
    x = np.uint64(key)
    ha = _hash_a(x) % um
    hb = _hash_b(x) % um
    for i in range(k):
        bit = (ha + np.uint64(i) * hb) % um
        if (words[bit >> _SIX] >> (bit & _LOW6)) & _ONE == 0:
            return False
    return True


def bloom_positions_reference(key, m, k):
    """Bit positions for ``key`` computed with Python integers (cross-check)."""
    def mix_a(x):
        z = (x + 0x9E3779B97F4A7C15) & _U64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
        return z ^ (z >> 31)

    def mix_b(x):
        z = x ^ 0x2545F4914F6CDD1D
        z = ((z ^ (z >> 33)) * 0xFF51AFD7ED558CCD) & _U64
        z = ((z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53) & _U64
        return z ^ (z >> 33)

    ha, hb = mix_a(key) % m, mix_b(key) % m
    return [(ha + i * hb) % m for i in range(k)]


def encode_key(net, part, K):
    if not 0 <= part < K:
        raise ValueError(f"part {part} outside [0, {K})")
    return int(net) * int(K) + int(part)


class BloomFilter:
    def __init__(self, m=DEFAULT_BF_BITS, k=DEFAULT_HASHES):
        if m < 1 or k < 1:
            raise ValueError("a Bloom filter needs m >= 1 bits and k >= 1 hashes")
        self.m = int(m)
        self.k = int(k)
        self.words = np.zeros((self.m + 63) // 64, dtype=np.uint64)
        self.inserted = 0

    def insert(self, net, part, K):
        _bf_insert(self.words, self.m, self.k, encode_key(net, part, K))
        self.inserted += 1

    def query(self, net, part, K):
        return bool(_bf_query(self.words, self.m, self.k, encode_key(net, part, K)))

    def insert_key(self, key):
        _bf_insert(self.words, self.m, self.k, int(key))
        self.inserted += 1

    def query_key(self, key):
        return bool(_bf_query(self.words, self.m, self.k, int(key)))

    def bits_set(self):
        return int(sum(int(w).bit_count() for w in self.words))

    def fpp(self):
        return bf_fpp(self.k, self.inserted, self.m)


def bf_insert(bf, key, K):
    net, part = key
    bf.insert(net, part, K)
    return bf


def bf_query(bf, key, K):
    net, part = key
    return bf.query(net, part, K)


def bf_fpp(k, n, m):
    """Analytic false-positive probability (1 - exp(-k n / m))^k."""
    if m <= 0:
        raise ValueError("m must be positive")
    return (1.0 - math.exp(-k * n / m)) ** k


class MinHashFamily:
    def __init__(self, a, b, q=MERSENNE31):
        self.a = np.asarray(a, dtype=np.int64)
        self.b = np.asarray(b, dtype=np.int64)
        self.q = int(q)
        if self.a.shape != self.b.shape or self.a.ndim != 1 or self.a.size == 0:
            raise ValueError("need matching non-empty coefficient vectors")
        if ((self.a < 0) | (self.a >= q) | (self.b < 0) | (self.b >= q)).any():
            raise ValueError("coefficients must lie in [0, q)")
        if self.q >= 1 << 31:
            raise ValueError("q must stay below 2**31 so a*x + b fits in 63 bits")

    @property
    def k(self):
        return int(self.a.shape[0])

    @classmethod
    def from_seed(cls, k=DEFAULT_HASHES, seed=0, q=MERSENNE31):
        state = _rng.new_state(seed)
        draws = [int(_rng.bounded(state, q)) for _ in range(2 * k)]
        return cls(draws[0::2], draws[1::2], q)

    def signature(self, nets):
        x = np.asarray(nets, dtype=np.int64)
        return ((self.a[:, None] * x[None, :] + self.b[:, None]) % self.q).min(axis=1)


@njit(cache=True)
def _minhash_part(indices, lo, hi, a, b, q, K):
    if hi <= lo:
        return -1
    prod = 1 % K
    for i in range(a.shape[0]):
        alpha = q
        for j in range(lo, hi):
            h = (a[i] * indices[j] + b[i]) % q
            if h < alpha:
                alpha = h
        prod = (prod * (alpha % K)) % K
    return prod


def minhash_part(nets, fam, K):
    """Part id (prod_i min_n h_i(n)) mod K; raises ValueError on an empty net list."""
    x = np.asarray(nets, dtype=np.int64)
    if x.size == 0:
        raise ValueError("minhash_part needs at least one net")
    if x.max() >= fam.q or x.min() < 0:
        raise ValueError(f"net ids must lie in [0, {fam.q})")
    return int(_minhash_part(x, 0, x.shape[0], fam.a, fam.b, fam.q, K))
