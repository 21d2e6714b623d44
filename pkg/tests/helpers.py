"""Independent reference implementations used to check the package.

Everything here is deliberately brute force: explicit matrices, explicit
sums over channel outputs, explicit probability enumeration.  Nothing
imports from the package's construction or decoding internals, so an
agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np


def bit_reverse(i: int, n: int) -> int:
    return int(format(i, f"0{n}b")[::-1], 2) if n else 0


def kernel_power(n: int) -> np.ndarray:
    """n-fold Kronecker power of [[1,0],[1,1]] over GF(2)."""
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    out = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        out = np.kron(out, F) % 2
    return out


def generator_matrix(n: int) -> np.ndarray:
    """Full transform including the bit-reversal row permutation."""
    Fn = kernel_power(n)
    rev = [bit_reverse(i, n) for i in range(1 << n)]
    return Fn[rev]


def bsc_w(p: float):
    """Transition function and output alphabet of the bit-flip channel."""
    def W(y, x):
        return 1.0 - p if y == x else p
    return W, (0, 1)


def bec_w(eps: float):
    """Transition function and output alphabet of the erasure channel (2 = erased)."""
    def W(y, x):
        if y == 2:
            return eps
        return 1.0 - eps if y == x else 0.0
    return W, (0, 1, 2)


def split_z_bruteforce(n: int, W, alphabet, index: int) -> float:
    """Bhattacharyya parameter of one synthesized channel, by full enumeration.

    Sums sqrt(P(y, prefix | 0) * P(y, prefix | 1)) over every output block
    and every prefix, with each conditional obtained by marginalizing the
    suffix bits through the explicit generator matrix.
    """
    N = 1 << n
    G = generator_matrix(n)
    suffix_len = N - 1 - index
    total = 0.0
    for y in product(alphabet, repeat=N):
        for prefix in product((0, 1), repeat=index):
            branch = [0.0, 0.0]
            for ui in (0, 1):
                for suffix in product((0, 1), repeat=suffix_len):
                    u = np.array(prefix + (ui,) + suffix, dtype=np.uint8)
                    x = u @ G % 2
                    prob = 1.0
                    for k in range(N):
                        prob *= W(y[k], int(x[k]))
                        if prob == 0.0:
                            break
                    branch[ui] += prob
            total += math.sqrt(branch[0] * branch[1] / 2 ** (2 * (N - 1)))
    return total


def all_split_z(n: int, W, alphabet) -> list[float]:
    return [split_z_bruteforce(n, W, alphabet, i) for i in range(1 << n)]


def h2_ref(x: float) -> float:
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def toeplitz_matrix(seed_bits, input_len: int, output_len: int) -> np.ndarray:
    """The matrix itself: entry (i, j) = seed[input_len - 1 + i - j]."""
    seed_bits = np.asarray(seed_bits, dtype=np.uint8)
    T = np.zeros((output_len, input_len), dtype=np.uint8)
    for i in range(output_len):
        for j in range(input_len):
            T[i, j] = seed_bits[input_len - 1 + i - j]
    return T


def toeplitz_ref(x, seed_bits, output_len: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    T = toeplitz_matrix(seed_bits, x.size, output_len)
    return (T @ x) % 2


def perseed_toeplitz_batch(xs: np.ndarray, seeds: np.ndarray, output_len: int) -> np.ndarray:
    """Hash each row of xs under its own seed row, vectorized.

    xs: (T, input_len); seeds: (T, input_len + output_len - 1).
    """
    input_len = xs.shape[1]
    windows = np.lib.stride_tricks.sliding_window_view(seeds, input_len, axis=1)[:, :output_len]
    sums = np.einsum("tow,tw->to", windows.astype(np.int64), xs[:, ::-1].astype(np.int64))
    return (sums & 1).astype(np.uint8)


def noise_patterns(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Every length-N bit pattern with no particular order, plus its weight."""
    idx = np.arange(1 << N, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(N)) & 1).astype(np.uint8)
    return bits, bits.sum(axis=1)
