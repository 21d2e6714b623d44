"""The hash family behind tags and key extraction, measured.

Two properties carry the protocol: distinct inputs collide with
probability 2^-len under a random seed, and the output is insensitive
to which of the two equivalent implementations computed it.
"""

import numpy as np

from polarqkd.secrecy import ToeplitzExtractor, extract, tag_length, toeplitz_hash


def main():
    rng = np.random.default_rng(1)

    out_len = 6
    trials = 40_000
    collisions = 0
    for _ in range(trials):
        x = rng.integers(0, 2, size=48, dtype=np.uint8)
        y = rng.integers(0, 2, size=48, dtype=np.uint8)
        if np.array_equal(x, y):
            continue
        seed = rng.integers(0, 2, size=48 + out_len - 1, dtype=np.uint8)
        if np.array_equal(toeplitz_hash(x, seed, out_len),
                          toeplitz_hash(y, seed, out_len)):
            collisions += 1
    print(f"collision rate over {trials} random pairs: {collisions / trials:.5f} "
          f"(ideal 2^-{out_len} = {2 ** -out_len:.5f})")

    x = rng.integers(0, 2, size=4096, dtype=np.uint8)
    seed = rng.integers(0, 2, size=4096 + 256 - 1, dtype=np.uint8)
    dense = toeplitz_hash(x, seed, 256, method="dense")
    bigint = toeplitz_hash(x, seed, 256, method="bigint")
    print(f"dense and carry-free implementations agree: {np.array_equal(dense, bigint)}")

    ext = ToeplitzExtractor(4096, 256, seed)
    key = extract(x, ext)
    ones = int(key.sum())
    print(f"extracted 256 bits from 4096; weight {ones} (expect about 128)")

    print("\ntag widths by correctness target:")
    for eps in (0.05, 0.01, 1e-6):
        print(f"  eps_cor={eps:<6} -> {tag_length(eps)} bits")


if __name__ == "__main__":
    main()
