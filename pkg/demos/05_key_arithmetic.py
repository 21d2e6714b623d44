"""How many secret bits does a session actually yield?

Walks the finite-size accounting: the asymptotic rate, the statistical
penalty at realistic block lengths, and the block length where the
extractable key first becomes positive.
"""

from polarqkd.secrecy import (
    binary_entropy,
    default_budget,
    infinite_key_rate,
    mu,
    secret_key_length,
)


def main():
    qber = 0.02
    print(f"asymptotic secret fraction at qber={qber}: "
          f"1 - 2*h2 = {infinite_key_rate(qber):.4f}")
    print(f"(h2({qber}) = {binary_entropy(qber):.4f})\n")

    print(f"{'N':>8} {'K':>8} {'mu':>9} {'secret bits':>12}")
    for n in range(10, 21, 2):
        N = 1 << n
        # reconciliation sized to a plausible code at this noise level
        K = round(0.7 * N * (1.0 - binary_entropy(qber)))
        budget = default_budget(N, K, qber=qber)
        ell = secret_key_length(budget)
        print(f"{N:>8} {K:>8} {mu(budget):>9.5f} {ell:>12}")

    print("\nthe same block, pushed through worse noise:")
    N = 1 << 16
    for q in (0.01, 0.03, 0.06, 0.10):
        K = round(0.7 * N * (1.0 - binary_entropy(q)))
        ell = secret_key_length(default_budget(N, K, qber=q))
        print(f"  qber={q:<5} K={K:<6} secret bits: {ell}")

    # The penalty term shrinks like 1/sqrt(N); below a few thousand bits
    # it eats everything, which is why the N=1024 row above reads zero.
    b_small = default_budget(1024, 512, qber=qber)
    b_large = default_budget(1 << 20, 512 << 10, qber=qber)
    print(f"\nmu at N=2^10: {mu(b_small):.4f}   mu at N=2^20: {mu(b_large):.5f}")


if __name__ == "__main__":
    main()
