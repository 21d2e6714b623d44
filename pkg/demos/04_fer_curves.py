"""Frame error rate against noise, and the sweep that maps it.

Runs a small grid at N=1024 and prints the FER cliff for two rates,
then shows the harness-level search utilities on top of the same
machinery.  Takes a minute or so.
"""

import tempfile
from pathlib import Path

from polarqkd.harness import SweepConfig, estimate_fer, max_qber_at_rate, sweep


def main():
    n = 10
    for rate in (0.3, 0.5):
        K = round(rate * (1 << n))
        print(f"rate {rate} (K={K}):")
        for p in (0.01, 0.03, 0.05, 0.08):
            row = estimate_fer(n, K, p, trials=200, seed=11)
            bar = "#" * round(40 * row.fer)
            print(f"  p={p:<5} fer={row.fer:5.3f} [{row.fer_ci_low:.3f}, {row.fer_ci_high:.3f}] {bar}")

    res = max_qber_at_rate(n, K=512, max_fer=0.05, trials=200, seed=12)
    print(f"\nlargest p keeping fer <= 0.05 at rate 0.5: {res.qber:.3f} "
          f"({len(res.evaluated)} probes)")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "grid.csv"
        cfg = SweepConfig(n_values=(9, 10), rates=(0.3, 0.5), p_values=(0.02, 0.05),
                          trials=100, seed=13, out=str(out))
        rows = sweep(cfg)
        print(f"\nsweep wrote {len(rows)} rows to CSV; first two:")
        for line in out.read_text().splitlines()[:3]:
            print(f"  {line}")


if __name__ == "__main__":
    main()
