"""Experiment driver: frame-error-rate estimation, searches, and sweeps.

Every experiment is keyed by one master seed.  Grid points derive their
seeds by counter (point index), trials derive theirs by trial index, so
results are byte-identical no matter how many workers run the grid or in
what order points complete.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .construct import BEC, BSC
from .protocol import MODE_FULL, MODE_NAKASSIS_MINK, run_sessions
from .secrecy import (
    binary_entropy,
    default_budget,
    efficiency,
    secrecy_content_gamma,
    secret_key_length,
)

__all__ = [
    "ResultRow",
    "CSV_COLUMNS",
    "wilson_interval",
    "estimate_fer",
    "MaxQberResult",
    "max_qber_at_rate",
    "max_info_bits_at_qber",
    "SweepConfig",
    "sweep",
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "n", "N", "K", "rate", "p", "trials", "failures", "fer",
    "fer_ci_low", "fer_ci_high", "beta", "avg_yield", "gamma",
    "ell", "rate_secret", "false_accepts",
]

QBER_RESOLUTION = 1e-3


@dataclass(frozen=True)
class ResultRow:
    """One experiment point with its derived columns.

    fer = failures / trials by ground truth; false_accepts counts sessions
    whose hash verified despite a mismatch (audit column, 0 in modes
    without a tag).
    """

    n: int
    N: int
    K: int
    rate: float
    p: float
    trials: int
    failures: int
    fer: float
    fer_ci_low: float
    fer_ci_high: float
    beta: float
    avg_yield: float
    gamma: float
    ell: int
    rate_secret: float
    false_accepts: int = 0

    def as_csv_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = format(v, ".12g") if isinstance(v, float) else str(v)
        return out


def wilson_interval(failures: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    phat = failures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _derive_columns(n, K, p, trials, failures, false_accepts, eps_cor, eps_sec):
    N = 1 << n
    fer = failures / trials
    lo, hi = wilson_interval(failures, trials)
    ell = secret_key_length(default_budget(N, K, qber=p, eps_cor=eps_cor, eps_sec=eps_sec))
    return ResultRow(
        n=n, N=N, K=K, rate=K / N, p=p, trials=trials, failures=failures,
        fer=fer, fer_ci_low=lo, fer_ci_high=hi,
        beta=efficiency(K, N, p),
        avg_yield=(1.0 - fer) * K / N,
        gamma=secrecy_content_gamma(K, N, fer, p),
        ell=ell, rate_secret=ell / N,
        false_accepts=false_accepts,
    )


def estimate_fer(n: int, K: int, p: float, trials: int = 50, seed: int = 0,
                 rs_kind: str = BSC, mode: str = MODE_FULL,
                 eps_cor: float = 0.05, eps_sec: float = 0.5e-10) -> ResultRow:
    """Monte-Carlo frame error rate over independent sessions.

    Failures are ground-truth mismatches; the hash verdict is recorded
    alongside as the false-accept count.  The finite-key columns evaluate
    the arithmetic with the channel parameter standing in for the
    worst-case error rate.
    """
    batch = run_sessions(n, K, p, seed, trials, mode=mode, rs_kind=rs_kind, eps_cor=eps_cor)
    return _derive_columns(n, K, p, trials, batch.failures, batch.false_accepts,
                           eps_cor, eps_sec)


@dataclass(frozen=True)
class MaxQberResult:
    """Outcome of the error-rate search at fixed rate."""

    qber: float
    feasible: bool
    evaluated: tuple = ()


def _check_monotone(evaluated) -> None:
    # Bisection assumes FER grows with p; estimation noise can break the
    # ordering on nearby points, so violations are reported, not raised.
    pts = sorted(evaluated)
    for (p1, f1), (p2, f2) in zip(pts, pts[1:]):
        if f2 < f1:
            logger.warning("FER not monotone on evaluated points: fer(%g)=%g > fer(%g)=%g",
                           p1, f1, p2, f2)


def max_qber_at_rate(n: int, K: int, max_fer: float = 0.05, p_range: tuple[float, float] = (1e-3, 0.25),
                     trials: int = 50, seed: int = 0, rs_kind: str = BSC) -> MaxQberResult:
    """Largest channel error rate keeping estimated FER within max_fer.

    Bisects p_range to 1e-3 resolution, rebuilding the code at each probe
    (the reliability ordering tracks p).  Feasible at the top of the range
    returns the top; infeasible at the bottom returns 0 with the flag
    cleared.
    """
    if not 0.0 < max_fer <= 1.0:
        raise ValueError("max_fer must lie in (0, 1]")
    lo_p, hi_p = p_range
    if not 0.0 < lo_p < hi_p < 0.5:
        raise ValueError("search range must satisfy 0 < lo < hi < 0.5")
    evaluated = []

    def fer_at(p, probe):
        batch = run_sessions(n, K, p, seed + probe, trials, mode=MODE_NAKASSIS_MINK, rs_kind=rs_kind)
        f = batch.failures / trials
        evaluated.append((p, f))
        return f

    if fer_at(hi_p, 0) <= max_fer:
        _check_monotone(evaluated)
        return MaxQberResult(qber=hi_p, feasible=True, evaluated=tuple(evaluated))
    if fer_at(lo_p, 1) > max_fer:
        _check_monotone(evaluated)
        return MaxQberResult(qber=0.0, feasible=False, evaluated=tuple(evaluated))
    probe = 2
    lo, hi = lo_p, hi_p
    while hi - lo > QBER_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if fer_at(mid, probe) <= max_fer:
            lo = mid
        else:
            hi = mid
        probe += 1
    _check_monotone(evaluated)
    return MaxQberResult(qber=lo, feasible=True, evaluated=tuple(evaluated))


def max_info_bits_at_qber(n: int, p: float, max_fer: float = 0.05, trials: int = 50,
                          seed: int = 0, rs_kind: str = BSC) -> int:
    """Largest K keeping estimated FER within max_fer at fixed p.

    Integer bisection on K; FER is non-decreasing in K since every
    additional information position weakens the frozen set.
    """
    N = 1 << n

    def feasible(K, probe):
        batch = run_sessions(n, K, p, seed + probe, trials, mode=MODE_NAKASSIS_MINK, rs_kind=rs_kind)
        return batch.failures / trials <= max_fer

    if feasible(N, 0):
        return N
    lo, hi = 0, N  # fer(K=0) = 0: everything frozen decodes exactly
    probe = 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid, probe):
            lo = mid
        else:
            hi = mid
        probe += 1
    return lo


@dataclass(frozen=True)
class SweepConfig:
    """Grid specification for a sweep run.

    rates are K/N targets, rounded to integer K per block length.  out is
    the CSV path; the manifest lands next to it.  workers > 1 distributes
    grid points over processes without changing any output byte.
    """

    n_values: tuple
    rates: tuple
    p_values: tuple
    trials: int = 50
    max_fer: float = 0.05
    rs_kind: str = BSC
    seed: int = 0
    out: str | None = None
    workers: int = 1
    mode: str = MODE_FULL
    eps_cor: float = 0.05
    eps_sec: float = 0.5e-10

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (self.n_values and self.rates and self.p_values):
            raise ValueError("all grids must be non-empty")
        if not 0.0 < self.max_fer < 1.0:
            raise ValueError("max_fer must lie in (0, 1)")
        if self.rs_kind not in (BSC, BEC):
            raise ValueError(f"unknown rs_kind {self.rs_kind!r}")

    def points(self) -> list:
        grid = []
        for n in self.n_values:
            N = 1 << int(n)
            for rate in self.rates:
                K = min(N, max(0, round(rate * N)))
                for p in self.p_values:
                    grid.append((int(n), K, float(p)))
        return grid


def _point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=master, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def _evaluate_point(payload):
    cfg_values, index, n, K, p = payload
    cfg = SweepConfig(**cfg_values)
    try:
        row = estimate_fer(n, K, p, trials=cfg.trials, seed=_point_seed(cfg.seed, index),
                           rs_kind=cfg.rs_kind, mode=cfg.mode,
                           eps_cor=cfg.eps_cor, eps_sec=cfg.eps_sec)
        return index, row, None
    except Exception as exc:  # recorded in the manifest, sweep continues
        return index, None, f"{type(exc).__name__}: {exc}"


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        return out.stdout.strip() if out.returncode == 0 else "unknown"
    except OSError:
        return "unknown"


def sweep(cfg: SweepConfig) -> list[ResultRow]:
    """Evaluate the full grid; write CSV and manifest when out is set.

    The CSV depends only on (grids, trials, seed, rs_kind, mode, epsilons);
    wall clock and environment go to the manifest only, keeping reruns
    byte-identical.
    """
    started = time.time()
    pts = cfg.points()
    cfg_values = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    payloads = [(cfg_values, i, n, K, p) for i, (n, K, p) in enumerate(pts)]

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_evaluate_point, payloads))
    else:
        outcomes = [_evaluate_point(pl) for pl in payloads]

    outcomes.sort(key=lambda item: item[0])
    rows = [row for _, row, err in outcomes if row is not None]
    errors = [{"point": list(pts[i]), "error": err}
              for i, _, err in outcomes if err is not None]

    if cfg.out:
        out_dir = os.path.dirname(os.path.abspath(cfg.out))
        os.makedirs(out_dir, exist_ok=True)
        with open(cfg.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row.as_csv_dict())
        manifest = {
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
            "seed": cfg.seed,
            "n_values": [int(v) for v in cfg.n_values],
            "rates": [float(v) for v in cfg.rates],
            "p_values": [float(v) for v in cfg.p_values],
            "trials": cfg.trials,
            "max_fer": cfg.max_fer,
            "rs_kind": cfg.rs_kind,
            "mode": cfg.mode,
            "eps_cor": cfg.eps_cor,
            "eps_sec": cfg.eps_sec,
            "workers": cfg.workers,
            "points": len(pts),
            "errors": errors,
            "git_describe": _git_describe(),
            "wall_clock_s": round(time.time() - started, 3),
        }
        with open(_manifest_path(cfg.out), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rows


def _manifest_path(csv_path: str) -> str:
    base, _ = os.path.splitext(csv_path)
    return base + ".manifest.json"
