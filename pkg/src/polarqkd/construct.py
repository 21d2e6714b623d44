"""Polar code construction from single-channel parameters.

Builds the per-input-position Bhattacharyya parameters of the polarized
channels by recursive application of the single-step transform expressions,
orders the positions by reliability, and selects frozen sets.  Everything is
kept in the natural log domain internally: the plus branch squares the
parameter at every level, which underflows double precision long before the
block lengths of interest (up to 2^20).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "BSC",
    "BEC",
    "ChannelParams",
    "ReliabilityProfile",
    "PolarCodeSpec",
    "root_z",
    "polarize_step_bsc",
    "polarize_step_bec",
    "reliability_sequence",
    "cached_reliability_sequence",
    "select_frozen",
    "rs_overlap",
    "profile_to_json",
    "profile_from_json",
    "write_profile",
    "read_profile",
    "write_sequence",
    "read_sequence",
]

BSC = "bsc"
BEC = "bec"

MAX_STAGES = 20


@dataclass(frozen=True)
class ChannelParams:
    """Single-use binary-input channel description.

    Parameters
    ----------
    kind : str
        ``"bsc"`` (crossover probability ``p``) or ``"bec"`` (erasure
        probability ``p``).
    p : float
        Channel parameter.  The BSC is restricted to ``0 <= p <= 0.5`` (the
        symmetric-channel convention); the BEC admits ``0 <= p <= 1``.
    """

    kind: str
    p: float

    def __post_init__(self):
        if self.kind not in (BSC, BEC):
            raise ValueError(f"kind must be '{BSC}' or '{BEC}', got {self.kind!r}")
        if self.kind == BSC and not 0.0 <= self.p <= 0.5:
            raise ValueError(f"BSC crossover probability must be in [0, 0.5], got {self.p}")
        if self.kind == BEC and not 0.0 <= self.p <= 1.0:
            raise ValueError(f"BEC erasure probability must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class ReliabilityProfile:
    """Per-position channel reliabilities for a block length N = 2^n.

    Attributes
    ----------
    params : ChannelParams
        The root channel the profile was built from.
    n : int
        Number of polarization stages; the block length is ``N = 2**n``.
    log_z : ndarray of float, shape (N,)
        Natural log of the Bhattacharyya parameter of the polarized channel
        seen by each encoder input position.
    order : ndarray of int, shape (N,)
        Input positions sorted by ascending Bhattacharyya parameter, i.e.
        most reliable first.  Ties break toward the lower index.
    """

    params: ChannelParams
    n: int
    log_z: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def z(self) -> np.ndarray:
        """Bhattacharyya parameters in the linear domain (may underflow to 0)."""
        return np.exp(self.log_z)


@dataclass(frozen=True)
class PolarCodeSpec:
    """A concrete (N, K) polar code: which positions carry information.

    ``info`` holds the K information positions in reliability rank order
    (best channel first); ``frozen`` holds the remaining N - K positions,
    paired elementwise with ``frozen_values``.
    """

    n: int
    N: int
    K: int
    frozen: np.ndarray = field(repr=False)
    frozen_values: np.ndarray = field(repr=False)
    info: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.N != 1 << self.n:
            raise ValueError(f"N must equal 2**n, got N={self.N}, n={self.n}")
        if not 0 <= self.K <= self.N:
            raise ValueError(f"K must be in [0, N], got K={self.K}, N={self.N}")
        if len(self.frozen) != self.N - self.K or len(self.info) != self.K:
            raise ValueError("frozen/info sizes inconsistent with N and K")
        if len(self.frozen_values) != len(self.frozen):
            raise ValueError("frozen_values length must match frozen set size")
        combined = np.sort(np.concatenate([np.asarray(self.frozen, dtype=np.int64),
                                           np.asarray(self.info, dtype=np.int64)]))
        if not np.array_equal(combined, np.arange(self.N)):
            raise ValueError("frozen and info together must partition [0, N)")

    @property
    def rate(self) -> float:
        return self.K / self.N


def root_z(params: ChannelParams) -> float:
    """Bhattacharyya parameter of the unpolarized channel.

    2*sqrt(p*(1-p)) for the BSC; p for the BEC.
    """
    if params.kind == BSC:
        return 2.0 * math.sqrt(params.p * (1.0 - params.p))
    return params.p


def polarize_step_bsc(z: float) -> tuple[float, float]:
    """One polarization step on a BSC-shaped channel with parameter ``z``.

    Returns
    -------
    (z_minus, z_plus) : tuple of float
        Parameters of the degraded (check) and upgraded (variable) branch:
        ``z_minus = z*sqrt(2 - z**2)``, ``z_plus = z**2``.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must be in [0, 1], got {z}")
    return z * math.sqrt(2.0 - z * z), z * z


def polarize_step_bec(z: float) -> tuple[float, float]:
    """One polarization step on a BEC: ``(2z - z**2, z**2)``."""
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must be in [0, 1], got {z}")
    return 2.0 * z - z * z, z * z


def _log_root_z(params: ChannelParams) -> float:
    if params.p == 0.0:
        return -math.inf
    if params.kind == BSC:
        return math.log(2.0) + 0.5 * (math.log(params.p) + math.log1p(-params.p))
    return math.log(params.p)


def _log_step_bsc(lz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # ln(2 - z^2) = log1p(-expm1(2*ln z)); stable for ln z in [-inf, 0]
    lminus = lz + 0.5 * np.log1p(-np.expm1(2.0 * lz))
    return lminus, 2.0 * lz


def _log_step_bec(lz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lminus = lz + np.log1p(-np.expm1(lz))
    return lminus, 2.0 * lz


def reliability_sequence(params: ChannelParams, n: int, max_n: int = MAX_STAGES) -> ReliabilityProfile:
    """Compute the reliability profile for block length N = 2^n.

    Applies the single-step parameter transform ``n`` times starting from the
    root channel.  Each input position's path through the recursion tree is
    its index in binary, most significant bit first, with 0 for the degraded
    branch and 1 for the upgraded branch; this matches the encoder's input
    indexing (validated empirically by the decoder-side error-rate ranking).

    Parameters
    ----------
    params : ChannelParams
    n : int
        Number of stages, ``1 <= n <= max_n``.

    Returns
    -------
    ReliabilityProfile
    """
    if not 1 <= n <= max_n:
        raise ValueError(f"n must be in [1, {max_n}], got {n}")
    step = _log_step_bsc if params.kind == BSC else _log_step_bec
    log_z = np.array([_log_root_z(params)], dtype=np.float64)
    with np.errstate(invalid="ignore"):  # -inf arithmetic at degenerate p
        for _ in range(n):
            lminus, lplus = step(log_z)
            children = np.empty(2 * log_z.size, dtype=np.float64)
            children[0::2] = lminus
            children[1::2] = lplus
            log_z = children
    # -inf - -inf = nan can only arise from the degenerate p = 0 root; every
    # leaf is then a perfect channel and the natural order is fine.
    np.nan_to_num(log_z, copy=False, nan=-np.inf)
    order = np.argsort(log_z, kind="stable")
    log_z.flags.writeable = False
    order.flags.writeable = False
    return ReliabilityProfile(params=params, n=n, log_z=log_z, order=order)


@lru_cache(maxsize=64)
def cached_reliability_sequence(kind: str, p: float, n: int) -> ReliabilityProfile:
    """Memoized ``reliability_sequence`` keyed by scalars, for hot loops."""
    return reliability_sequence(ChannelParams(kind, p), n)


def select_frozen(profile: ReliabilityProfile, K: int) -> PolarCodeSpec:
    """Freeze the N - K least reliable positions of a profile.

    Parameters
    ----------
    profile : ReliabilityProfile
    K : int
        Number of information positions, ``0 <= K <= N``.

    Returns
    -------
    PolarCodeSpec
        With ``info = order[:K]`` (best first), ``frozen = order[K:]`` and
        all-zero frozen values.
    """
    N = profile.N
    if not 0 <= K <= N:
        raise ValueError(f"K must be in [0, {N}], got {K}")
    info = profile.order[:K].copy()
    frozen = profile.order[K:].copy()
    info.flags.writeable = False
    frozen.flags.writeable = False
    values = np.zeros(N - K, dtype=np.uint8)
    values.flags.writeable = False
    return PolarCodeSpec(n=profile.n, N=N, K=K, frozen=frozen, frozen_values=values, info=info)


def order_overlap(order_a, order_b, frozen_fraction: float) -> float:
    """Shared fraction of the worst ``ceil(frozen_fraction * N)`` indices.

    Both arguments are permutations of [0, N), most reliable first; the
    result is ``|A & B| / |A|`` in [0, 1].
    """
    a = np.asarray(order_a, dtype=np.int64)
    b = np.asarray(order_b, dtype=np.int64)
    N = a.size
    for name, arr in (("order_a", a), ("order_b", b)):
        if arr.shape != (N,) or not np.array_equal(np.sort(arr), np.arange(N)):
            raise ValueError(f"{name} must be a permutation of [0, {N})")
    if not 0.0 < frozen_fraction < 1.0:
        raise ValueError(f"frozen_fraction must be in (0, 1), got {frozen_fraction}")
    m = math.ceil(frozen_fraction * N)
    return len(set(a[-m:].tolist()) & set(b[-m:].tolist())) / m


def rs_overlap(profile: ReliabilityProfile, reference_order, frozen_fraction: float) -> float:
    """Fraction of a profile's worst-channel set shared with a reference.

    See :func:`order_overlap`; the profile contributes its own ordering.
    """
    return order_overlap(profile.order, reference_order, frozen_fraction)


def profile_to_json(profile: ReliabilityProfile) -> str:
    """Serialize a profile to JSON with fields {kind, p, n, order, log_z}."""
    return json.dumps(
        {
            "kind": profile.params.kind,
            "p": profile.params.p,
            "n": profile.n,
            "order": profile.order.tolist(),
            "log_z": profile.log_z.tolist(),
        }
    )


def profile_from_json(text: str) -> ReliabilityProfile:
    """Inverse of :func:`profile_to_json`."""
    doc = json.loads(text)
    log_z = np.asarray(doc["log_z"], dtype=np.float64)
    order = np.asarray(doc["order"], dtype=np.int64)
    log_z.flags.writeable = False
    order.flags.writeable = False
    return ReliabilityProfile(
        params=ChannelParams(doc["kind"], doc["p"]),
        n=int(doc["n"]),
        log_z=log_z,
        order=order,
    )


def write_profile(path, profile: ReliabilityProfile) -> None:
    with open(path, "w") as fh:
        fh.write(profile_to_json(profile))


def read_profile(path) -> ReliabilityProfile:
    with open(path) as fh:
        return profile_from_json(fh.read())


def write_sequence(path, order) -> None:
    """Write an ordering as flat text, one index per line."""
    order = np.asarray(order, dtype=np.int64)
    with open(path, "w") as fh:
        for idx in order:
            fh.write(f"{idx}\n")


def read_sequence(path) -> np.ndarray:
    """Read a flat one-index-per-line ordering."""
    with open(path) as fh:
        values = [int(line) for line in fh if line.strip()]
    return np.asarray(values, dtype=np.int64)
