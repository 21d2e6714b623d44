"""Finite-key length arithmetic and seeded two-universal hashing.

All logarithms here are base 2, so every quantity is a bit count or a rate
in bits.  The length bound is evaluated two ways (the closed form and the
step-by-step composition of entropy estimate, reconciliation leakage,
verification penalty, and hashing penalty); the two are algebraically
identical and the test suite holds them to 1e-9 of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .codec import pack_bits, unpack_bits

__all__ = [
    "binary_entropy",
    "SecrecyBudget",
    "default_budget",
    "mu",
    "key_length_bound",
    "key_length_bound_chained",
    "secret_key_length",
    "secrecy_content_gamma",
    "infinite_key_rate",
    "efficiency",
    "info_bits_for_efficiency",
    "tag_length",
    "ToeplitzExtractor",
    "toeplitz_hash",
    "extract",
]

# Above this many matrix cells the dense Toeplitz path is dropped for the
# big-integer convolution, which never materializes the matrix.
_DENSE_CELL_LIMIT = 1 << 22


def binary_entropy(x):
    """Binary Shannon entropy in bits; 0 at both endpoints.

    Accepts scalars or arrays in [0, 1].
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("entropy argument must lie in [0, 1]")
    interior = (x > 0.0) & (x < 1.0)
    xi = np.where(interior, x, 0.5)
    h = np.where(interior, -xi * np.log2(xi) - (1.0 - xi) * np.log2(1.0 - xi), 0.0)
    return float(h) if h.ndim == 0 else h


@dataclass(frozen=True)
class SecrecyBudget:
    """Parameters of one finite-key accounting instance.

    qber plays the worst-case error rate in the entropy estimate; e is the
    number of sacrificed estimation bits; q is the preparation quality.
    eps_prime defaults to eps_sec / 4 when not given.
    """

    N: int
    e: int
    K: int
    qber: float
    eps_cor: float
    eps_sec: float
    eps_prime: float = None  # type: ignore[assignment]
    q: float = 1.0

    def __post_init__(self):
        if self.eps_prime is None:
            object.__setattr__(self, "eps_prime", self.eps_sec / 4.0)
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.e < 1:
            raise ValueError("at least one estimation bit is required")
        if not 0 <= self.K <= self.N:
            raise ValueError("K must lie in [0, N]")
        if not 0.0 <= self.qber <= 1.0:
            raise ValueError("qber must lie in [0, 1]")
        for name in ("eps_cor", "eps_sec", "eps_prime"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")


def default_budget(N: int, K: int, qber: float, eps_cor: float = 0.05,
                   eps_sec: float = 0.5e-10, e: int | None = None,
                   q: float = 1.0) -> SecrecyBudget:
    """Budget with the standard experiment parameters; e defaults to round(N/3)."""
    if e is None:
        e = round(N / 3)
    return SecrecyBudget(N=N, e=e, K=K, qber=qber, eps_cor=eps_cor, eps_sec=eps_sec, q=q)


def mu(budget: SecrecyBudget) -> float:
    """Statistical enlargement of the observed error rate.

    The finite-sample penalty added to qber before the entropy estimate;
    shrinks as N grows with e proportional to N.
    """
    N, e = budget.N, budget.e
    return math.sqrt((e + 1) * (N + e) / (e * e * N) * math.log2(1.0 / budget.eps_prime))


def key_length_bound(budget: SecrecyBudget) -> float:
    """Real-valued extractable-length bound, closed form.

    N(q - h2(qber + mu)) - (N - K) - log2(2 / (eps_sec^2 * eps_cor)); the
    entropy argument saturates at 1/2, beyond which no key is claimed.
    """
    arg = budget.qber + mu(budget)
    if arg >= 0.5:
        return -math.inf
    entropy_bits = budget.N * (budget.q - binary_entropy(arg))
    penalty = math.log2(2.0 / (budget.eps_sec ** 2 * budget.eps_cor))
    return entropy_bits - (budget.N - budget.K) - penalty


def key_length_bound_chained(budget: SecrecyBudget) -> float:
    """The same bound composed term by term.

    Entropy estimate, minus reconciliation leakage (N - K), minus the
    verification penalty log2(2/eps_cor), minus the hashing penalty
    2*log2(1/eps_sec).  Algebraically equal to :func:`key_length_bound`.
    """
    arg = budget.qber + mu(budget)
    if arg >= 0.5:
        return -math.inf
    entropy_bits = budget.N * (budget.q - binary_entropy(arg))
    leak_ec = budget.N - budget.K
    return (entropy_bits - leak_ec - math.log2(2.0 / budget.eps_cor)
            - 2.0 * math.log2(1.0 / budget.eps_sec))


def secret_key_length(budget: SecrecyBudget) -> int:
    """Maximal compliant integer key length; 0 signals a no-key instance."""
    bound = key_length_bound(budget)
    if not math.isfinite(bound) or bound <= 0.0:
        return 0
    return int(math.floor(bound))


def secrecy_content_gamma(K: int, N: int, fer: float, p: float) -> float:
    """Secrecy content per processed bit: (1 - fer) * (K/N - h2(p)).

    Negative values are reported as-is; they mean the operating point
    yields nothing.
    """
    if not 0.0 <= fer <= 1.0:
        raise ValueError("fer must lie in [0, 1]")
    return (1.0 - fer) * (K / N - binary_entropy(p))


def infinite_key_rate(p: float) -> float:
    """Asymptotic secret fraction 1 - 2*h2(p); negative past the threshold."""
    if not 0.0 <= p <= 0.5:
        raise ValueError("p must lie in [0, 0.5]")
    return 1.0 - 2.0 * binary_entropy(p)


def efficiency(K: int, N: int, p: float) -> float:
    """Reconciliation efficiency: achieved rate over channel capacity."""
    return (K / N) / (1.0 - binary_entropy(p))


def info_bits_for_efficiency(beta: float, N: int, p: float) -> int:
    """Information-bit count hitting a target efficiency at (N, p)."""
    return int(round(beta * N * (1.0 - binary_entropy(p))))


def tag_length(eps_cor: float) -> int:
    """Verification tag length in bits: ceil(log2(1/eps_cor))."""
    if not 0.0 < eps_cor < 1.0:
        raise ValueError("eps_cor must lie in (0, 1)")
    return math.ceil(math.log2(1.0 / eps_cor))


@dataclass(frozen=True)
class ToeplitzExtractor:
    """A Toeplitz matrix over GF(2) described by one diagonal-seed bit string.

    seed_bits has length input_len + output_len - 1; entry (i, j) of the
    matrix is seed_bits[input_len - 1 + i - j].
    """

    input_len: int
    output_len: int
    seed_bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.output_len < 0 or self.input_len < 1:
            raise ValueError("need input_len >= 1 and output_len >= 0")
        if self.output_len > self.input_len:
            raise ValueError("output_len must not exceed input_len")
        bits = np.array(self.seed_bits, dtype=np.uint8, copy=True)
        if bits.ndim != 1 or bits.size != self.seed_len:
            raise ValueError(f"seed must be {self.seed_len} bits, got shape {bits.shape}")
        bits.flags.writeable = False
        object.__setattr__(self, "seed_bits", bits)

    @property
    def seed_len(self) -> int:
        return self.input_len + self.output_len - 1 if self.output_len else 0

    @classmethod
    def from_rng(cls, input_len: int, output_len: int, rng: np.random.Generator) -> "ToeplitzExtractor":
        nbits = input_len + output_len - 1 if output_len else 0
        bits = rng.integers(0, 2, size=nbits, dtype=np.uint8)
        return cls(input_len=input_len, output_len=output_len, seed_bits=bits)

    @classmethod
    def from_bytes(cls, input_len: int, output_len: int, data: bytes) -> "ToeplitzExtractor":
        nbits = input_len + output_len - 1 if output_len else 0
        return cls(input_len=input_len, output_len=output_len, seed_bits=unpack_bits(data, nbits))

    def seed_bytes(self) -> bytes:
        return pack_bits(self.seed_bits) if self.output_len else b""


def _toeplitz_dense(x: np.ndarray, seed_bits: np.ndarray, output_len: int) -> np.ndarray:
    input_len = x.shape[-1]
    windows = sliding_window_view(seed_bits, input_len)[:output_len].astype(np.int64)
    sums = x[..., ::-1].astype(np.int64) @ windows.T
    return (sums & 1).astype(np.uint8)


def _toeplitz_bigint(x: np.ndarray, seed_bits: np.ndarray, output_len: int) -> np.ndarray:
    # Carry-less product of the seed polynomial with the input polynomial;
    # the output bits are a window of the product's coefficients.
    input_len = x.shape[-1]
    seed_int = int.from_bytes(pack_bits(seed_bits), "little")
    out = np.empty(x.shape[:-1] + (output_len,), dtype=np.uint8)
    mask = (1 << output_len) - 1
    for idx in np.ndindex(x.shape[:-1]):
        acc = 0
        for j in np.nonzero(x[idx])[0]:
            acc ^= seed_int << int(j)
        window = (acc >> (input_len - 1)) & mask
        nbytes = (output_len + 7) // 8
        out[idx] = unpack_bits(window.to_bytes(nbytes, "little"), output_len)
    return out


def toeplitz_hash(x: np.ndarray, seed_bits: np.ndarray, output_len: int, method: str = "auto") -> np.ndarray:
    """Multiply bit vectors by the Toeplitz matrix the seed describes.

    Accepts (..., input_len) batches.  "auto" picks the dense matrix path
    for small products and the big-integer convolution otherwise; "dense"
    and "bigint" force a path (the two agree exactly).
    """
    x = np.asarray(x, dtype=np.uint8)
    input_len = x.shape[-1]
    if output_len == 0:
        return np.zeros(x.shape[:-1] + (0,), dtype=np.uint8)
    seed_bits = np.asarray(seed_bits, dtype=np.uint8)
    if seed_bits.size != input_len + output_len - 1:
        raise ValueError(f"seed must have {input_len + output_len - 1} bits, got {seed_bits.size}")
    if method == "auto":
        method = "dense" if input_len * output_len <= _DENSE_CELL_LIMIT else "bigint"
    if method == "dense":
        return _toeplitz_dense(x, seed_bits, output_len)
    if method == "bigint":
        return _toeplitz_bigint(x, seed_bits, output_len)
    raise ValueError(f"unknown method {method!r}")


def extract(key: np.ndarray, ext: ToeplitzExtractor) -> np.ndarray:
    """Hash a reconciled key down to its extractable length.

    Same seed and same key give the same output; output_len = 0 yields an
    empty vector (a no-key session).
    """
    key = np.asarray(key, dtype=np.uint8)
    if key.shape[-1] != ext.input_len:
        raise ValueError(f"key length {key.shape[-1]} does not match extractor input {ext.input_len}")
    return toeplitz_hash(key, ext.seed_bits, ext.output_len)
