"""Polar encoding and successive-cancellation decoding.

The encoder computes ``x = u . G`` over GF(2) with ``G`` the bit-reversal
permutation followed by the n-fold Kronecker power of the 2x2 lower
triangular kernel.  The permutation is applied explicitly before the
butterfly stages so the construction module's input indexing has a single,
testable home: input position j of the encoder sees the polarized channel
whose recursion path is the binary expansion of j (MSB first, 0 = degraded
branch).  The decoder mirrors this by undoing the bit reversal on its soft
input and then walking the transform tree in natural position order.

All bit vectors are numpy ``uint8`` arrays of 0/1 values; every operation
accepts a single vector of length N or a batch shaped (batch, N).
"""

from __future__ import annotations

import base64
from functools import lru_cache

import numpy as np

from .construct import BSC, ChannelParams, PolarCodeSpec

__all__ = [
    "bit_reversal_indices",
    "bit_reversal_permute",
    "polar_transform",
    "encode",
    "assemble_message",
    "message_bits",
    "channel_llr",
    "sc_decode",
    "sc_genie_errors",
    "pack_bits",
    "unpack_bits",
    "bits_to_envelope",
    "envelope_to_bits",
]

# Soft inputs are clamped to this magnitude so that certainty (infinite LLR
# from a noiseless channel) survives every combine without producing NaN.
LLR_CLAMP = 1e30


def _require_power_of_two(N: int) -> int:
    if N <= 0 or (N & (N - 1)) != 0:
        raise ValueError(f"length must be a power of 2, got {N}")
    return N.bit_length() - 1


@lru_cache(maxsize=32)
def bit_reversal_indices(n: int) -> np.ndarray:
    """Index permutation reversing the n-bit binary expansion of each index."""
    idx = np.arange(1 << n, dtype=np.int64)
    rev = np.zeros_like(idx)
    for _ in range(n):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.flags.writeable = False
    return rev


def bit_reversal_permute(v: np.ndarray) -> np.ndarray:
    """Permute the last axis by bit-reversed index; involutive.

    ``out[..., i] = v[..., rev(i)]``.
    """
    v = np.asarray(v)
    n = _require_power_of_two(v.shape[-1])
    return v[..., bit_reversal_indices(n)]


def polar_transform(v: np.ndarray) -> np.ndarray:
    """Multiply by the Kronecker-power kernel over GF(2), in O(N log N).

    Butterfly stages in place of a matrix product; self-inverse.
    """
    x = np.array(v, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    _require_power_of_two(N)
    h = 1
    while h < N:
        pairs = x.reshape(x.shape[:-1] + (N // (2 * h), 2, h))
        pairs[..., 0, :] ^= pairs[..., 1, :]
        h *= 2
    return x


def encode(u: np.ndarray, spec: PolarCodeSpec) -> np.ndarray:
    """Encode a full input vector ``u`` (information + frozen positions).

    Parameters
    ----------
    u : array of 0/1, shape (..., N)
        Must agree with ``spec.frozen_values`` on the frozen positions.
    spec : PolarCodeSpec

    Returns
    -------
    codeword : array of uint8, shape (..., N)
    """
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != spec.N:
        raise ValueError(f"input length {u.shape[-1]} does not match N={spec.N}")
    if spec.K < spec.N and not np.array_equal(
        u[..., spec.frozen], np.broadcast_to(spec.frozen_values, u.shape[:-1] + (spec.N - spec.K,))
    ):
        raise ValueError("input disagrees with frozen_values on frozen positions")
    return polar_transform(bit_reversal_permute(u))


def assemble_message(info_bits: np.ndarray, spec: PolarCodeSpec) -> np.ndarray:
    """Place K information bits into a full input vector.

    Information bits go to the information positions in reliability rank
    order (bit 0 on the best channel); frozen positions get frozen_values.
    """
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if info_bits.shape[-1] != spec.K:
        raise ValueError(f"expected {spec.K} information bits, got {info_bits.shape[-1]}")
    u = np.zeros(info_bits.shape[:-1] + (spec.N,), dtype=np.uint8)
    u[..., spec.info] = info_bits
    u[..., spec.frozen] = spec.frozen_values
    return u


def message_bits(u: np.ndarray, spec: PolarCodeSpec) -> np.ndarray:
    """Read the K information bits back out of a full input vector."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != spec.N:
        raise ValueError(f"input length {u.shape[-1]} does not match N={spec.N}")
    return u[..., spec.info]


def channel_llr(received: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Per-bit log-likelihood ratios ln P(y|0)/P(y|1) for a BSC observation.

    ``llr[i] = (1 - 2*received[i]) * ln((1-p)/p)``; p = 0 gives +/-inf and
    p = 0.5 gives the all-zero (uninformative) vector.
    """
    if params.kind != BSC:
        raise ValueError("log-likelihood ratios are defined here for the BSC only")
    received = np.asarray(received, dtype=np.uint8)
    with np.errstate(divide="ignore"):
        scale = np.log((1.0 - params.p) / params.p) if params.p > 0 else np.inf
    return (1.0 - 2.0 * received.astype(np.float64)) * scale


# Operand clip for the tanh-product branch of _f_exact.  tanh(18) is the
# largest argument that still rounds strictly below 1, keeping arctanh
# finite; the clip perturbs the result by under 5e-16 relative.
_TANH_CLIP = 36.0


def _f_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 2*atanh(tanh(a/2)*tanh(b/2)).  The sign-magnitude form with both
    # Jacobian corrections is stable for large operands but cancels
    # catastrophically once the result drops far below min(|a|, |b|);
    # the direct product form is relatively accurate there but saturates
    # for large operands.  Split on the smaller magnitude.
    abs_min = np.minimum(np.abs(a), np.abs(b))
    big = np.sign(a) * np.sign(b) * abs_min
    big += np.logaddexp(0.0, -np.abs(a + b))
    big -= np.logaddexp(0.0, -np.abs(a - b))
    t = np.tanh(np.clip(a, -_TANH_CLIP, _TANH_CLIP) / 2.0)
    t *= np.tanh(np.clip(b, -_TANH_CLIP, _TANH_CLIP) / 2.0)
    return np.where(abs_min < 1.0, 2.0 * np.arctanh(t), big)


def _f_minsum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


_F_FUNCTIONS = {"exact": _f_exact, "min-sum": _f_minsum}


def _sc_run(llr: np.ndarray, frozen_mask, frozen_vals, genie, f_combine):
    """Shared SC tree walk.

    Decodes positions in natural input order over the bit-reversed soft
    input.  With ``genie`` set, every decision is recorded against the true
    bit and then overwritten by it before propagating, which exposes each
    position's raw channel quality independent of error propagation.
    """
    batch, N = llr.shape
    decisions = np.empty((batch, N), dtype=np.uint8)
    errors = np.empty((batch, N), dtype=bool) if genie is not None else None

    def walk(node_llr, offset):
        m = node_llr.shape[1]
        if m == 1:
            hard = (node_llr[:, 0] < 0).astype(np.uint8)  # tie (LLR 0) -> 0
            if genie is not None:
                truth = genie[:, offset]
                errors[:, offset] = hard != truth
                decisions[:, offset] = truth
                return truth[:, None]
            if frozen_mask[offset]:
                hard = np.full(batch, frozen_vals[offset], dtype=np.uint8)
            decisions[:, offset] = hard
            return hard[:, None]
        half = m // 2
        first, second = node_llr[:, :half], node_llr[:, half:]
        left = walk(f_combine(first, second), offset)
        right = walk(second + (1.0 - 2.0 * left) * first, offset + half)
        return np.concatenate([left ^ right, right], axis=1)

    walk(llr, 0)
    return decisions, errors


def _prepare_soft(soft: np.ndarray, N: int):
    llr = np.asarray(soft, dtype=np.float64)
    single = llr.ndim == 1
    llr = np.atleast_2d(llr)
    if llr.ndim != 2 or llr.shape[1] != N:
        raise ValueError(f"soft input must have last dimension {N}, got shape {llr.shape}")
    llr = np.clip(llr, -LLR_CLAMP, LLR_CLAMP)
    n = _require_power_of_two(N)
    return llr[:, bit_reversal_indices(n)], single


def sc_decode(soft: np.ndarray, spec: PolarCodeSpec, method: str = "exact") -> np.ndarray:
    """Successive-cancellation decoding with frozen bits pinned.

    Parameters
    ----------
    soft : array of float, shape (N,) or (batch, N)
        Channel LLRs in codeword order.
    spec : PolarCodeSpec
    method : str
        ``"exact"`` (default; the tanh-domain check-node rule) or
        ``"min-sum"`` (approximation, offered for speed comparisons only).

    Returns
    -------
    u_hat : array of uint8, same leading shape as ``soft``
        Full decoded input vector; frozen positions equal frozen_values.
    """
    try:
        f_combine = _F_FUNCTIONS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(_F_FUNCTIONS)}") from None
    llr, single = _prepare_soft(soft, spec.N)
    frozen_mask = np.zeros(spec.N, dtype=bool)
    frozen_mask[spec.frozen] = True
    frozen_vals = np.zeros(spec.N, dtype=np.uint8)
    frozen_vals[spec.frozen] = spec.frozen_values
    decisions, _ = _sc_run(llr, frozen_mask, frozen_vals, None, f_combine)
    return decisions[0] if single else decisions


def sc_genie_errors(soft: np.ndarray, u_true: np.ndarray, method: str = "exact") -> np.ndarray:
    """Per-position raw SC decision errors given corrected prior decisions.

    Runs the SC recursion with no frozen set; at each position the hard
    decision is compared to the true bit and the true bit is propagated.
    The mean over a batch estimates each position's intrinsic error rate,
    which is what the reliability ordering ranks.

    Returns an array of bool with the same shape as ``u_true``.
    """
    f_combine = _F_FUNCTIONS[method]
    u_true = np.asarray(u_true, dtype=np.uint8)
    single = u_true.ndim == 1
    u_true = np.atleast_2d(u_true)
    llr, _ = _prepare_soft(soft, u_true.shape[1])
    if llr.shape != u_true.shape:
        raise ValueError("soft input and true bits must have matching shapes")
    _, errors = _sc_run(llr, None, None, u_true, f_combine)
    return errors[0] if single else errors


def pack_bits(bits: np.ndarray) -> bytes:
    """Pack a 0/1 vector into bytes, bit 0 of the vector = LSB of byte 0."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("pack_bits expects a single vector")
    return np.packbits(bits, bitorder="little").tobytes()


def unpack_bits(data: bytes, nbits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    if nbits < 0 or nbits > 8 * len(data):
        raise ValueError(f"nbits={nbits} inconsistent with {len(data)} bytes")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=nbits, bitorder="little")


def bits_to_envelope(bits: np.ndarray) -> dict:
    """JSON-ready envelope {bits: base64, nbits} for a bit vector."""
    bits = np.asarray(bits, dtype=np.uint8)
    return {"bits": base64.b64encode(pack_bits(bits)).decode("ascii"), "nbits": int(bits.size)}


def envelope_to_bits(envelope: dict) -> np.ndarray:
    """Inverse of :func:`bits_to_envelope`."""
    return unpack_bits(base64.b64decode(envelope["bits"]), int(envelope["nbits"]))
