"""One-way key reconciliation sessions over an authenticated channel.

Alice masks a random codeword onto her raw key and sends the mask; Bob
undoes his noisy copy, decodes, and re-masks to recover her key exactly
when decoding succeeds.  The masking identity makes the decoder's input
error pattern equal the channel's, independent of the key values, which is
also what lets the batched session runner share one vectorized decode
across many sessions.

A session's entire randomness is keyed by (seed, trial): raw key material,
channel noise, codeword draw, and hash seeds live on separate Philox
streams, so any trial is reproducible in isolation and the single-session
and batched paths produce bit-identical transcripts.
"""

from __future__ import annotations

import base64
import json
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .channel import NOISE_STREAM, derived_rng, measure_qber
from .codec import (
    assemble_message,
    channel_llr,
    encode,
    pack_bits,
    sc_decode,
    unpack_bits,
)
from .construct import BSC, ChannelParams, PolarCodeSpec, cached_reliability_sequence, select_frozen
from .secrecy import (
    ToeplitzExtractor,
    default_budget,
    extract,
    secret_key_length,
    tag_length,
    toeplitz_hash,
)

__all__ = [
    "MODE_FULL",
    "MODE_NAKASSIS_MINK",
    "AliceState",
    "BobState",
    "ReconcileMessage",
    "ProtocolOutcome",
    "make_alice",
    "make_bob",
    "alice_round",
    "bob_round",
    "run_protocol",
    "run_sessions",
    "SessionBatch",
    "encode_message",
    "decode_message",
    "LoopbackTransport",
]

MODE_FULL = "full"
MODE_NAKASSIS_MINK = "nakassis-mink"

# Philox stream ids under one session seed; NOISE_STREAM (0) is claimed by
# the channel module.
PROTOCOL_STREAM = 1
KEY_STREAM = 2

_SEED_NONCE_BYTES = 16


@dataclass
class ReconcileMessage:
    """The single reconciliation message, Alice to Bob."""

    ct: np.ndarray
    verify_tag: np.ndarray
    extractor_seed: bytes

    def __post_init__(self):
        self.ct = np.asarray(self.ct, dtype=np.uint8)
        self.verify_tag = np.asarray(self.verify_tag, dtype=np.uint8)


@dataclass
class AliceState:
    """Alice's side: raw key, code, and the hash material she commits to.

    raw_key holds N reconciliation bits followed by e estimation bits.
    key_length is the number of secret bits to extract (0 = none);
    tag_bits = 0 disables verification.  hash_choice is filled in by
    :func:`alice_round`.
    """

    raw_key: np.ndarray
    spec: PolarCodeSpec
    rng: np.random.Generator
    tag_bits: int
    key_length: int = 0
    hash_choice: ToeplitzExtractor | None = None
    transcript: list = field(default_factory=list)

    @property
    def reconcile_bits(self) -> np.ndarray:
        return self.raw_key[: self.spec.N]

    @property
    def estimation_bits(self) -> np.ndarray:
        return self.raw_key[self.spec.N:]


@dataclass
class BobState:
    """Bob's side: the noisy copy of Alice's raw key and the shared code."""

    received_key: np.ndarray
    spec: PolarCodeSpec
    channel: ChannelParams
    transcript: list = field(default_factory=list)

    @property
    def reconcile_bits(self) -> np.ndarray:
        return self.received_key[: self.spec.N]

    @property
    def estimation_bits(self) -> np.ndarray:
        return self.received_key[self.spec.N:]


@dataclass(frozen=True)
class ProtocolOutcome:
    """What one session produced, with ground truth visible to the harness."""

    agreed: bool
    verified: bool
    leak_bits: int
    qber_estimate: float | None
    key_length: int
    alice_secret: np.ndarray | None
    bob_secret: np.ndarray | None


def make_alice(raw_key, spec: PolarCodeSpec, rng: np.random.Generator, *,
               eps_cor: float = 0.05, tag_bits: int | None = None,
               key_length: int = 0) -> AliceState:
    raw_key = np.asarray(raw_key, dtype=np.uint8)
    if raw_key.ndim != 1 or raw_key.size < spec.N:
        raise ValueError("raw key must hold at least N bits")
    if tag_bits is None:
        tag_bits = tag_length(eps_cor)
    return AliceState(raw_key=raw_key, spec=spec, rng=rng, tag_bits=tag_bits,
                      key_length=key_length)


def make_bob(received_key, spec: PolarCodeSpec, channel: ChannelParams) -> BobState:
    received_key = np.asarray(received_key, dtype=np.uint8)
    if received_key.ndim != 1 or received_key.size < spec.N:
        raise ValueError("received key must hold at least N bits")
    return BobState(received_key=received_key, spec=spec, channel=channel)


def expand_session_seeds(nonce: bytes, N: int, tag_bits: int, key_length: int):
    """Both hash seeds, expanded deterministically from the wire nonce.

    The tag seed and extractor seed live on separate child streams of the
    nonce, so either side recomputes them from the message alone plus the
    publicly known lengths.
    """
    entropy = int.from_bytes(nonce, "big")
    tag_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=entropy, spawn_key=(0,))))
    ext_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=entropy, spawn_key=(1,))))
    tag_seed = tag_rng.integers(0, 2, size=N + tag_bits - 1, dtype=np.uint8) if tag_bits else np.zeros(0, np.uint8)
    ext_seed = ext_rng.integers(0, 2, size=N + key_length - 1, dtype=np.uint8) if key_length else np.zeros(0, np.uint8)
    return tag_seed, ext_seed


def alice_round(state: AliceState, info_bits=None) -> tuple[ReconcileMessage, np.ndarray]:
    """Produce the reconciliation message; returns it with X^N for extraction.

    Draws K fresh random information bits (or uses ``info_bits`` when
    given), encodes them, and masks the codeword with the raw key.  The
    verification tag is computed over X^N under a seed carried, together
    with the extractor seed, by the message nonce.
    """
    spec = state.spec
    x = state.reconcile_bits
    if info_bits is None:
        info_bits = state.rng.integers(0, 2, size=spec.K, dtype=np.uint8)
    nonce = state.rng.bytes(_SEED_NONCE_BYTES)
    w = encode(assemble_message(info_bits, spec), spec)
    ct = w ^ x
    tag_seed, ext_seed = expand_session_seeds(nonce, spec.N, state.tag_bits, state.key_length)
    tag = toeplitz_hash(x, tag_seed, state.tag_bits)
    if state.key_length:
        state.hash_choice = ToeplitzExtractor(spec.N, state.key_length, ext_seed)
    msg = ReconcileMessage(ct=ct, verify_tag=tag, extractor_seed=nonce)
    state.transcript.append(msg)
    return msg, x


def bob_round(state: BobState, msg: ReconcileMessage) -> tuple[np.ndarray, bool]:
    """Recover Alice's X^N from the message and the noisy copy.

    Z = ct xor Y^N carries the codeword through the same error pattern the
    channel applied to the key; decoding and re-masking yields the
    candidate, which is checked against the transmitted tag.  An empty tag
    verifies vacuously.
    """
    spec = state.spec
    state.transcript.append(msg)
    z = msg.ct ^ state.reconcile_bits
    u_hat = sc_decode(channel_llr(z, state.channel), spec)
    x_tilde = encode(u_hat, spec) ^ msg.ct
    tag_bits = int(msg.verify_tag.size)
    if tag_bits == 0:
        return x_tilde, True
    tag_seed, _ = expand_session_seeds(msg.extractor_seed, spec.N, tag_bits, 0)
    verified = bool(np.array_equal(toeplitz_hash(x_tilde, tag_seed, tag_bits), msg.verify_tag))
    return x_tilde, verified


def _code_for(n: int, K: int, p: float, rs_kind: str = BSC) -> tuple[PolarCodeSpec, ChannelParams]:
    # rs_kind picks the ordering the frozen set comes from; transmission is
    # always over the bit-flip channel at p.
    params = ChannelParams(kind=BSC, p=p)
    profile = cached_reliability_sequence(rs_kind, p, n)
    return select_frozen(profile, K), params


def _trial_material(N: int, e: int, K: int, p: float, seed: int, trial: int):
    """All random inputs of one (seed, trial) session, drawn stream by stream."""
    key_rng = derived_rng(seed, KEY_STREAM, trial)
    x = key_rng.integers(0, 2, size=N + e, dtype=np.uint8)
    noise_rng = derived_rng(seed, NOISE_STREAM, trial)
    flips = (noise_rng.random(N + e) < p).astype(np.uint8)
    proto_rng = derived_rng(seed, PROTOCOL_STREAM, trial)
    return x, x ^ flips, proto_rng


def run_protocol(n: int, K: int, p: float, seed: int, mode: str = MODE_FULL, *,
                 e: int | None = None, eps_cor: float = 0.05,
                 eps_sec: float = 0.5e-10, trial: int = 0,
                 rs_kind: str = BSC) -> ProtocolOutcome:
    """Execute one end-to-end session and report what the harness needs.

    Full mode sacrifices e bits (default round(N/3)) for the error-rate
    estimate, verifies with a tag of ceil(log2(1/eps_cor)) bits, and
    extracts whatever the finite-key arithmetic allows.  The other mode
    skips estimation, tag, and extraction; its verified flag mirrors the
    ground-truth comparison.
    """
    if mode not in (MODE_FULL, MODE_NAKASSIS_MINK):
        raise ValueError(f"unknown mode {mode!r}")
    full = mode == MODE_FULL
    spec, params = _code_for(n, K, p, rs_kind)
    N = spec.N
    if e is None:
        e = round(N / 3) if full else 0
    x_all, y_all, proto_rng = _trial_material(N, e, K, p, seed, trial)

    qber_est = None
    key_len = 0
    if full and e > 0:
        qber_est = measure_qber(x_all[N:], y_all[N:])
        key_len = secret_key_length(default_budget(N, K, qber_est, eps_cor, eps_sec, e=e))

    alice = make_alice(x_all, spec, proto_rng, eps_cor=eps_cor,
                       tag_bits=None if full else 0, key_length=key_len)
    bob = make_bob(y_all, spec, params)
    msg, x_n = alice_round(alice)
    x_tilde, verified = bob_round(bob, msg)
    agreed = bool(np.array_equal(x_n, x_tilde))
    if not full:
        verified = agreed

    alice_secret = bob_secret = None
    if key_len:
        alice_secret = extract(x_n, alice.hash_choice)
        if verified:
            bob_secret = extract(x_tilde, alice.hash_choice)

    leak = (N - K) + (alice.tag_bits if full else 0)
    return ProtocolOutcome(agreed=agreed, verified=verified, leak_bits=leak,
                           qber_estimate=qber_est, key_length=key_len,
                           alice_secret=alice_secret, bob_secret=bob_secret)


@dataclass(frozen=True)
class SessionBatch:
    """Per-trial outcomes of a batched run, aligned by trial index."""

    agreed: np.ndarray
    verified: np.ndarray
    leak_bits: int

    @property
    def trials(self) -> int:
        return self.agreed.size

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(~self.agreed))

    @property
    def false_accepts(self) -> int:
        return int(np.count_nonzero(self.verified & ~self.agreed))


def run_sessions(n: int, K: int, p: float, seed: int, trials: int,
                 mode: str = MODE_FULL, *, e: int | None = None,
                 eps_cor: float = 0.05, chunk: int = 32,
                 rs_kind: str = BSC) -> SessionBatch:
    """Many independent sessions sharing one vectorized decode.

    Reproduces :func:`run_protocol` trial by trial (same seed derivation,
    same draws) while decoding in chunks; extraction is skipped since only
    agreement and verification statistics feed the experiment harness.
    """
    if mode not in (MODE_FULL, MODE_NAKASSIS_MINK):
        raise ValueError(f"unknown mode {mode!r}")
    full = mode == MODE_FULL
    spec, params = _code_for(n, K, p, rs_kind)
    N = spec.N
    if e is None:
        e = round(N / 3) if full else 0
    tag_bits = tag_length(eps_cor) if full else 0

    x_rows = np.empty((trials, N), dtype=np.uint8)
    ct_rows = np.empty((trials, N), dtype=np.uint8)
    z_rows = np.empty((trials, N), dtype=np.uint8)
    nonces = []
    for t in range(trials):
        x_all, y_all, proto_rng = _trial_material(N, e, K, p, seed, t)
        info = proto_rng.integers(0, 2, size=K, dtype=np.uint8)
        nonces.append(proto_rng.bytes(_SEED_NONCE_BYTES))
        w = encode(assemble_message(info, spec), spec)
        x_rows[t] = x_all[:N]
        ct_rows[t] = w ^ x_all[:N]
        z_rows[t] = ct_rows[t] ^ y_all[:N]

    agreed = np.empty(trials, dtype=bool)
    verified = np.empty(trials, dtype=bool)
    for start in range(0, trials, chunk):
        stop = min(start + chunk, trials)
        u_hat = sc_decode(channel_llr(z_rows[start:stop], params), spec)
        x_tilde = encode(u_hat, spec) ^ ct_rows[start:stop]
        agreed[start:stop] = np.all(x_tilde == x_rows[start:stop], axis=1)
        for i in range(start, stop):
            if tag_bits == 0:
                verified[i] = agreed[i]
                continue
            tag_seed, _ = expand_session_seeds(nonces[i], N, tag_bits, 0)
            sent = toeplitz_hash(x_rows[i], tag_seed, tag_bits)
            got = toeplitz_hash(x_tilde[i - start], tag_seed, tag_bits)
            verified[i] = bool(np.array_equal(sent, got))

    leak = (N - K) + (tag_bits if full else 0)
    return SessionBatch(agreed=agreed, verified=verified, leak_bits=leak)


def encode_message(msg: ReconcileMessage, n: int, K: int, eps_cor: float) -> bytes:
    """Serialize to the length-prefixed JSON wire envelope."""
    body = {
        "ct": base64.b64encode(pack_bits(msg.ct)).decode("ascii"),
        "tag": base64.b64encode(pack_bits(msg.verify_tag)).decode("ascii"),
        "seed": base64.b64encode(msg.extractor_seed).decode("ascii"),
        "params": {"n": n, "K": K, "epsilon_cor": eps_cor},
    }
    payload = json.dumps(body, sort_keys=True, separators=(",", ":")).encode("ascii")
    return struct.pack(">I", len(payload)) + payload


def decode_message(data: bytes) -> tuple[ReconcileMessage, dict]:
    """Parse the wire envelope; returns the message and its params block."""
    if len(data) < 4:
        raise ValueError("truncated envelope")
    (length,) = struct.unpack(">I", data[:4])
    if len(data) != 4 + length:
        raise ValueError(f"envelope length {length} does not match payload {len(data) - 4}")
    body = json.loads(data[4:].decode("ascii"))
    params = body["params"]
    N = 1 << int(params["n"])
    ct = unpack_bits(base64.b64decode(body["ct"]), N)
    tag_raw = base64.b64decode(body["tag"])
    nbits = tag_length(float(params["epsilon_cor"])) if tag_raw else 0
    tag = unpack_bits(tag_raw, nbits)
    seed = base64.b64decode(body["seed"])
    return ReconcileMessage(ct=ct, verify_tag=tag, extractor_seed=seed), params


class LoopbackTransport:
    """In-process FIFO standing in for the authenticated classical channel."""

    def __init__(self):
        self._queue = deque()

    def send(self, data: bytes) -> None:
        self._queue.append(bytes(data))

    def recv(self) -> bytes:
        if not self._queue:
            raise LookupError("no message pending")
        return self._queue.popleft()
