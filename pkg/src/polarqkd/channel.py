"""Channel simulation with counter-based, replayable randomness.

Every noise draw is keyed by (seed, stream, nonce) through a Philox
generator, so any single transmission in a long experiment can be
regenerated in isolation without replaying the draws before it.  Stream 0
is reserved for channel noise; higher streams are free for protocol-side
randomness that must not correlate with the noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construct import BEC, BSC, ChannelParams

__all__ = ["ERASURE", "ChannelInstance", "measure_qber"]

# Marker value for erased positions in erasure-channel output; kept distinct
# from any bit value so downstream code fails loudly if it forgets to check.
ERASURE = 2

NOISE_STREAM = 0
PROTOCOL_STREAM = 1


def derived_rng(seed: int, stream: int, nonce: int) -> np.random.Generator:
    """Generator for one (seed, stream, nonce) cell of the key space."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(stream, nonce))))


@dataclass(frozen=True)
class ChannelInstance:
    """A reusable channel keyed by a seed; each use is indexed by a nonce."""

    params: ChannelParams
    seed: int
    stream: int = NOISE_STREAM

    def transmit(self, bits: np.ndarray, nonce: int = 0) -> np.ndarray:
        """Flip each bit independently with probability p (BSC only)."""
        if self.params.kind != BSC:
            raise ValueError("transmit models bit flips; use transmit_erasure for the erasure kind")
        bits = np.asarray(bits, dtype=np.uint8)
        rng = derived_rng(self.seed, self.stream, nonce)
        flips = (rng.random(bits.shape) < self.params.p).astype(np.uint8)
        return bits ^ flips

    def transmit_erasure(self, bits: np.ndarray, nonce: int = 0) -> np.ndarray:
        """Erase each position independently with probability p (BEC only).

        Erased positions carry the value ``ERASURE``.
        """
        if self.params.kind != BEC:
            raise ValueError("transmit_erasure requires the erasure kind")
        bits = np.asarray(bits, dtype=np.uint8)
        rng = derived_rng(self.seed, self.stream, nonce)
        out = bits.copy()
        out[rng.random(bits.shape) < self.params.p] = ERASURE
        return out


def measure_qber(a: np.ndarray, b: np.ndarray) -> float:
    """Observed disagreement fraction between two bit strings."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError("strings must have matching shapes")
    if a.size == 0:
        raise ValueError("cannot measure disagreement of empty strings")
    return float(np.mean(a != b))
