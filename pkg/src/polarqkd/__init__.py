"""Polar-code information reconciliation and privacy amplification.

A numpy library for the one-way key-agreement pipeline: code construction
from channel reliability, encoding and successive-cancellation decoding,
reconciliation sessions with hash verification, finite-key length
arithmetic, seeded extraction, and a reproducible experiment harness.
"""

from .channel import ERASURE, ChannelInstance, measure_qber
from .codec import (
    bit_reversal_permute,
    channel_llr,
    encode,
    assemble_message,
    message_bits,
    polar_transform,
    sc_decode,
    sc_genie_errors,
)
from .construct import (
    BEC,
    BSC,
    ChannelParams,
    PolarCodeSpec,
    ReliabilityProfile,
    cached_reliability_sequence,
    order_overlap,
    polarize_step_bec,
    polarize_step_bsc,
    reliability_sequence,
    root_z,
    rs_overlap,
    select_frozen,
)
from .harness import (
    ResultRow,
    SweepConfig,
    estimate_fer,
    max_info_bits_at_qber,
    max_qber_at_rate,
    sweep,
    wilson_interval,
)
from .protocol import (
    MODE_FULL,
    MODE_NAKASSIS_MINK,
    ProtocolOutcome,
    ReconcileMessage,
    alice_round,
    bob_round,
    decode_message,
    encode_message,
    make_alice,
    make_bob,
    run_protocol,
    run_sessions,
)
from .secrecy import (
    SecrecyBudget,
    ToeplitzExtractor,
    binary_entropy,
    default_budget,
    efficiency,
    extract,
    infinite_key_rate,
    info_bits_for_efficiency,
    key_length_bound,
    key_length_bound_chained,
    mu,
    secrecy_content_gamma,
    secret_key_length,
    tag_length,
    toeplitz_hash,
)

__version__ = "0.1.0"
