"""Construction-module tests: recursion vs explicit channel enumeration."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarqkd import construct
from polarqkd.construct import (
    BEC,
    BSC,
    ChannelParams,
    PolarCodeSpec,
    cached_reliability_sequence,
    order_overlap,
    polarize_step_bec,
    polarize_step_bsc,
    reliability_sequence,
    root_z,
    rs_overlap,
    select_frozen,
)

import helpers

# Single-step outputs at p = 0.1, frozen from the enumeration oracle.
N1_BSC_01 = [0.7683749084919419, 0.36]
# Two-step recursion leaves at p = 0.1 (what the constructor computes).
N2_REC_BSC_01 = [0.9122652245920593, 0.5904, 0.49234524472162833, 0.1296]
# Two-step true values by enumeration; index 2 differs from the recursion.
N2_TRUE_BSC_01 = [0.9122652245920595, 0.5904000000000001, 0.5338080502793235, 0.1296]
N2_BEC_025 = [0.68359375, 0.19140625, 0.12109375, 0.00390625]


def test_root_z_values():
    assert root_z(ChannelParams(BSC, 0.1)) == pytest.approx(0.6, abs=1e-15)
    assert root_z(ChannelParams(BSC, 0.0)) == 0.0
    assert root_z(ChannelParams(BSC, 0.5)) == pytest.approx(1.0, abs=1e-15)
    assert root_z(ChannelParams(BEC, 0.37)) == 0.37


def test_one_step_bsc_frozen():
    zm, zp = polarize_step_bsc(0.6)
    assert zm == pytest.approx(N1_BSC_01[0], abs=1e-12)
    assert zp == pytest.approx(N1_BSC_01[1], abs=1e-12)


@pytest.mark.parametrize("p", [0.05, 0.1, 0.25])
def test_single_step_matches_enumeration_bsc(p):
    W, alphabet = helpers.bsc_w(p)
    truth = helpers.all_split_z(1, W, alphabet)
    leaves = reliability_sequence(ChannelParams(BSC, p), 1).z
    assert np.allclose(leaves, truth, atol=1e-10, rtol=0)


@pytest.mark.parametrize("eps", [0.05, 0.25, 0.5])
def test_two_steps_match_enumeration_bec(eps):
    # The erasure channel stays an erasure channel under both transforms,
    # so the scalar recursion is exact at every depth.
    W, alphabet = helpers.bec_w(eps)
    truth = helpers.all_split_z(2, W, alphabet)
    leaves = reliability_sequence(ChannelParams(BEC, eps), 2).z
    assert np.allclose(leaves, truth, atol=1e-12, rtol=0)


def test_two_step_bec_frozen():
    leaves = reliability_sequence(ChannelParams(BEC, 0.25), 2).z
    assert np.allclose(leaves, N2_BEC_025, atol=1e-15, rtol=0)


def test_two_step_bsc_recursion_vs_truth():
    """The recursion is exact except after an upgrade-then-degrade path.

    Degrading a bit-flip channel yields another bit-flip channel, so any
    all-degrade prefix stays exact; the upgraded channel is not a bit-flip
    channel, and degrading it afterwards makes the scalar recursion an
    approximation.  Both the recursion's own output and the enumerated
    truth are pinned here so any drift in either is caught.
    """
    leaves = reliability_sequence(ChannelParams(BSC, 0.1), 2).z
    assert np.allclose(leaves, N2_REC_BSC_01, atol=1e-12, rtol=0)
    W, alphabet = helpers.bsc_w(0.1)
    truth = helpers.all_split_z(2, W, alphabet)
    assert np.allclose(truth, N2_TRUE_BSC_01, atol=1e-9, rtol=0)
    for idx in (0, 1, 3):
        assert leaves[idx] == pytest.approx(truth[idx], abs=1e-10)
    assert truth[2] - leaves[2] > 0.04


@given(st.floats(0.0, 1.0))
def test_step_bsc_bounds(z):
    zm, zp = polarize_step_bsc(z)
    assert 0.0 <= zp <= z <= zm <= 1.0 + 1e-12


@given(st.floats(0.0, 1.0))
def test_step_bec_conservation(z):
    zm, zp = polarize_step_bec(z)
    assert 0.0 <= zp <= z <= zm <= 1.0
    assert (zm + zp) / 2 == pytest.approx(z, abs=1e-12)


def test_step_domain_errors():
    for fn in (polarize_step_bsc, polarize_step_bec):
        with pytest.raises(ValueError):
            fn(-0.01)
        with pytest.raises(ValueError):
            fn(1.01)


def test_order_sorted_by_reliability():
    prof = reliability_sequence(ChannelParams(BSC, 0.08), 8)
    assert np.array_equal(np.sort(prof.order), np.arange(prof.N))
    assert np.all(np.diff(prof.z[prof.order]) >= 0)


def test_degenerate_channels():
    perfect = reliability_sequence(ChannelParams(BSC, 0.0), 4)
    assert np.all(perfect.z == 0.0)
    # all-equal reliabilities break ties toward lower indices
    assert np.array_equal(perfect.order, np.arange(16))
    useless = reliability_sequence(ChannelParams(BSC, 0.5), 4)
    assert np.allclose(useless.z, 1.0, atol=1e-12)


def test_log_domain_survives_deep_recursion():
    prof = reliability_sequence(ChannelParams(BSC, 0.08), 16)
    assert np.all(np.isfinite(prof.log_z) | (prof.log_z == -np.inf))
    assert not np.any(np.isnan(prof.z))
    assert np.all((prof.z >= 0.0) & (prof.z <= 1.0))
    # polarization: a good fraction of channels are already near-perfect
    assert np.count_nonzero(prof.z < 1e-9) > prof.N // 4
    assert np.count_nonzero(prof.z > 1 - 1e-9) > prof.N // 8


def test_log_matches_linear_recursion_where_representable():
    p = 0.11
    levels = [np.array([root_z(ChannelParams(BSC, p))])]
    for _ in range(8):
        prev = levels[-1]
        nxt = np.empty(2 * prev.size)
        for i, z in enumerate(prev):
            nxt[2 * i], nxt[2 * i + 1] = polarize_step_bsc(float(z))
        levels.append(nxt)
    linear = levels[-1]
    prof = reliability_sequence(ChannelParams(BSC, p), 8)
    mask = linear > 1e-250
    assert np.allclose(prof.z[mask], linear[mask], rtol=1e-9, atol=1e-300)


def test_select_frozen_partition():
    prof = reliability_sequence(ChannelParams(BSC, 0.1), 5)
    spec = select_frozen(prof, 12)
    assert spec.K == 12 and spec.N == 32
    assert np.array_equal(np.sort(np.concatenate([spec.info, spec.frozen])), np.arange(32))
    assert np.all(spec.frozen_values == 0)
    assert spec.rate == pytest.approx(12 / 32)
    # info positions are the most reliable ones
    assert set(spec.info.tolist()) == set(prof.order[:12].tolist())
    for K in (0, 32):
        s = select_frozen(prof, K)
        assert s.K == K and s.frozen.size == 32 - K
    with pytest.raises(ValueError):
        select_frozen(prof, 33)
    with pytest.raises(ValueError):
        select_frozen(prof, -1)


def test_spec_validation():
    with pytest.raises(ValueError):
        PolarCodeSpec(n=2, N=4, K=2,
                      frozen=np.array([0, 0]), frozen_values=np.zeros(2, np.uint8),
                      info=np.array([2, 3]))
    with pytest.raises(ValueError):
        PolarCodeSpec(n=2, N=5, K=2,
                      frozen=np.array([0, 1]), frozen_values=np.zeros(2, np.uint8),
                      info=np.array([2, 3]))


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(BSC, 0.51)
    with pytest.raises(ValueError):
        ChannelParams(BSC, -0.1)
    with pytest.raises(ValueError):
        ChannelParams(BEC, 1.5)
    with pytest.raises(ValueError):
        ChannelParams("awgn", 0.1)
    ChannelParams(BEC, 0.9)  # erasure probability beyond 1/2 is meaningful


def test_cached_sequences_are_shared():
    a = cached_reliability_sequence(BSC, 0.1, 6)
    b = cached_reliability_sequence(BSC, 0.1, 6)
    assert a is b
    assert not a.order.flags.writeable


def test_profile_json_roundtrip(tmp_path):
    prof = reliability_sequence(ChannelParams(BEC, 0.3), 6)
    back = construct.profile_from_json(construct.profile_to_json(prof))
    assert back.params == prof.params and back.n == prof.n
    assert np.array_equal(back.order, prof.order)
    assert np.allclose(back.log_z, prof.log_z, equal_nan=True)
    path = tmp_path / "profile.json"
    construct.write_profile(path, prof)
    again = construct.read_profile(path)
    assert np.array_equal(again.order, prof.order)
    doc = json.loads(path.read_text())
    assert set(doc) == {"kind", "p", "n", "order", "log_z"}


def test_sequence_file_roundtrip(tmp_path):
    prof = reliability_sequence(ChannelParams(BSC, 0.2), 4)
    path = tmp_path / "order.txt"
    construct.write_sequence(path, prof.order)
    assert np.array_equal(construct.read_sequence(path), prof.order)


def test_order_overlap_basics():
    order = np.arange(8)
    assert order_overlap(order, order, 0.25) == 1.0
    flipped = order[::-1]
    # worst-2 sets are {6,7} vs {0,1}: disjoint
    assert order_overlap(order, flipped, 0.25) == 0.0
    prof = reliability_sequence(ChannelParams(BSC, 0.1), 3)
    assert rs_overlap(prof, prof.order, 0.25) == 1.0
    with pytest.raises(ValueError):
        order_overlap(order, np.zeros(8, dtype=int), 0.25)
    with pytest.raises(ValueError):
        order_overlap(order, order, 1.5)


def test_bsc_bec_orderings_mostly_agree():
    # Different channel families, same polarization skeleton: the worst
    # quarter of positions should overlap heavily at matched parameters.
    a = reliability_sequence(ChannelParams(BSC, 0.05), 10)
    b = reliability_sequence(ChannelParams(BEC, 0.05), 10)
    assert rs_overlap(a, b.order, 0.25) > 0.8


@settings(max_examples=30)
@given(st.integers(1, 7), st.floats(0.01, 0.49))
def test_reliability_profile_shapes(n, p):
    prof = reliability_sequence(ChannelParams(BSC, p), n)
    assert prof.N == 1 << n
    assert prof.z.shape == (prof.N,)
    assert np.array_equal(np.sort(prof.order), np.arange(prof.N))
