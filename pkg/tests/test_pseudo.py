import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tkgalign.decoder import DecoderConfig
from tkgalign.kg import SeedOrigin
from tkgalign.pseudo import bidirectional_scores, generate_pseudo_seeds, mutual_argmax_seeds
from tkgalign.synthetic import generate_synthetic
from tkgalign.temporal import build_relational_adjacency, build_time_counts, encode_temporal, softmax_blocks

from conftest import PRINTED_PT, shuffled_copy


def test_identical_features_give_transposed_scores():
    H = np.random.default_rng(0).random((8, 6))
    fwd, bwd = bidirectional_scores(H, H)
    # the Gram is symmetric, so both directions run on the same input
    np.testing.assert_array_equal(fwd.scores, bwd.scores)
    # and once scaling has converged the result is symmetric too
    fwd, bwd = bidirectional_scores(H, H, DecoderConfig(sinkhorn_temperature=1.0))
    np.testing.assert_allclose(fwd.scores, bwd.scores.T, atol=1e-9)


def test_example_raw_gram_is_printed_matrix(example):
    At = softmax_blocks(build_time_counts(example))[:, :5]
    Ht = np.hstack([At, build_relational_adjacency(example) @ At])
    np.testing.assert_allclose(Ht @ Ht.T, PRINTED_PT, atol=0.01)


def test_row_permuted_copy_recovered():
    rng = np.random.default_rng(1)
    H = rng.random((12, 20))
    perm = rng.permutation(12)
    moved = np.empty_like(H)
    moved[perm] = H  # source i lands at target perm[i]
    fwd, _ = bidirectional_scores(H, moved, DecoderConfig(sinkhorn_temperature=0.01))
    assert np.array_equal(fwd.core.argmax(1), perm)


def test_identity_dominant_inputs():
    M = np.eye(5) + 0.1
    seeds = mutual_argmax_seeds(M, M)
    assert seeds.pairs.tolist() == [[i, i] for i in range(5)]
    assert seeds.origin is SeedOrigin.PSEUDO


def test_non_mutual_pair_excluded():
    # source 0 prefers target 1, but target 1 prefers source 2
    P_st = np.array([[0.1, 0.8, 0.1], [0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
    P_ts = np.array([[0.1, 0.8, 0.1], [0.1, 0.2, 0.7], [0.2, 0.1, 0.7]])
    seeds = mutual_argmax_seeds(P_st, P_ts)
    assert (0, 1) not in seeds.as_set()
    assert seeds.as_set() == {(1, 0), (2, 2)}


def test_ties_disqualify():
    P = np.array([[0.5, 0.5], [0.1, 0.9]])
    seeds = mutual_argmax_seeds(P, P.T)
    assert seeds.as_set() == {(1, 1)}


def test_example_graph_fully_matched_against_itself(example):
    enc = encode_temporal(example)
    seeds = generate_pseudo_seeds(enc.feature, enc.feature)
    assert seeds.as_set() == {(i, i) for i in range(6)}  # Japan (4) included


def test_example_graph_against_shuffled_copy(example):
    copy, truth = shuffled_copy(example, 3)
    seeds = generate_pseudo_seeds(encode_temporal(example).feature, encode_temporal(copy).feature)
    assert seeds.as_set() == truth.as_set()


def test_self_alignment_precision():
    b = generate_synthetic(150, 8, 40, rng_seed=2)
    seeds = generate_pseudo_seeds(encode_temporal(b.source).feature, encode_temporal(b.target).feature)
    assert len(seeds) > 0 and seeds.as_set() <= b.test_pairs.as_set()


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)),
              elements=st.sampled_from([0.0, 0.25, 0.5, 1.0])))
def test_output_always_injective(M):
    seeds = mutual_argmax_seeds(M, M.T)
    assert seeds.is_injective()


def test_deterministic():
    H1, H2 = np.random.default_rng(4).random((2, 10, 7))
    a, b = generate_pseudo_seeds(H1, H2), generate_pseudo_seeds(H1, H2)
    assert np.array_equal(a.pairs, b.pairs)
