import numpy as np
import pytest
from scipy.spatial.distance import cdist

from lsdsymnmf.graph import (
    build_slices,
    combine,
    correct_rate,
    gaussian_kernel,
    k0_for,
    neighbor_order,
    self_tuning_kernel,
    slice_scores,
    slices_from_data,
)
from oracles import dense_slices, knn_slices_bruteforce


def test_kernel_identical_points_give_one():
    X = np.array([[0.0, 1.0], [0.0, 1.0], [3.0, 2.0], [5.0, 5.0], [1.0, 7.0]])
    K = self_tuning_kernel(X, scale_rank=2)
    assert K[0, 1] == pytest.approx(1.0)
    assert np.all(np.diag(K) == 1.0)


def test_kernel_symmetric_and_in_unit_interval():
    X = np.random.default_rng(0).normal(size=(10, 3))
    K = self_tuning_kernel(X, scale_rank=7)
    np.testing.assert_array_equal(K, K.T)
    assert np.all(K > 0) and np.all(K <= 1)


def test_kernel_hand_value_on_line():
    X = np.arange(9.0)[:, None]
    K = self_tuning_kernel(X, scale_rank=7)
    # sigma_0 = 7 and sigma_1 = 6
    assert K[0, 1] == pytest.approx(np.exp(-1.0 / 42.0), rel=1e-14)
    assert K[0, 8] == pytest.approx(np.exp(-64.0 / (7 * 7)), rel=1e-14)


def test_kernel_matches_bruteforce_oracle():
    X = np.random.default_rng(1).normal(size=(12, 2))
    K_ref, _ = knn_slices_bruteforce(X, scale_rank=4)
    np.testing.assert_allclose(self_tuning_kernel(X, scale_rank=4), K_ref, rtol=1e-12)


def test_kernel_log_domain_agrees():
    X = np.random.default_rng(2).normal(size=(15, 3))
    np.testing.assert_allclose(np.exp(self_tuning_kernel(X, log=True)), self_tuning_kernel(X), rtol=1e-14)


def test_kernel_zero_scales_replaced():
    X = np.array([[0.0], [0.0], [0.0], [1.0], [3.0]])
    K = self_tuning_kernel(X, scale_rank=2)
    # the duplicates have sigma 0, replaced by the smallest positive sigma (1)
    assert np.all(np.isfinite(K))
    assert K[0, 3] == pytest.approx(np.exp(-1.0))


def test_kernel_all_duplicates_rejected():
    with pytest.raises(ValueError, match="degenerate dataset"):
        self_tuning_kernel(np.ones((5, 2)), scale_rank=2)


@pytest.mark.parametrize("n, rank", [(3, 3), (7, 7)])
def test_kernel_needs_enough_samples(n, rank):
    with pytest.raises(ValueError, match="scale_rank"):
        self_tuning_kernel(np.random.default_rng(0).normal(size=(n, 2)), scale_rank=rank)


def test_kernel_rejects_nonfinite():
    X = np.zeros((9, 2))
    X[3, 1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        self_tuning_kernel(X)


def test_gaussian_kernel_value():
    K = gaussian_kernel(np.array([[0.0], [2.0]]), sigma=2.0)
    assert K[0, 1] == pytest.approx(np.exp(-1.0))
    with pytest.raises(ValueError):
        gaussian_kernel(np.zeros((3, 1)), 0.0)


def test_slices_three_collinear_points():
    X = np.array([[0.0], [1.0], [3.0]])
    K = gaussian_kernel(X, sigma=1.0)
    sl = build_slices(K)
    support = lambda k: {(i, int(sl.cols[k, i])) for i in range(3)}
    assert support(0) == {(0, 1), (1, 0), (2, 1)}
    assert support(1) == {(0, 2), (1, 2), (2, 0)}


def test_slices_match_bruteforce_order():
    X = np.random.default_rng(3).normal(size=(11, 2))
    K_ref, order = knn_slices_bruteforce(X, scale_rank=3)
    sl = build_slices(self_tuning_kernel(X, scale_rank=3), normalize=False)
    np.testing.assert_array_equal(sl.cols, order)
    np.testing.assert_allclose(sl.vals, K_ref[np.arange(11)[None, :], order], rtol=1e-12)


def test_slice_invariants():
    X = np.random.default_rng(4).normal(size=(20, 3))
    sl = slices_from_data(X)
    dense = dense_slices(sl)
    assert sl.K == 19
    for k, A in enumerate(dense):
        assert np.count_nonzero(A) == 20
        assert np.all(np.diag(A) == 0)
        assert np.all(A >= 0)
        assert np.linalg.norm(A) == pytest.approx(1.0, abs=1e-12)
    G = np.array([[np.sum(a * b) for b in dense] for a in dense])
    np.testing.assert_allclose(G, np.eye(sl.K), atol=1e-15)


def test_data_slices_rank_by_distance():
    X = np.random.default_rng(14).normal(size=(13, 2))
    K_ref, order = knn_slices_bruteforce(X, scale_rank=7, by="distance")
    sl = slices_from_data(X)
    np.testing.assert_array_equal(sl.cols, order)
    raw = K_ref[np.arange(13)[None, :], order]
    np.testing.assert_allclose(sl.raw_vals(), raw, rtol=1e-12)


def test_slice_order_follows_kernel_values():
    X = np.random.default_rng(5).normal(size=(25, 2))
    sl = build_slices(self_tuning_kernel(X), normalize=False)
    assert np.all(np.diff(sl.vals, axis=0) <= 0)


def test_ties_go_to_smaller_index():
    K = np.array([[1.0, 0.5, 0.5, 0.5], [0.5, 1.0, 0.2, 0.2], [0.5, 0.2, 1.0, 0.2], [0.5, 0.2, 0.2, 1.0]])
    order = neighbor_order(K)
    np.testing.assert_array_equal(order[0], [1, 2, 3])
    np.testing.assert_array_equal(order[1], [0, 2, 3])
    np.testing.assert_array_equal(order[3], [0, 1, 2])


def test_log_domain_slices_survive_underflow():
    X = np.concatenate([np.random.default_rng(6).normal(size=(30, 2)), [[1e3, 1e3]]])
    with pytest.raises(ValueError, match="degenerate kernel"):
        build_slices(self_tuning_kernel(X))
    sl = slices_from_data(X)
    np.testing.assert_allclose(sl.sq_norms, 1.0, rtol=1e-12)
    ref = build_slices(self_tuning_kernel(X[:30]))
    assert ref.K == 29


def test_log_domain_matches_linear_when_no_underflow():
    X = np.random.default_rng(7).normal(size=(18, 2))
    a = build_slices(self_tuning_kernel(X), dist=cdist(X, X))
    b = slices_from_data(X)
    np.testing.assert_array_equal(a.cols, b.cols)
    np.testing.assert_allclose(a.vals, b.vals, rtol=1e-12)
    np.testing.assert_allclose(a.frob_norms, b.frob_norms, rtol=1e-12)


def test_build_slices_validates():
    with pytest.raises(ValueError, match="square"):
        build_slices(np.ones((3, 4)))
    with pytest.raises(ValueError, match="nonnegative"):
        build_slices(-np.ones((3, 3)))
    with pytest.raises(ValueError, match="degenerate kernel"):
        build_slices(np.eye(4))


def test_combine_unit_vector_gives_slice():
    sl = slices_from_data(np.random.default_rng(8).normal(size=(12, 2)))
    e = np.zeros(sl.K)
    e[4] = 1.0
    np.testing.assert_array_equal(combine(sl, e).toarray(), sl.slice_matrix(4).toarray())


def test_combine_pythagoras():
    sl = slices_from_data(np.random.default_rng(9).normal(size=(12, 2)))
    w = np.zeros(sl.K)
    w[:2] = (0.3, 0.7)
    assert np.linalg.norm(combine(sl, w).toarray()) ** 2 == pytest.approx(0.58, abs=1e-12)


def test_combine_unnormalized_uniform_is_knn_graph():
    X = np.random.default_rng(10).normal(size=(16, 2))
    K = self_tuning_kernel(X)
    sl = build_slices(K, normalize=False, dist=cdist(X, X))
    k0 = k0_for(16)
    w = np.zeros(sl.K)
    w[:k0] = 1.0 / k0
    S0 = np.zeros((16, 16))
    for i in range(16):
        # k0 nearest other samples by distance
        d = np.linalg.norm(X - X[i], axis=1)
        d[i] = np.inf
        for j in np.argsort(d)[:k0]:
            S0[i, j] = K[i, j]
    np.testing.assert_allclose(combine(sl, w).toarray(), S0 / k0, rtol=1e-12)


def test_combine_is_linear():
    rng = np.random.default_rng(11)
    sl = slices_from_data(rng.normal(size=(10, 2)))
    w1, w2 = rng.normal(size=(2, sl.K))
    lhs = combine(sl, 2.0 * w1 - 0.5 * w2).toarray()
    rhs = 2.0 * combine(sl, w1).toarray() - 0.5 * combine(sl, w2).toarray()
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_combine_length_mismatch():
    sl = slices_from_data(np.random.default_rng(12).normal(size=(10, 2)))
    with pytest.raises(ValueError, match="does not match"):
        combine(sl, np.ones(sl.K + 1))


def test_slice_scores_against_dense():
    rng = np.random.default_rng(13)
    sl = slices_from_data(rng.normal(size=(14, 2)))
    V = rng.uniform(size=(14, 3))
    ref = [np.sum(A * (V @ V.T)) for A in dense_slices(sl)]
    np.testing.assert_allclose(slice_scores(sl, V), ref, rtol=1e-12)
    np.testing.assert_allclose(slice_scores(sl, V, chunk_entries=1), ref, rtol=1e-12)


def test_correct_rate_examples():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    sl = build_slices(gaussian_kernel(X, 5.0))
    np.testing.assert_allclose(correct_rate(sl, np.array([0, 0, 1, 1]))[:2], [1.0, 0.0])
    np.testing.assert_array_equal(correct_rate(sl, np.zeros(4, int)), 1.0)
    np.testing.assert_array_equal(correct_rate(sl, np.arange(4)), 0.0)


@pytest.mark.parametrize("n, k0", [(2, 2), (210, 8), (256, 9), (400, 9), (1023, 10), (1024, 11)])
def test_k0(n, k0):
    assert k0_for(n) == k0
