import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from xlearn.core import (
    LossOracle,
    RngStreams,
    Trace,
    ROLE_NONE,
    best_fixed_policy,
    realized_regret,
    sample_categorical,
    softmax_weights,
    validate_simplex,
)
from xlearn.oracle import grid_argmin_ftrl


def tensor_oracle(tensor):
    tensor = np.asarray(tensor, dtype=float)
    T, C, K = tensor.shape
    return LossOracle(T, C, K, lambda t0, t1: tensor[t0:t1], chunk_size=3)


def make_trace(contexts, actions, C, K):
    T = len(contexts)
    return Trace(
        T=T,
        C=C,
        K=K,
        contexts=np.asarray(contexts),
        actions=np.asarray(actions),
        fallback=np.zeros(T, bool),
        keep=np.full(T, -1, np.int8),
        role=np.full(T, ROLE_NONE, np.int8),
        epoch=np.zeros(T, np.int32),
        p_played=np.full((T, K), 1.0 / K),
        q_played=np.full((T, K), 1.0 / K),
    )


class TestSoftmax:
    def test_symmetric(self):
        np.testing.assert_allclose(softmax_weights([0, 0], 1.0), [0.5, 0.5], atol=1e-15)

    def test_closed_form(self):
        np.testing.assert_allclose(softmax_weights([0, math.log(2)], 1.0), [2 / 3, 1 / 3], atol=1e-15)

    def test_base_identity(self):
        np.testing.assert_allclose(softmax_weights([0, 0], 1.0, base=[0.8, 0.2]), [0.8, 0.2], atol=1e-15)

    def test_matches_grid_argmin(self):
        p = softmax_weights([1.3, 0.2, 2.7], 0.5)
        g = grid_argmin_ftrl([1.3, 0.2, 2.7], 0.5, step=0.005)
        assert np.max(np.abs(p - g)) <= 0.01

    @pytest.mark.parametrize("bad", [[np.nan, 0.0], [np.inf, 0.0]])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            softmax_weights(bad, 1.0)

    def test_bad_eta_and_base(self):
        with pytest.raises(ValueError):
            softmax_weights([0, 0], 0.0)
        with pytest.raises(ValueError):
            softmax_weights([0, 0], 1.0, base=[1.0, 0.0])

    def test_huge_losses_do_not_overflow(self):
        p = softmax_weights([1e6, 1e6 + 1.0, 2e6], 5.0)
        validate_simplex(p)
        assert p[0] > p[1] > p[2]

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-50, 50), min_size=2, max_size=8),
        st.floats(-1e3, 1e3),
        st.floats(0.01, 5.0),
    )
    def test_shift_invariance(self, cl, shift, eta):
        cl = np.array(cl)
        a = softmax_weights(cl, eta)
        b = softmax_weights(cl + shift, eta)
        assert np.max(np.abs(a - b)) < 1e-12
        validate_simplex(a)

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=2, max_size=6),
        st.integers(0, 5),
        st.floats(0.05, 2.0),
        st.floats(0.1, 1.0),
    )
    def test_monotone(self, cl, idx, bump, eta):
        cl = np.array(cl)
        i = idx % len(cl)
        before = softmax_weights(cl, eta)[i]
        cl2 = cl.copy()
        cl2[i] += bump
        assert softmax_weights(cl2, eta)[i] < before


class TestSampling:
    def test_degenerate(self):
        rng = np.random.default_rng(0)
        assert all(sample_categorical([1.0, 0.0], rng) == 0 for _ in range(200))
        assert all(sample_categorical([0.0, 1.0], rng) == 1 for _ in range(200))

    def test_frequency(self):
        rng = np.random.default_rng(1)
        n = 10**6
        u = rng.random(n)
        # vectorised inverse CDF equals the scalar sampler on the same uniforms
        draws = (u >= 0.3).astype(int)
        freq = np.mean(draws == 0)
        assert abs(freq - 0.3) <= 3 * math.sqrt(0.21 / n)
        rng2 = np.random.default_rng(1)
        assert [sample_categorical([0.3, 0.7], rng2) for _ in range(1000)] == draws[:1000].tolist()

    def test_chi_square(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        rng = np.random.default_rng(2)
        u = rng.random(10**6)
        draws = np.searchsorted(np.cumsum(p), u, side="right")
        counts = np.bincount(draws, minlength=4)
        assert stats.chisquare(counts, 10**6 * p).pvalue > 1e-3

    def test_scalar_chi_square_small(self):
        p = np.array([0.25, 0.5, 0.25])
        rng = np.random.default_rng(3)
        counts = np.bincount([sample_categorical(p, rng) for _ in range(20000)], minlength=3)
        assert stats.chisquare(counts, 20000 * p).pvalue > 1e-3


class TestRngStreams:
    def test_reproducible(self):
        a, b = RngStreams(7), RngStreams(7)
        for name in ("context", "action", "keep", "pairing", "environment"):
            assert np.array_equal(getattr(a, name).random(5), getattr(b, name).random(5))

    def test_streams_independent(self):
        a, b = RngStreams(7), RngStreams(7)
        a.action.random(100)  # advancing one stream leaves the others untouched
        assert np.array_equal(a.keep.random(5), b.keep.random(5))
        assert not np.array_equal(RngStreams(7).context.random(5), RngStreams(7).action.random(5))

    def test_metadata(self):
        md = RngStreams(3).metadata()
        assert md["master_seed"] == 3 and "PCG64" in md["algorithm"]


class TestRegret:
    def test_zero_losses(self):
        o = tensor_oracle(np.zeros((4, 2, 2)))
        tr = make_trace([0, 1, 0, 1], [0, 1, 1, 0], 2, 2)
        assert realized_regret(tr, o, [1, 1]) == 0.0

    def test_same_arms_zero(self):
        rng = np.random.default_rng(0)
        o = tensor_oracle(rng.random((6, 2, 3)))
        pi = np.array([2, 0])
        ctx = np.array([0, 1, 1, 0, 0, 1])
        tr = make_trace(ctx, pi[ctx], 2, 3)
        assert realized_regret(tr, o, pi) == 0.0

    def test_hand_sum(self):
        ell = np.array(
            [
                [[0.1, 0.9], [0.5, 0.2]],
                [[0.3, 0.4], [0.8, 0.6]],
                [[1.0, 0.0], [0.7, 0.7]],
                [[0.2, 0.6], [0.1, 0.3]],
            ]
        )
        o = tensor_oracle(ell)
        ctx = [0, 1, 0, 1]
        act = [1, 0, 0, 1]
        pi = [0, 1]
        # (0.9-0.1) + (0.8-0.6) + (1.0-1.0) + (0.3-0.3)
        tr = make_trace(ctx, act, 2, 2)
        assert realized_regret(tr, o, pi) == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        o = tensor_oracle(np.zeros((4, 2, 2)))
        tr = make_trace([0, 1, 0], [0, 1, 1], 2, 2)
        with pytest.raises(ValueError):
            realized_regret(tr, o, [0, 0])


class TestBestPolicy:
    def test_tie_break(self):
        o = tensor_oracle(np.zeros((5, 3, 4)))
        assert best_fixed_policy(o, [0, 1, 2, 0, 1]).tolist() == [0, 0, 0]

    def test_obvious(self):
        ell = np.zeros((6, 1, 2))
        ell[:, 0, 0] = 0.9
        ell[:, 0, 1] = 0.1
        assert best_fixed_policy(tensor_oracle(ell), [0] * 6).tolist() == [1]

    def test_brute_force(self):
        rng = np.random.default_rng(11)
        ell = rng.random((5, 3, 4))
        ctx = np.array([0, 2, 2, 1, 0])
        o = tensor_oracle(ell)
        expected = []
        for c in range(3):
            totals = [sum(ell[t, c, a] for t in range(5) if ctx[t] == c) for a in range(4)]
            expected.append(min(range(4), key=lambda a: (totals[a], a)))
        assert best_fixed_policy(o, ctx).tolist() == expected


def test_validate_simplex():
    validate_simplex([0.5, 0.5])
    for bad in ([0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0]):
        with pytest.raises(ValueError):
            validate_simplex(bad)


def test_oracle_block_and_row():
    rng = np.random.default_rng(4)
    ell = rng.random((10, 2, 3))
    o = tensor_oracle(ell)
    assert np.array_equal(o.block(2, 9), ell[2:9])
    assert np.array_equal(o.loss_row(7, 1), ell[7, :, 1])
    assert o.loss(5, 1, 2) == ell[5, 1, 2]
    with pytest.raises(IndexError):
        o.loss(10, 0, 0)
