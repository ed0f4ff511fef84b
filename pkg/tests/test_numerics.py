"""Numerics layer: named rng streams, factorizations, noise specs.

Hand oracles:
- qr_positive(diag(2, -3)) = (diag(1, -1), diag(2, 3))
- pseudoinverse([[1, 1]]) = [[0.5], [0.5]]
- quad of v=(1,0) under cov [[2,1],[1,2]] is 2/3 (inverse is (1/3)[[2,-1],[-1,2]])
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projda.errors import NumericsError, RankDeficiencyError
from projda.numerics import (
    NoiseSpec,
    RngStream,
    eig_general,
    pseudoinverse,
    qr_positive,
    sample_gaussian,
    svd,
)


class TestRngStream:
    def test_generator_replays_from_start(self):
        s = RngStream(42)
        a = s.generator().standard_normal(5)
        b = s.generator().standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_child_is_deterministic(self):
        a = RngStream(42).child(1, 2).generator().standard_normal(3)
        b = RngStream(42).child(1, 2).generator().standard_normal(3)
        np.testing.assert_array_equal(a, b)

    def test_children_are_distinct(self):
        s = RngStream(42)
        a = s.child(0).generator().standard_normal(8)
        b = s.child(1).generator().standard_normal(8)
        assert not np.array_equal(a, b)

    def test_child_composes(self):
        assert RngStream(7).child(1).child(2) == RngStream(7).child(1, 2)
        assert hash(RngStream(7, (1,))) == hash(RngStream(7).child(1))

    def test_rejects_bad_ids(self):
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(0).child(-3)
        with pytest.raises(ValueError):
            RngStream(0).child(2**32)


class TestFactorizations:
    def test_qr_positive_hand_oracle(self):
        # diag(2, -3): second column flips sign to keep the pivot positive
        q, t = qr_positive(np.diag([2.0, -3.0]))
        np.testing.assert_allclose(q, np.diag([1.0, -1.0]), atol=1e-14)
        np.testing.assert_allclose(t, np.diag([2.0, 3.0]), atol=1e-14)

    def test_qr_positive_reconstructs(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((9, 4))
        q, t = qr_positive(a)
        np.testing.assert_allclose(q @ t, a, atol=1e-12)
        np.testing.assert_allclose(q.T @ q, np.eye(4), atol=1e-12)
        assert np.all(np.diag(t) > 0)
        assert np.allclose(t, np.triu(t))

    def test_qr_positive_rank_deficient(self):
        a = np.ones((4, 2))  # identical columns
        with pytest.raises(RankDeficiencyError):
            qr_positive(a)

    def test_qr_positive_wide_rejected(self):
        with pytest.raises(RankDeficiencyError):
            qr_positive(np.ones((2, 4)))

    def test_svd_matches_numpy(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((6, 4))
        u, s, v = svd(a)
        np.testing.assert_allclose(u @ np.diag(s) @ v.T, a, atol=1e-12)
        np.testing.assert_allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-12)
        assert np.all(np.diff(s) <= 0)

    def test_svd_rejects_nonfinite(self):
        with pytest.raises(NumericsError):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_pseudoinverse_hand_oracle(self):
        hp = pseudoinverse(np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(hp, [[0.5], [0.5]], atol=1e-14)

    def test_pseudoinverse_right_inverse(self):
        rng = np.random.default_rng(11)
        h = rng.standard_normal((3, 7))
        hp = pseudoinverse(h)
        np.testing.assert_allclose(h @ hp, np.eye(3), atol=1e-10)

    def test_pseudoinverse_row_deficient(self):
        with pytest.raises(RankDeficiencyError):
            pseudoinverse(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_eig_general_rotation(self):
        # rotation by 90 degrees has eigenvalues +-i
        w, v = eig_general(np.array([[0.0, -1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(sorted(w.imag), [-1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(w.real, 0.0, atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-14)

    def test_eig_general_rejects_rectangular(self):
        with pytest.raises(NumericsError):
            eig_general(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=10**6))
def test_qr_positive_contract(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n + 3, n))
    q, t = qr_positive(a)
    assert q.shape == (n + 3, n) and t.shape == (n, n)
    np.testing.assert_allclose(q @ t, a, atol=1e-10 * max(1.0, np.linalg.norm(a)))
    np.testing.assert_allclose(q.T @ q, np.eye(n), atol=1e-10)
    assert np.all(np.diag(t) > 0)


class TestNoiseSpec:
    def test_scalar_forms(self):
        q = NoiseSpec.scaled_identity(3, 0.25)
        assert q.is_scalar and not q.is_zero
        np.testing.assert_allclose(q.cov_matrix(), 0.25 * np.eye(3))
        v = np.array([2.0, 0.0, -2.0])
        np.testing.assert_allclose(q.solve(v), v / 0.25)
        np.testing.assert_allclose(q.quad(v), 8.0 / 0.25)
        np.testing.assert_allclose(q.color(v), 0.5 * v)

    def test_dense_hand_oracle(self):
        cov = np.array([[2.0, 1.0], [1.0, 2.0]])
        q = NoiseSpec.dense(cov)
        v = np.array([1.0, 0.0])
        np.testing.assert_allclose(q.quad(v), 2.0 / 3.0, atol=1e-14)
        np.testing.assert_allclose(q.solve(v), [2.0 / 3.0, -1.0 / 3.0], atol=1e-14)
        # color maps unit white noise to a factor with C C^T = cov
        c = np.stack([q.color(np.array([1.0, 0.0])), q.color(np.array([0.0, 1.0]))]).T
        np.testing.assert_allclose(c @ c.T, cov, atol=1e-14)

    def test_quad_batched_rows(self):
        q = NoiseSpec.dense(np.array([[2.0, 1.0], [1.0, 2.0]]))
        rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        expect = [2.0 / 3.0, 2.0 / 3.0, np.array([1, 1]) @ q.solve([1.0, 1.0])]
        np.testing.assert_allclose(q.quad(rows), expect, atol=1e-14)

    def test_zero_noise_degenerate(self):
        q = NoiseSpec.scaled_identity(2, 0.0)
        assert q.is_zero
        np.testing.assert_array_equal(q.color(np.ones(2)), 0.0)
        assert q.quad(np.zeros(2)) == 0.0
        assert q.quad(np.array([1e-150, 0.0])) == np.inf
        with pytest.raises(NumericsError):
            q.solve(np.ones(2))

    def test_zero_noise_sample_draws_nothing(self):
        # the generator must not advance for a degenerate term
        q = NoiseSpec.scaled_identity(3, 0.0)
        gen = RngStream(9).generator()
        np.testing.assert_array_equal(q.sample(gen), np.zeros(3))
        np.testing.assert_array_equal(
            gen.standard_normal(2), RngStream(9).generator().standard_normal(2)
        )

    def test_sample_matches_colored_draw(self):
        q = NoiseSpec.dense(np.array([[2.0, 1.0], [1.0, 2.0]]))
        draw = q.sample(RngStream(4), size=6)
        xi = RngStream(4).generator().standard_normal((6, 2))
        np.testing.assert_array_equal(draw, q.color(xi))

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec.scaled_identity(2, -0.1)
        with pytest.raises(ValueError):
            NoiseSpec.dense(np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            NoiseSpec.dense(np.array([[np.inf, 0.0], [0.0, 1.0]]))
        with pytest.raises(NumericsError):
            NoiseSpec.dense(np.array([[1.0, 2.0], [2.0, 1.0]]))._chol()

    def test_sample_gaussian_shape_check(self):
        with pytest.raises(ValueError):
            sample_gaussian(np.zeros(3), NoiseSpec.scaled_identity(2, 1.0), RngStream(0))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=1, max_size=8),
    st.floats(min_value=1e-6, max_value=1e6),
)
def test_scalar_quad_is_scaled_norm(vals, scale):
    v = np.asarray(vals)
    q = NoiseSpec.scaled_identity(v.size, scale)
    np.testing.assert_allclose(q.quad(v), float(v @ v) / scale, rtol=1e-12)
