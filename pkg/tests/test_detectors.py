import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import multivariate_normal

from oodshift.detectors import (
    Detector,
    TokenLogProbs,
    density_score,
    density_scores,
    fit_lda,
    msp_score,
    perplexity,
    ppl_score,
    score_sampleset,
    seqprob_score,
)
from oodshift.simcore import (
    FeaturePartition,
    GmmSpec,
    SampleSet,
    background_displacement,
    background_shift_spec,
    build_id_spec,
    sample,
)


def bayes_posterior(spec, x):
    """p(y=1|x) straight from the two Gaussian densities."""
    cov = spec.covariance_scale * np.eye(spec.total_dims)
    p1 = spec.class1_prior * multivariate_normal.pdf(x, spec.centroid_1, cov)
    p0 = (1 - spec.class1_prior) * multivariate_normal.pdf(x, spec.centroid_0, cov)
    return p1 / (p0 + p1)


class TestFitLda:
    def test_standard_weights(self):
        spec = build_id_spec(200, 40, seed=7)
        post = fit_lda(spec)
        s, b = sorted(spec.partition.semantic_indices), list(spec.partition.background_indices)
        assert np.all(post.weights[s] == 2.0) and np.all(post.weights[b] == 0.0)
        assert post.bias == 0.0

    def test_midpoint(self):
        spec = build_id_spec(10, 3, seed=0)
        assert fit_lda(spec).prob1(np.zeros(10))[0] == 0.5

    def test_at_centroid_matches_bayes(self):
        spec = build_id_spec(200, 40, seed=2)
        post = fit_lda(spec)
        assert post.logit(spec.centroid_1)[0] == 80.0
        log_ratio = (multivariate_normal.logpdf(spec.centroid_1, spec.centroid_1, np.eye(200))
                     - multivariate_normal.logpdf(spec.centroid_1, spec.centroid_0, np.eye(200)))
        assert log_ratio == pytest.approx(80.0, rel=1e-12)

    @pytest.mark.parametrize("prior,scale", [(0.3, 1.0), (0.5, 2.5), (0.8, 0.5)])
    def test_general_prior_and_scale(self, prior, scale):
        # asymmetric centroids sharing a nonzero background value
        spec = GmmSpec(FeaturePartition(4, (0, 2), (1, 3)), np.array([-0.5, 0.4, 0.2, -1.0]),
                       np.array([1.0, 0.4, -0.7, -1.0]), scale, prior)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 4)) * 2
        np.testing.assert_allclose(fit_lda(spec).prob1(x), bayes_posterior(spec, x), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fit_lda(build_id_spec(5, 2, seed=0)).logit(np.zeros((3, 4)))


class TestMsp:
    def test_examples(self):
        assert msp_score([0.7, 0.2, 0.1]) == 0.7
        assert msp_score([1.0, 0.0]) == 1.0
        for k in (2, 4, 10):
            assert msp_score(np.full(k, 1.0 / k)) == pytest.approx(1.0 / k)

    @pytest.mark.parametrize("bad", [[], [0.6, 0.6], [1.2, -0.2], [0.5, 0.5 + 2e-6]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            msp_score(bad)

    @given(arrays(np.float64, st.integers(1, 12), elements=st.floats(0.0, 1.0)))
    def test_range(self, raw):
        if raw.sum() <= 0:
            return
        p = raw / raw.sum()
        s = msp_score(p)
        assert 1.0 / p.size - 1e-12 <= s <= 1.0


class TestDensity:
    def test_one_dim_closed_form(self):
        spec = GmmSpec(FeaturePartition(2, (0,), (1,)), np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
        # second axis is background at 0 and contributes log N(0; 0, 1)
        expected = (-0.5 * math.log(2 * math.pi) - 0.5) + (-0.5 * math.log(2 * math.pi))
        assert density_score(spec, [0.0, 0.0]) == pytest.approx(expected, abs=1e-14)

    def test_naive_oracle(self):
        spec = build_id_spec(5, 2, seed=4)
        rng = np.random.default_rng(3)
        for x in rng.normal(size=(20, 5)) * 1.5:
            naive = math.log(0.5 * multivariate_normal.pdf(x, spec.centroid_0, np.eye(5))
                             + 0.5 * multivariate_normal.pdf(x, spec.centroid_1, np.eye(5)))
            assert density_score(spec, x) == pytest.approx(naive, rel=1e-12)

    def test_translation(self):
        spec = build_id_spec(12, 4, seed=1)
        shifted = background_shift_spec(spec, 0.7)
        z = background_displacement(spec, 0.7)
        x = np.random.default_rng(0).normal(size=(30, 12))
        np.testing.assert_allclose(density_scores(shifted, x + z), density_scores(spec, x), rtol=1e-12)

    @given(arrays(np.float64, 6, elements=st.floats(-1e3, 1e3)))
    def test_finite_for_large_inputs(self, x):
        spec = build_id_spec(6, 2, seed=0)
        assert math.isfinite(density_score(spec, x))

    def test_extreme_points_finite(self):
        spec = build_id_spec(200, 40, seed=0)
        assert math.isfinite(density_score(spec, np.full(200, 1e3)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            density_score(build_id_spec(5, 2, seed=0), np.zeros(4))


class TestTokenScores:
    def test_constant_sequence(self):
        for t in (1, 3, 17):
            assert ppl_score(np.full(t, math.log(0.5))) == pytest.approx(0.5, rel=1e-15)
        assert seqprob_score(np.full(10, math.log(0.5))) == pytest.approx(10 * math.log(0.5), rel=1e-15)

    def test_hand_arithmetic(self):
        assert ppl_score([math.log(0.9), math.log(0.1)]) == pytest.approx(0.3, rel=1e-15)
        assert perplexity([math.log(0.25)] * 4) == pytest.approx(4.0)

    def test_single_token_consistency(self):
        lp = math.log(0.37)
        assert seqprob_score([lp]) == lp
        assert seqprob_score([lp]) == pytest.approx(math.log(ppl_score([lp])), rel=1e-15)

    @pytest.mark.parametrize("bad", [[], [0.1], [-1.0, 0.5], [float("nan")]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            ppl_score(bad)
        with pytest.raises(ValueError):
            seqprob_score(bad)

    @given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-30.0, 0.0)), st.integers(2, 10))
    def test_repetition(self, v, k):
        tokens = TokenLogProbs(v)
        assert ppl_score(tokens.repeated(k)) == ppl_score(tokens)
        assert seqprob_score(tokens.repeated(k)) == pytest.approx(k * seqprob_score(tokens), rel=1e-14, abs=1e-300)

    def test_logpx_length_decreasing(self):
        tokens = TokenLogProbs([-0.3, -1.2, -0.01])
        scores = [seqprob_score(tokens.repeated(k)) for k in range(1, 6)]
        assert all(a > b for a, b in zip(scores, scores[1:]))


class TestScoreSampleSet:
    def test_boundary_point(self):
        spec = build_id_spec(8, 3, seed=0)
        s = SampleSet(np.zeros((2, 8)), np.zeros(2, dtype=np.int8))
        assert np.all(score_sampleset(fit_lda(spec), s, Detector.MSP_ORACLE).values == 0.5)

    def test_accepts_spec_for_msp(self):
        spec = build_id_spec(8, 3, seed=0)
        s = sample(spec, 50, seed=1)
        a = score_sampleset(spec, s, "msp_oracle")
        b = score_sampleset(fit_lda(spec), s, "msp_oracle")
        assert np.array_equal(a.values, b.values)

    def test_translation_invariance(self):
        spec = build_id_spec(40, 8, seed=2)
        s = sample(spec, 1000, seed=5)
        z = background_displacement(spec, 3.3)
        a = score_sampleset(fit_lda(spec), s, Detector.MSP_ORACLE)
        b = score_sampleset(fit_lda(spec), s.translated(z), Detector.MSP_ORACLE)
        assert np.array_equal(a.values, b.values) and np.array_equal(a.order_key, b.order_key)

    def test_density_hand_rows(self):
        spec = GmmSpec(FeaturePartition(2, (0,), (1,)), np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
        rows = np.array([[0.0, 0.0], [1.0, 0.0], [-2.0, 1.5]])

        def by_hand(x0, x1):
            n = lambda v, m: math.exp(-0.5 * (v - m) ** 2) / math.sqrt(2 * math.pi)
            return math.log(0.5 * n(x0, -1) * n(x1, 0) + 0.5 * n(x0, 1) * n(x1, 0))

        got = score_sampleset(spec, SampleSet(rows, np.zeros(3, dtype=np.int8)), Detector.DENSITY_ORACLE).values
        np.testing.assert_allclose(got, [by_hand(*r) for r in rows], rtol=1e-13)

    def test_msp_range_and_order_key(self):
        spec = build_id_spec(200, 40, seed=2)
        sc = score_sampleset(fit_lda(spec), sample(spec, 2000, seed=9), Detector.MSP_ORACLE)
        assert np.all((sc.values >= 0.5) & (sc.values <= 1.0))
        # the key must never invert the order of the rounded MSP values
        order = np.argsort(sc.order_key, kind="stable")
        assert np.all(np.diff(sc.values[order]) >= 0)
        assert len(np.unique(sc.order_key)) > len(np.unique(sc.values))

    def test_density_needs_spec(self):
        spec = build_id_spec(8, 3, seed=0)
        with pytest.raises(TypeError):
            score_sampleset(fit_lda(spec), sample(spec, 5, seed=0), Detector.DENSITY_ORACLE)

    def test_dimension_mismatch(self):
        spec = build_id_spec(8, 3, seed=0)
        with pytest.raises(ValueError):
            score_sampleset(spec, sample(build_id_spec(9, 3, seed=0), 5, seed=0), Detector.MSP_ORACLE)
