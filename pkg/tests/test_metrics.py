import numpy as np
import pytest

from jamgen.systems.metrics import (binomial_estimate, bootstrap_estimate,
                                    f1_score, wilson_interval)


class TestWilson:
    def test_brackets_estimate(self):
        for k, n in [(0, 100), (1, 100), (50, 100), (100, 100), (3, 17)]:
            lo, hi = wilson_interval(k, n)
            assert lo <= k / n <= hi
            assert 0.0 <= lo and hi <= 1.0

    def test_zero_successes_has_positive_upper(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == 0.0 and 0 < hi < 0.01

    def test_coverage_on_simulated_binomials(self):
        rng = np.random.default_rng(0)
        p, n = 0.3, 400
        covered = 0
        for _ in range(300):
            k = rng.binomial(n, p)
            lo, hi = wilson_interval(k, n)
            covered += lo <= p <= hi
        assert covered / 300 >= 0.90

    def test_bad_n(self):
        with pytest.raises(ValueError):
            wilson_interval(0, 0)

    def test_quadrupling_trials_halves_ci_width(self):
        # estimator convergence: half-width scales as 1/sqrt(n)
        w1 = np.diff(wilson_interval(100, 1000))[0]
        w4 = np.diff(wilson_interval(400, 4000))[0]
        assert w4 == pytest.approx(w1 / 2, rel=0.05)


class TestEstimate:
    def test_perfect_decoder_zero(self):
        est = binomial_estimate(0, 5000)
        assert est.value == 0.0 and est.ci_low == 0.0

    def test_constant_class_accuracy_is_prior(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 4, size=20000)
        pred = np.zeros_like(labels)
        est = binomial_estimate(int(np.sum(pred == labels)), len(labels))
        assert est.value == pytest.approx(0.25, abs=0.01)

    def test_random_bit_guessing_half(self):
        rng = np.random.default_rng(2)
        bits = rng.integers(0, 2, 50000)
        guess = rng.integers(0, 2, 50000)
        est = binomial_estimate(int(np.sum(bits != guess)), 50000)
        assert est.ci_low <= 0.5 <= est.ci_high


class TestF1:
    def test_perfect(self):
        assert f1_score([1, 0, 1], [1, 0, 1]) == 1.0

    def test_all_negative_predictions(self):
        assert f1_score([0, 0, 0, 0], [1, 1, 0, 0]) == 0.0

    def test_all_positive_predictions_balanced(self):
        # precision 1/2, recall 1 -> f1 = 2/3
        assert f1_score([1, 1, 1, 1], [1, 1, 0, 0]) == pytest.approx(2 / 3)

    def test_bootstrap_brackets_point(self):
        rng = np.random.default_rng(3)
        values = rng.normal(1.0, 0.2, size=400)
        est = bootstrap_estimate(values, np.mean, rng=rng)
        assert est.ci_low <= est.value <= est.ci_high
        assert est.ci_high - est.ci_low < 0.1
