"""Monte-Carlo metric estimates with binomial (Wilson) confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z95 = 1.959963984540054


@dataclass
class Estimate:
    value: float
    ci_low: float
    ci_high: float
    n: int

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    def __repr__(self):
        return f"{self.value:.6g} [{self.ci_low:.6g}, {self.ci_high:.6g}] (n={self.n})"


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """95% Wilson score interval; well behaved at 0 and n successes."""
    if n <= 0:
        raise ValueError("n must be positive")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def binomial_estimate(successes: int, n: int) -> Estimate:
    lo, hi = wilson_interval(successes, n)
    return Estimate(successes / n, lo, hi, n)


def bootstrap_estimate(values: np.ndarray, stat, n_boot: int = 500,
                       rng: np.random.Generator | None = None) -> Estimate:
    """Percentile-bootstrap CI of stat(values) for non-binomial metrics (f1)."""
    rng = rng or np.random.default_rng(0)
    values = np.asarray(values)
    point = float(stat(values))
    n = len(values)
    samples = [float(stat(values[rng.integers(0, n, size=n)])) for _ in range(n_boot)]
    lo, hi = np.percentile(samples, [2.5, 97.5])
    return Estimate(point, min(float(lo), point), max(float(hi), point), n)


def f1_score(pred: np.ndarray, truth: np.ndarray, positive=1) -> float:
    """f1 of the positive class at the given hard predictions."""
    pred = np.asarray(pred) == positive
    truth = np.asarray(truth) == positive
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)
