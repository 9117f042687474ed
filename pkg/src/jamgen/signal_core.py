"""Complex-baseband signal utilities shared by every subsystem.

A signal of N complex samples is stored as a length-2N real vector: the N
in-phase values first, then the N quadrature values.  All power conversions
assume unit average power per complex sample at the transmitter output; the
perturbation power budget is a total squared-l2 budget over the 2N reals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

PHASE_POLICIES = ("none", "fixed-per-session", "per-transmission")


def _raw(s) -> np.ndarray:
    """Accept an IqSignal or a plain array; return the sample array."""
    if isinstance(s, IqSignal):
        return s.samples
    return np.asarray(s)


def _wrap_like(template, samples: np.ndarray):
    if isinstance(template, IqSignal):
        return IqSignal(samples)
    return samples


@dataclass
class IqSignal:
    """Interleaved-block I/Q signal: N in-phase reals followed by N quadrature reals."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("IqSignal samples must be a 1-D real vector")
        if self.samples.size == 0 or self.samples.size % 2 != 0:
            raise ValueError("IqSignal length must be even and nonzero (2N layout)")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("IqSignal samples must be finite")

    @property
    def n_complex(self) -> int:
        return self.samples.size // 2

    @property
    def i(self) -> np.ndarray:
        return self.samples[: self.n_complex]

    @property
    def q(self) -> np.ndarray:
        return self.samples[self.n_complex:]

    @classmethod
    def from_iq(cls, i, q) -> "IqSignal":
        return cls(np.concatenate([np.asarray(i, dtype=np.float64),
                                   np.asarray(q, dtype=np.float64)]))

    def as_complex(self) -> np.ndarray:
        return self.i + 1j * self.q


@dataclass
class ChannelConfig:
    """Channel and attack-budget configuration for one experiment condition.

    Exactly one of ebn0_db / snr_db is meaningful per scenario: the coded
    autoencoder sweeps Eb/N0 (with code_rate = k/N), the other systems sweep
    SNR, which equals the Eb/N0 conversion at code_rate = 1.
    """

    ebn0_db: float | None = None
    snr_db: float | None = None
    code_rate: float = 4.0 / 7.0
    psr_db: float | None = None
    phase_policy: str = "per-transmission"
    rng_seed: int = 0
    psr_flagged: bool = field(init=False, default=False)

    def __post_init__(self):
        if not 0.0 < self.code_rate <= 1.0:
            raise ValueError("code_rate must lie in (0, 1]")
        if self.phase_policy not in PHASE_POLICIES:
            raise ValueError(f"unknown phase_policy {self.phase_policy!r}")
        if self.psr_db is not None and self.psr_db > 0:
            # Attacker stronger than the signal: allowed, but outside the studied regime.
            self.psr_flagged = True
            warnings.warn("psr_db > 0: perturbation stronger than signal", stacklevel=2)

    def noise_variance(self) -> float:
        if self.ebn0_db is not None:
            return ebn0_to_noise_variance(self.ebn0_db, self.code_rate)
        if self.snr_db is not None:
            return snr_to_noise_variance(self.snr_db)
        raise ValueError("ChannelConfig needs ebn0_db or snr_db")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def avg_power(s) -> float:
    """Average power per complex sample: (1/N) * sum(I_k^2 + Q_k^2)."""
    x = _raw(s)
    if x.shape[-1] == 0:
        raise ValueError("empty-signal")
    n = x.shape[-1] // 2
    return np.sum(np.square(x), axis=-1) / n


def ebn0_to_noise_variance(ebn0_db: float, code_rate: float) -> float:
    """Per-real-dimension AWGN variance for unit average power per complex sample."""
    if code_rate <= 0:
        raise ValueError("code_rate must be positive")
    return 1.0 / (2.0 * code_rate * db_to_linear(ebn0_db))


def snr_to_noise_variance(snr_db: float) -> float:
    return ebn0_to_noise_variance(snr_db, 1.0)


def awgn(s, variance: float, rng: np.random.Generator):
    """Add i.i.d. zero-mean Gaussian noise of the given per-dimension variance."""
    if variance < 0:
        raise ValueError("noise variance must be nonnegative")
    x = _raw(s)
    noisy = x + rng.normal(0.0, math.sqrt(variance), size=x.shape)
    return _wrap_like(s, noisy.astype(x.dtype, copy=False))


def rotate_phase(p, theta):
    """Rotate every complex sample by theta (radians).

    theta may be a scalar or, for batched (..., 2N) arrays, one angle per row.
    Norm-preserving; supply float64 data where the 1e-9 contract matters.
    """
    x = _raw(p)
    n = x.shape[-1] // 2
    i, q = x[..., :n], x[..., n:]
    theta = np.asarray(theta, dtype=x.dtype if x.dtype == np.float32 else np.float64)
    if theta.ndim > 0:
        theta = theta.reshape(theta.shape + (1,))
    c, s = np.cos(theta), np.sin(theta)
    out = np.concatenate([i * c - q * s, q * c + i * s], axis=-1)
    return _wrap_like(p, out.astype(x.dtype, copy=False))


def rotate_phase_vjp(grad_out: np.ndarray, theta) -> np.ndarray:
    """Pull a gradient back through rotate_phase (rotation by -theta)."""
    return rotate_phase(grad_out, -np.asarray(theta))


def psr_to_power_budget(psr_db: float, signal_power: float, n_complex: int) -> float:
    """Total squared-l2 perturbation budget p over the 2N reals.

    PSR is the ratio of received perturbation power to received signal power
    (both per complex sample), so the total budget scales with N.
    """
    if signal_power <= 0:
        raise ValueError("signal_power must be positive")
    return signal_power * db_to_linear(psr_db) * n_complex


class PhaseSampler:
    """Draws jammer phase offsets according to a phase policy.

    "none" yields zeros, "per-transmission" a fresh uniform angle per row,
    "fixed-per-session" one uniform angle drawn lazily and then reused (a
    single coherence interval).
    """

    def __init__(self, policy: str, rng: np.random.Generator):
        if policy not in PHASE_POLICIES:
            raise ValueError(f"unknown phase_policy {policy!r}")
        self.policy = policy
        self._rng = rng
        self._session_theta: float | None = None

    def draw(self, n: int) -> np.ndarray:
        if self.policy == "none":
            return np.zeros(n)
        if self.policy == "fixed-per-session":
            if self._session_theta is None:
                self._session_theta = float(self._rng.uniform(0.0, 2.0 * math.pi))
            return np.full(n, self._session_theta)
        return self._rng.uniform(0.0, 2.0 * math.pi, size=n)
