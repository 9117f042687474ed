"""End-to-end (7,4) autoencoder link: one-hot message -> 2N-real signal ->
AWGN -> softmax decoder, trained jointly."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergedError, ShapeMismatchError
from ..nn import (Adam, Dense, Elu, Model, PowerNorm, Relu, Softmax,
                  cross_entropy_and_grad)
from ..signal_core import ebn0_to_noise_variance
from .metrics import Estimate, binomial_estimate


@dataclass
class Message:
    value: int
    k: int = 4

    def __post_init__(self):
        if not 0 <= self.value < 2 ** self.k:
            raise ValueError(f"message {self.value} outside [0, {2 ** self.k})")

    @property
    def m(self) -> int:
        return 2 ** self.k


@dataclass
class AutoencoderSystem:
    encoder: Model
    decoder: Model
    n_complex: int = 7
    k: int = 4

    @property
    def m(self) -> int:
        return 2 ** self.k

    @property
    def code_rate(self) -> float:
        return self.k / self.n_complex

    def one_hot(self, messages: np.ndarray) -> np.ndarray:
        eye = np.eye(self.m, dtype=np.float32)
        return eye[np.asarray(messages)]

    def encode(self, messages) -> np.ndarray:
        """Messages -> power-normalized (B, 2N) signals."""
        msgs = np.atleast_1d(np.asarray(messages, dtype=np.int64))
        if msgs.min() < 0 or msgs.max() >= self.m:
            raise ValueError(f"message outside [0, {self.m})")
        return self.encoder.forward(self.one_hot(msgs))

    def decode(self, y: np.ndarray) -> np.ndarray:
        """Received (B, 2N) signals -> argmax message estimates."""
        y = np.atleast_2d(y)
        if y.shape[-1] != 2 * self.n_complex:
            raise ShapeMismatchError(
                f"decoder expects length {2 * self.n_complex}, got {y.shape[-1]}")
        return np.argmax(self.decoder.forward_logits(y.astype(np.float32)), axis=-1)

    def checksum(self) -> int:
        return self.encoder.param_checksum() ^ self.decoder.param_checksum()


@dataclass
class AeTrainConfig:
    n_complex: int = 7
    k: int = 4
    steps: int = 6000
    batch: int = 256
    lr: float = 1e-3
    train_ebn0_db: tuple = (7.0, 7.0)  # fixed training Eb/N0, as in the source systems
    hidden: int = 16


def build_encoder(rng: np.random.Generator, m: int = 16, n_complex: int = 7,
                  hidden: int = 16) -> Model:
    return Model([Dense(m, hidden, rng), Elu(),
                  Dense(hidden, 2 * n_complex, rng), PowerNorm(n_complex)], (m,))


def build_decoder(rng: np.random.Generator, m: int = 16, n_complex: int = 7,
                  hidden: int = 16) -> Model:
    return Model([Dense(2 * n_complex, hidden, rng), Relu(),
                  Dense(hidden, m, rng), Softmax()], (2 * n_complex,))


def train_autoencoder(cfg: AeTrainConfig, rng: np.random.Generator,
                      system: AutoencoderSystem | None = None) -> AutoencoderSystem:
    """Joint encoder/decoder training across the configured Eb/N0 range.

    Pass `system` to train an alternative architecture (e.g. a substitute pair)
    under the same protocol.
    """
    m = 2 ** cfg.k
    sys = system or AutoencoderSystem(build_encoder(rng, m, cfg.n_complex, cfg.hidden),
                                      build_decoder(rng, m, cfg.n_complex, cfg.hidden),
                                      cfg.n_complex, cfg.k)
    opt_e, opt_d = Adam(sys.encoder, cfg.lr), Adam(sys.decoder, cfg.lr)
    lo, hi = cfg.train_ebn0_db
    for step in range(cfg.steps):
        s = rng.integers(0, m, size=cfg.batch)
        x = sys.encoder.forward(sys.one_hot(s))
        ebn0 = rng.uniform(lo, hi)
        sigma = math.sqrt(ebn0_to_noise_variance(ebn0, sys.code_rate))
        y = (x + rng.normal(0.0, sigma, size=x.shape)).astype(np.float32)
        logits = sys.decoder.forward_logits(y)
        loss, dlogits = cross_entropy_and_grad(logits, s)
        if not math.isfinite(loss):
            raise DivergedError("autoencoder training diverged")
        dy = sys.decoder.backward(dlogits.astype(np.float32), from_logits=True)
        sys.encoder.backward(dy)
        opt_d.step()
        opt_e.step()
    return sys


def evaluate_bler(system: AutoencoderSystem, ebn0_db: float, n_trials: int,
                  rng: np.random.Generator, perturb=None, defend=None,
                  batch: int = 50000) -> Estimate:
    """Monte-Carlo BLER; perturb/defend are optional (y, rng) -> y stages."""
    if n_trials <= 0:
        raise ValueError("n_trials must be positive")
    sigma = math.sqrt(ebn0_to_noise_variance(ebn0_db, system.code_rate))
    errors = 0
    done = 0
    while done < n_trials:
        b = min(batch, n_trials - done)
        s = rng.integers(0, system.m, size=b)
        x = system.encode(s)
        y = (x + rng.normal(0.0, sigma, size=x.shape)).astype(np.float32)
        if perturb is not None:
            y = perturb(y, rng)
        if defend is not None:
            y = defend(y, rng)
        errors += int(np.sum(system.decode(y) != s))
        done += b
    return binomial_estimate(errors, n_trials)
