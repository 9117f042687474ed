"""GAN-based undetectability: a discriminator separating generated
perturbations from channel-like Gaussian noise, used both as a training
regularizer on the generator and as the detectability metric (f1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attack.pgm import AttackConfig, GeneratorModel, sample_trigger, train_pgm
from .errors import DivergedError
from .nn import Adam, Dense, Model, Relu, Sigmoid, bce_logits_and_grad, sigmoid
from .systems.metrics import f1_score


@dataclass
class DiscriminatorModel:
    """2N -> 50 -> 1 sigmoid; outputs the probability of "generated
    perturbation" (label 1) vs Gaussian (label 0)."""

    model: Model
    mu: float = 0.0
    sigma: float = 1.0

    def _logit_view(self) -> Model:
        view = Model(self.model.layers[:-1], self.model.input_shape, check=False)
        return view

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self._logit_view().forward(x.astype(np.float32))

    def prob(self, x: np.ndarray) -> np.ndarray:
        return self.model.forward(np.atleast_2d(x).astype(np.float32))[:, 0]

    def gaussian_reference(self, n: int, rng: np.random.Generator, dim: int) -> np.ndarray:
        return (self.mu + self.sigma * rng.normal(size=(n, dim))).astype(np.float32)


def build_discriminator(dim: int, rng: np.random.Generator, hidden: int = 50) -> DiscriminatorModel:
    model = Model([Dense(dim, hidden, rng), Relu(),
                   Dense(hidden, 1, rng), Sigmoid()], (dim,))
    return DiscriminatorModel(model)


def undetect_regularizer(disc: DiscriminatorModel, delta: np.ndarray) -> float:
    """BCE of D(delta) against the Gaussian label 0; small = Gaussian-looking.
    Equals softplus of the discriminator logit, in stable form."""
    z = disc.logits(np.atleast_2d(delta))
    return float(np.mean(np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z)))))


def undetect_regularizer_grad(disc: DiscriminatorModel, delta: np.ndarray) -> np.ndarray:
    """d undetect_regularizer / d delta (mean over rows)."""
    view = disc._logit_view()
    z = view.forward(np.atleast_2d(delta).astype(np.float32))
    dlogit = sigmoid(z) / z.size  # BCE grad against target 0
    g = view.backward(dlogit.astype(np.float32))
    view.zero_grads()  # keep the shared discriminator grads clean for its own step
    return g


class GanRegularizer:
    """Alternating-discriminator hook for train_pgm (one D step per G step)."""

    def __init__(self, disc: DiscriminatorModel, d_lr: float = 1e-5, d_batch: int = 32,
                 reg_scale: float | None = None):
        self.disc = disc
        self.d_batch = d_batch
        self.reg_scale = reg_scale
        self._view = disc._logit_view()
        self._opt = Adam(self._view, d_lr)

    def refresh(self, gen: GeneratorModel, rng: np.random.Generator):
        """Re-fit the target Gaussian (mu, sigma) to the current perturbations."""
        z = sample_trigger(gen.trigger_dim, rng, n=512)
        deltas = gen.generate(z)
        self.disc.mu = float(np.mean(deltas.mean(axis=1)))
        self.disc.sigma = float(np.mean(deltas.std(axis=1)))

    def reg_input_grad(self, delta: np.ndarray) -> np.ndarray:
        # per-dimension scaling keeps the alpha regime comparable across the
        # 14-real autoencoder and 256-real modulation/OFDM signals
        scale = self.reg_scale if self.reg_scale is not None else 1.0 / delta.shape[-1]
        return undetect_regularizer_grad(self.disc, delta) * scale

    def update(self, gen: GeneratorModel, rng: np.random.Generator):
        """One discriminator step: generated -> label 1, Gaussian -> label 0."""
        m = self.d_batch
        deltas = gen.generate(sample_trigger(gen.trigger_dim, rng, n=m))
        gauss = self.disc.gaussian_reference(m, rng, gen.output_dim)
        x = np.concatenate([deltas, gauss])
        labels = np.concatenate([np.ones((m, 1)), np.zeros((m, 1))]).astype(np.float32)
        logits = self._view.forward(x)
        loss, dlogits = bce_logits_and_grad(logits, labels)
        if not math.isfinite(loss):
            raise DivergedError("discriminator training diverged")
        self._view.backward(dlogits.astype(np.float32))
        self._opt.step()


def train_joint(target, cfg: AttackConfig, rng: np.random.Generator,
                d_lr: float = 1e-5) -> tuple[GeneratorModel, DiscriminatorModel]:
    """Simultaneous generator/discriminator training (alpha weights the
    undetectability term in the generator objective)."""
    if cfg.alpha <= 0:
        raise ValueError("train_joint requires alpha > 0")
    disc = build_discriminator(target.input_dim, rng)
    gan = GanRegularizer(disc, d_lr=d_lr)
    gen = train_pgm(target, cfg, rng, gan=gan)
    return gen, disc


def train_discriminator(gen: GeneratorModel, rng: np.random.Generator,
                        steps: int = 40000, d_lr: float = 1e-5,
                        d_batch: int = 64) -> DiscriminatorModel:
    """Train D against a fixed generator (the alpha = 0 detectability probe)."""
    disc = build_discriminator(gen.output_dim, rng)
    gan = GanRegularizer(disc, d_lr=d_lr, d_batch=d_batch)
    gan.refresh(gen, rng)
    for _ in range(steps):
        gan.update(gen, rng)
    return disc


def discriminator_f1(disc: DiscriminatorModel, gen: GeneratorModel, n: int,
                     rng: np.random.Generator) -> float:
    """f1 of the perturbation class on a balanced sample at threshold 0.5."""
    if n < 1000:
        raise ValueError("n must be at least 1000 for a stable f1 estimate")
    half = n // 2
    deltas = gen.generate(sample_trigger(gen.trigger_dim, rng, n=half))
    gauss = disc.gaussian_reference(half, rng, gen.output_dim)
    x = np.concatenate([deltas, gauss])
    truth = np.concatenate([np.ones(half, dtype=int), np.zeros(half, dtype=int)])
    pred = (disc.prob(x) >= 0.5).astype(int)
    return f1_score(pred, truth)
