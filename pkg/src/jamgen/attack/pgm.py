"""Perturbation generator: a trigger-to-perturbation network trained to
degrade a frozen victim under power, phase-rotation, and diversity constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergedError, ShapeMismatchError
from ..nn import Adam, Dense, LeakyRelu, Model, Relu
from ..signal_core import (PhaseSampler, psr_to_power_budget, rotate_phase,
                           rotate_phase_vjp)

_CLIP_EPS = 1e-12


def sample_trigger(dim: int, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """Componentwise uniform [0,1) trigger vectors, (n, dim) float32."""
    if dim <= 0:
        raise ValueError("trigger dim must be positive")
    return rng.random(size=(n, dim), dtype=np.float32)


def clip_to_budget(delta: np.ndarray, p: float):
    """Project rows onto the ball ||delta||_2^2 <= p; returns (clipped, cache)."""
    norms = np.sqrt(np.sum(np.square(delta, dtype=np.float64), axis=-1, keepdims=True))
    over = norms * norms > p
    # clip(0) = 0 by convention: the zero vector is already inside the ball
    scale = np.where(over, math.sqrt(p) / np.maximum(norms, _CLIP_EPS), 1.0)
    return (delta * scale).astype(delta.dtype), (delta, norms, over, scale)


def clip_vjp(grad: np.ndarray, cache) -> np.ndarray:
    """Gradient of clip_to_budget: identity inside the ball, the projection
    Jacobian sqrt(p)*(I/r - d d^T / r^3) on the boundary branch."""
    delta, norms, over, scale = cache
    inner = np.sum(delta * grad, axis=-1, keepdims=True)
    proj = scale * (grad - delta * (inner / np.maximum(norms * norms, _CLIP_EPS)))
    return np.where(over, proj, grad).astype(grad.dtype)


def remap(y, delta, p: float):
    """Add delta to y after projecting it onto the power budget (the paper's
    power-constraint remapping)."""
    from ..signal_core import _raw, _wrap_like
    ya, da = _raw(y), _raw(delta)
    if ya.shape[-1] != da.shape[-1]:
        raise ShapeMismatchError(f"remap length mismatch {ya.shape} vs {da.shape}")
    if p <= 0:
        raise ValueError("power budget must be positive")
    clipped, _ = clip_to_budget(np.atleast_2d(da.astype(np.float64)), p)
    return _wrap_like(y, (ya + clipped.reshape(da.shape)).astype(ya.dtype, copy=False))


@dataclass
class AttackConfig:
    """Hyperparameters of one perturbation-generator training run."""

    psr_db: float = -6.0
    epochs: int = 10
    steps_per_epoch: int = 150
    batch: int = 32
    lr: float = 1e-4
    beta: float = 0.1               # diversity (consecutive-distance) weight
    alpha: float = 0.0              # undetectability regularizer weight
    phase_policy: str = "per-transmission"
    hidden_sizes: tuple = (100,)
    activation: str = "relu"
    target_mode: str = "clean-prediction"
    # diversity warmup (multiplier, fraction of steps): heavier distance
    # pressure early keeps the wide generators from collapsing into one
    # perturbation before the victim loss term dominates
    beta_warmup: tuple = (1.0, 0.0)

    def __post_init__(self):
        if self.beta < 0 or self.alpha < 0:
            raise ValueError("regularizer weights must be nonnegative")
        if not (math.isfinite(self.beta) and math.isfinite(self.alpha)):
            raise ValueError("regularizer weights must be finite")


# Table I defaults per application; desk variants shrink the wide generators
# so the suite runs on one core.
TABLE_I = {
    "autoencoder": {"hidden_sizes": (100,), "activation": "relu", "lr": 1e-4},
    "modulation": {"hidden_sizes": (5000, 1000), "activation": "leaky_relu", "lr": 1e-3},
    "ofdm": {"hidden_sizes": (5000, 1000), "activation": "leaky_relu", "lr": 1e-2},
}
DESK_HIDDEN = {"autoencoder": (100,), "modulation": (800, 300), "ofdm": (800, 300)}


def attack_config(scenario: str, desk: bool = True, **overrides) -> AttackConfig:
    base = dict(TABLE_I[scenario])
    if desk:
        base["hidden_sizes"] = DESK_HIDDEN[scenario]
    base.update(overrides)
    return AttackConfig(**base)


@dataclass
class GeneratorModel:
    """Trigger -> perturbation network with its power budget."""

    model: Model
    power_budget: float
    config: AttackConfig

    @property
    def trigger_dim(self) -> int:
        return self.model.input_shape[0]

    @property
    def output_dim(self) -> int:
        return self.model.output_shape[0]

    def generate(self, z: np.ndarray) -> np.ndarray:
        """Power-clipped perturbation(s) for the given trigger(s)."""
        z = np.atleast_2d(np.asarray(z, dtype=np.float32))
        if z.shape[-1] != self.trigger_dim:
            raise ShapeMismatchError(
                f"trigger length {z.shape[-1]}, expected {self.trigger_dim}")
        raw = self.model.forward(z)
        clipped, _ = clip_to_budget(raw, self.power_budget)
        return clipped

    def perturb(self, y: np.ndarray, rng: np.random.Generator,
                phase_policy: str | None = None) -> np.ndarray:
        """Perturb received signals: fresh trigger and phase per transmission."""
        y2 = np.atleast_2d(y)
        z = sample_trigger(self.trigger_dim, rng, n=len(y2))
        delta = self.generate(z)
        policy = phase_policy if phase_policy is not None else self.config.phase_policy
        theta = PhaseSampler(policy, rng).draw(len(y2))
        out = (y2 + rotate_phase(delta, theta)).astype(y2.dtype)
        return out.reshape(np.shape(y))

    def perturber(self, phase_policy: str | None = None):
        return lambda y, rng: self.perturb(y, rng, phase_policy)


def build_generator(dim: int, cfg: AttackConfig, rng: np.random.Generator,
                    n_complex: int) -> GeneratorModel:
    act = {"relu": Relu, "leaky_relu": LeakyRelu}[cfg.activation]
    layers = []
    prev = dim
    for width in cfg.hidden_sizes:
        layers += [Dense(prev, width, rng), act()]
        prev = width
    layers.append(Dense(prev, dim, rng))
    p = psr_to_power_budget(cfg.psr_db, 1.0, n_complex)
    return GeneratorModel(Model(layers, (dim,)), p, cfg)


def train_pgm(target, cfg: AttackConfig, rng: np.random.Generator,
              gan=None) -> GeneratorModel:
    """Alg.-style generator training against a frozen victim.

    Per mini-batch: one trigger, clip to the power budget, rotate per the
    phase policy, maximize the victim loss against its clean predictions,
    minus the consecutive-distance diversity term, plus (alpha > 0) the
    GAN undetectability regularizer supplied via `gan`.
    """
    victim_sum = target.checksum()
    gen = build_generator(target.input_dim, cfg, rng, target.n_complex)
    opt = Adam(gen.model, cfg.lr)
    phases = PhaseSampler(cfg.phase_policy, rng)
    eval_y, eval_t = target.sample_inputs(512, np.random.default_rng(rng.integers(2 ** 63)))
    loss_before = _attack_loss(gen, target, eval_y, eval_t)

    total_steps = cfg.epochs * cfg.steps_per_epoch
    warm_mult, warm_frac = cfg.beta_warmup
    warm_until = int(total_steps * warm_frac)
    step_no = 0
    prev_z = None
    for epoch in range(cfg.epochs):
        if gan is not None:
            gan.refresh(gen, rng)
        for _ in range(cfg.steps_per_epoch):
            beta = cfg.beta * (warm_mult if step_no < warm_until else 1.0)
            step_no += 1
            y, targets = target.sample_inputs(cfg.batch, rng)
            z = sample_trigger(gen.trigger_dim, rng)
            # previous trigger's perturbation under the CURRENT weights, held
            # constant: bias drift between steps then earns no distance reward,
            # only genuine trigger sensitivity does
            prev_delta = None
            if beta > 0 and prev_z is not None:
                prev_delta, _ = clip_to_budget(gen.model.forward(prev_z),
                                               gen.power_budget)
            raw = gen.model.forward(z)
            delta, cache = clip_to_budget(raw, gen.power_budget)
            theta = phases.draw(len(y))
            y_pert = (y + rotate_phase(np.broadcast_to(delta, y.shape), theta)) \
                .astype(np.float32)
            loss, dy = target.loss_and_input_grad(y_pert, targets)
            if not math.isfinite(loss):
                raise DivergedError("attack training diverged")
            # J = -loss + regularizers, minimized
            ddelta = -rotate_phase_vjp(dy, theta).sum(axis=0, keepdims=True)
            if prev_delta is not None:
                diff = delta - prev_delta
                dist = float(np.linalg.norm(diff))
                ddelta -= beta * diff / max(dist, 1e-6)
            if gan is not None and cfg.alpha > 0:
                ddelta += cfg.alpha * gan.reg_input_grad(delta)
            gen.model.backward(clip_vjp(ddelta.astype(np.float32), cache))
            opt.step()
            prev_z = z
            if gan is not None:
                gan.update(gen, rng)
    loss_after = _attack_loss(gen, target, eval_y, eval_t)
    if target.checksum() != victim_sum:
        raise RuntimeError("victim parameters changed during attack training")
    if not loss_after > loss_before:
        raise DivergedError(
            f"attack failed to improve: {loss_before:.4g} -> {loss_after:.4g}")
    return gen


def _attack_loss(gen: GeneratorModel, target, y: np.ndarray, targets) -> float:
    rng = np.random.default_rng(0)
    y_pert = gen.perturb(y, rng)
    loss, _ = target.loss_and_input_grad(y_pert, targets)
    return loss
