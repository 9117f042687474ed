"""Single-vector UAP baseline: gradient ascent directly on one perturbation,
projected onto the power budget after every step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergedError
from ..nn import AdamState, adam_step
from ..signal_core import PhaseSampler, rotate_phase, rotate_phase_vjp
from .pgm import clip_to_budget


@dataclass
class SingleUap:
    delta: np.ndarray
    power_budget: float
    psr_db: float
    epochs: int
    phase_policy: str = "per-transmission"

    def apply(self, y: np.ndarray, rng: np.random.Generator,
              phase_policy: str | None = None) -> np.ndarray:
        y2 = np.atleast_2d(y)
        policy = phase_policy if phase_policy is not None else self.phase_policy
        theta = PhaseSampler(policy, rng).draw(len(y2))
        delta = np.broadcast_to(self.delta, y2.shape)
        out = (y2 + rotate_phase(delta, theta)).astype(y2.dtype)
        return out.reshape(np.shape(y))

    def perturber(self, phase_policy: str | None = None):
        return lambda y, rng: self.apply(y, rng, phase_policy)


@dataclass
class UapTrainConfig:
    psr_db: float = -6.0
    epochs: int = 10
    steps_per_epoch: int = 150
    batch: int = 32
    lr: float = 1e-2
    phase_policy: str = "per-transmission"


def train_single_uap(target, cfg: UapTrainConfig, rng: np.random.Generator,
                     p: float | None = None) -> SingleUap:
    """Fixed-budget empirical maximization of the victim loss over one delta."""
    from ..signal_core import psr_to_power_budget
    victim_sum = target.checksum()
    if p is None:
        p = psr_to_power_budget(cfg.psr_db, 1.0, target.n_complex)
    delta = (1e-3 * rng.normal(size=(1, target.input_dim))).astype(np.float32)
    state = AdamState(lr=cfg.lr)
    phases = PhaseSampler(cfg.phase_policy, rng)
    for _ in range(cfg.epochs):
        for _ in range(cfg.steps_per_epoch):
            y, targets = target.sample_inputs(cfg.batch, rng)
            theta = phases.draw(len(y))
            y_pert = (y + rotate_phase(np.broadcast_to(delta, y.shape), theta)) \
                .astype(np.float32)
            loss, dy = target.loss_and_input_grad(y_pert, targets)
            if not math.isfinite(loss):
                raise DivergedError("single-UAP training diverged")
            grad = -rotate_phase_vjp(dy, theta).sum(axis=0, keepdims=True)
            adam_step({"delta": delta}, {"delta": grad.astype(np.float32)}, state)
            delta, _ = clip_to_budget(delta, p)
    if target.checksum() != victim_sum:
        raise RuntimeError("victim parameters changed during attack training")
    return SingleUap(delta[0].copy(), p, cfg.psr_db, cfg.epochs, cfg.phase_policy)
