"""Receiver-side countermeasures: pilot-based perturbation estimation, the
subtracting defense under three defender knowledge levels, and adversarial
training."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attack.pgm import GeneratorModel, sample_trigger
from .errors import DivergedError
from .nn import Adam, cross_entropy_and_grad, mse_and_grad
from .systems.autoencoder import AutoencoderSystem, build_decoder
from .systems.metrics import Estimate

AD_HOC = "ad_hoc"
STRUCTURE_AWARE = "structure_aware"
PERFECT_AWARE = "perfect_aware"
KNOWLEDGE_KINDS = (AD_HOC, STRUCTURE_AWARE, PERFECT_AWARE)


@dataclass
class PilotEstimate:
    delta_hat: np.ndarray
    pilots_used: int
    residual_power: float  # mean squared per-pilot deviation from the estimate


@dataclass
class DefenderKnowledge:
    """What the defender holds: an ad-hoc pilot estimate, or a generator of the
    attacker's architecture (structure-aware: her own training run;
    perfect-aware: the attacker's exact parameters)."""

    kind: str
    pilot_estimate: PilotEstimate | None = None
    defender_pgm: GeneratorModel | None = None

    def __post_init__(self):
        if self.kind not in KNOWLEDGE_KINDS:
            raise ValueError(f"unknown defender kind {self.kind!r}")
        if self.kind == AD_HOC and self.pilot_estimate is None:
            raise ValueError("ad-hoc defender needs a pilot estimate")
        if self.kind in (STRUCTURE_AWARE, PERFECT_AWARE) and self.defender_pgm is None:
            raise ValueError(f"{self.kind} defender needs a generator")


def estimate_via_pilots(perturb, pilot_sampler, n_pilots: int,
                        rng: np.random.Generator, batch: int = 4096) -> PilotEstimate:
    """Average (received - known transmitted) over pilot transmissions.

    pilot_sampler(n, rng) -> (receivable y0, known reference x) with
    y0 - x the channel noise, so each observation is noise + perturbation.
    """
    if n_pilots <= 0:
        raise ValueError("n_pilots must be positive")
    total = None
    sq_total = 0.0
    done = 0
    while done < n_pilots:
        b = min(batch, n_pilots - done)
        y0, ref = pilot_sampler(b, rng)
        obs = (perturb(y0, rng) if perturb is not None else y0) - ref
        total = obs.sum(axis=0) + (0.0 if total is None else total)
        sq_total += float(np.sum(obs * obs))
        done += b
    delta_hat = (total / n_pilots).astype(np.float32)
    residual = sq_total / n_pilots - float(np.sum(delta_hat ** 2))
    return PilotEstimate(delta_hat, n_pilots, residual)


def subtract_defense(knowledge: DefenderKnowledge):
    """(y, rng) -> y minus the defender's perturbation guess.

    Ad hoc subtracts the pilot estimate; structure-/perfect-aware subtract a
    fresh-trigger draw from the defender's generator per received signal.
    """
    if knowledge.kind == AD_HOC:
        delta_hat = knowledge.pilot_estimate.delta_hat

        def defend(y, rng):
            return (np.atleast_2d(y) - delta_hat).astype(np.float32).reshape(np.shape(y))
    else:
        gen = knowledge.defender_pgm

        def defend(y, rng):
            y2 = np.atleast_2d(y)
            z = sample_trigger(gen.trigger_dim, rng, n=len(y2))
            return (y2 - gen.generate(z)).astype(np.float32).reshape(np.shape(y))
    return defend


@dataclass
class AdvTrainConfig:
    epochs: int = 30
    clean_per_epoch: int = 98304
    adv_per_epoch: int = 1024
    batch: int = 256
    lr: float = 1e-3
    final_lr: float = 1e-4            # last third of the epochs anneals to this
    train_ebn0_db: tuple = (2.0, 12.0)  # per-sample uniform draw (scalar = fixed)


def adversarial_training(system: AutoencoderSystem, attack_source,
                         cfg: AdvTrainConfig, rng: np.random.Generator) -> AutoencoderSystem:
    """Harden the autoencoder receiver: reinitialize the decoder and retrain,
    extending each epoch's data with perturbed receptions from attack_source
    (the pilot-estimated UAP or the defender's own generator); the encoder is
    frozen so the deployed constellation is unchanged.

    attack_source: (y, rng) -> perturbed y, or None for a clean retrain.
    """
    decoder = build_decoder(rng, system.m, system.n_complex,
                            system.decoder.layers[0].n_out)
    hardened = AutoencoderSystem(system.encoder, decoder, system.n_complex, system.k)
    opt = Adam(decoder, cfg.lr)
    anneal_at = (2 * cfg.epochs) // 3
    span = cfg.train_ebn0_db if isinstance(cfg.train_ebn0_db, tuple) \
        else (cfg.train_ebn0_db, cfg.train_ebn0_db)

    def receptions(n):
        s = rng.integers(0, system.m, size=n)
        x = system.encode(s)
        ebn0 = rng.uniform(*span, size=(n, 1))
        sigma = np.sqrt(1.0 / (2.0 * system.code_rate * 10.0 ** (ebn0 / 10.0)))
        return (x + sigma * rng.normal(size=x.shape)).astype(np.float32), s

    adv_x: list[np.ndarray] = []
    adv_s: list[np.ndarray] = []
    for epoch in range(cfg.epochs):
        if epoch == anneal_at:
            opt = Adam(decoder, cfg.final_lr)
        xs, ss = receptions(cfg.clean_per_epoch)
        if adv_x:
            xs = np.concatenate([xs] + adv_x)
            ss = np.concatenate([ss] + adv_s)
        order = rng.permutation(len(xs))
        for lo in range(0, len(xs), cfg.batch):
            idx = order[lo:lo + cfg.batch]
            logits = decoder.forward_logits(xs[idx])
            loss, dlogits = cross_entropy_and_grad(logits, ss[idx])
            if not math.isfinite(loss):
                raise DivergedError("adversarial training diverged")
            decoder.backward(dlogits.astype(np.float32), from_logits=True)
            opt.step()
        if attack_source is not None:
            ya, sa = receptions(cfg.adv_per_epoch)
            adv_x.append(attack_source(ya, rng))
            adv_s.append(sa)
    return hardened


def adversarial_training_classifier(ds, attack_source, rng: np.random.Generator,
                                    epochs: int = 6, adv_per_epoch: int = 2048,
                                    batch: int = 64, lr: float = 1e-3, arch=None):
    """Alg.-style hardening for the modulation classifier: per-epoch dataset
    extension with perturbed copies of training examples."""
    from .systems.modulation import DESK, build_classifier
    model = build_classifier(rng, len(ds.mods), arch or DESK)
    opt = Adam(model, lr)
    xs, ls = ds.x, ds.labels
    for _ in range(epochs):
        order = rng.permutation(len(xs))
        for lo in range(0, len(xs), batch):
            idx = order[lo:lo + batch]
            loss, dlogits = cross_entropy_and_grad(model.forward_logits(xs[idx]), ls[idx])
            if not math.isfinite(loss):
                raise DivergedError("adversarial training diverged")
            model.backward(dlogits.astype(np.float32), from_logits=True)
            opt.step()
        if attack_source is not None:
            pick = rng.integers(0, len(ds.x), size=adv_per_epoch)
            xs = np.concatenate([xs, attack_source(ds.x[pick], rng)])
            ls = np.concatenate([ls, ds.labels[pick]])
    return model


def adversarial_training_ofdm(frames, bits, attack_source, rng: np.random.Generator,
                              stages=((1e-3, 14), (2e-4, 8)),
                              adv_per_epoch: int = 4096, batch: int = 256):
    """Alg.-style hardening for the OFDM detector (per-epoch dataset extension,
    staged learning rate like the victim's own training)."""
    from .systems.ofdm import build_detector
    model = build_detector(rng)
    xs, ts = frames, bits.astype(np.float32)
    for lr, epochs in stages:
        opt = Adam(model, lr)
        for _ in range(epochs):
            order = rng.permutation(len(xs))
            for lo in range(0, len(xs), batch):
                idx = order[lo:lo + batch]
                loss, dout = mse_and_grad(model.forward(xs[idx]), ts[idx])
                if not math.isfinite(loss):
                    raise DivergedError("adversarial training diverged")
                model.backward(dout.astype(np.float32))
                opt.step()
            if attack_source is not None:
                pick = rng.integers(0, len(frames), size=adv_per_epoch)
                xs = np.concatenate([xs, attack_source(frames[pick], rng)])
                ts = np.concatenate([ts, bits[pick].astype(np.float32)])
    return model


def evaluate_defense(eval_fn, sweep_values, n_trials: int, rng: np.random.Generator,
                     perturb, defend, metric: str = "metric") -> list[dict]:
    """Per-sweep-point estimates for clean / attack / attack+defense /
    defense-only (defense pipeline active, no attack).

    eval_fn(sweep_value, n, rng, perturb, defend) -> Estimate.
    """
    conditions = [("clean", None, None)]
    if perturb is not None:
        conditions.append(("attack", perturb, None))
    if perturb is not None and defend is not None:
        conditions.append(("defended", perturb, defend))
    if defend is not None:
        conditions.append(("defense_only", None, defend))
    rows = []
    for value in sweep_values:
        for name, p, d in conditions:
            est: Estimate = eval_fn(value, n_trials, rng, p, d)
            rows.append({"sweep": value, "metric": f"{metric}_{name}",
                         "estimate": est.value, "ci_low": est.ci_low,
                         "ci_high": est.ci_high, "n": est.n})
    return rows
