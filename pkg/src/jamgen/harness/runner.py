"""Experiment orchestration: deterministic victim/attack/defense construction
from one master seed, sweep evaluation, CSV output.

A Workspace memoizes trained artifacts per (master seed, stage) so the
acceptance suite and repeated runs share them; `run()` drives one
ExperimentConfig end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .. import defenses as dfs
from ..attack import (AttackConfig, AutoencoderTarget, ModulationTarget,
                      OfdmTarget, UapTrainConfig, attack_config, jammer,
                      train_pgm, train_single_uap)
from ..errors import ConfigError, MissingArtifactError
from ..gan import train_joint
from ..signal_core import ebn0_to_noise_variance, psr_to_power_budget, snr_to_noise_variance
from ..systems import modulation as md
from ..systems import ofdm
from ..systems import substitutes as subs
from ..systems.autoencoder import AeTrainConfig, evaluate_bler, train_autoencoder
from ..systems.metrics import Estimate
from .config import ExperimentConfig
from .results import ResultTable
from .seeds import stage_rng

AE_PILOT_EBN0 = 7.0
MOD_PILOT_SNR = 10.0
OFDM_PILOT_SNR = 20.0
N_PILOTS = 10000

# Desk-scale training schedules (single-core container); the paper-scale
# hyperparameters live next to each subsystem.
MOD_TRAIN_SNR_GRID = tuple(range(-20, 20, 2))
MOD_TRAIN_COUNT = 12000
OFDM_TRAIN_SNR_GRID = tuple(range(5, 26, 2))
OFDM_TRAIN_COUNT = 60000
OFDM_TRAIN_STAGES = ((1e-3, 20), (2e-4, 10))

PGM_PRESETS = {
    "autoencoder": dict(epochs=20, steps_per_epoch=400, batch=64, lr=3e-3),
    "modulation": dict(epochs=16, steps_per_epoch=150, batch=32, lr=1e-3),
    "ofdm": dict(epochs=16, steps_per_epoch=150, batch=32, lr=3e-3,
                 beta_warmup=(16.0, 0.4)),
}
# scenario default for the diversity weight when the config does not pin one
DEFAULT_BETA = {"autoencoder": 0.1, "modulation": 0.1, "ofdm": 0.5}
UAP_PRESETS = {
    "autoencoder": dict(epochs=20, steps_per_epoch=400, batch=64, lr=5e-2),
    "modulation": dict(epochs=16, steps_per_epoch=150, batch=32, lr=3e-2),
    "ofdm": dict(epochs=10, steps_per_epoch=150, batch=32, lr=3e-2),
}


@dataclass
class ScenarioBundle:
    scenario: str
    metric: str
    victim: object
    target: object
    eval_fn: Callable          # (sweep_value, n, rng, perturb, defend) -> Estimate
    pilot_sampler: Callable    # (n, rng) -> (receivable y0, known reference)
    n_complex: int
    train_data: object = None

    def budget(self, psr_db: float) -> float:
        return psr_to_power_budget(psr_db, 1.0, self.n_complex)


def build_autoencoder_bundle(master: int) -> ScenarioBundle:
    system = train_autoencoder(AeTrainConfig(), stage_rng(master, "victim-autoencoder"))

    def eval_fn(ebn0, n, rng, perturb, defend):
        return evaluate_bler(system, float(ebn0), n, rng, perturb, defend)

    sigma = math.sqrt(ebn0_to_noise_variance(AE_PILOT_EBN0, system.code_rate))

    def pilot_sampler(n, rng):
        s = rng.integers(0, system.m, size=n)
        x = system.encode(s)
        y0 = (x + rng.normal(0.0, sigma, size=x.shape)).astype(np.float32)
        return y0, x

    return ScenarioBundle("autoencoder", "bler", system,
                          AutoencoderTarget(system, ebn0_range=(0.0, 14.0)),
                          eval_fn, pilot_sampler, system.n_complex)


def build_modulation_bundle(master: int, desk: bool = True) -> ScenarioBundle:
    rng = stage_rng(master, "victim-modulation")
    train = md.gen_modulation_dataset(md.DIGITAL_MODS, list(MOD_TRAIN_SNR_GRID),
                                      MOD_TRAIN_COUNT, rng)
    arch = md.DESK if desk else md.TABLE_II_FULL
    clf = md.train_classifier(train, md.ClassifierTrainConfig(arch=dict(arch)), rng)
    pool = md.gen_modulation_dataset(md.DIGITAL_MODS, [MOD_PILOT_SNR], 4000,
                                     stage_rng(master, "modulation-pool"))

    def eval_fn(snr, n, rng_, perturb, defend):
        ds = md.gen_modulation_dataset(md.DIGITAL_MODS, [float(snr)], n, rng_)
        return md.evaluate_accuracy(clf, ds.x, ds.labels, rng_, perturb, defend)

    def pilot_sampler(n, rng_):
        ds = md.gen_modulation_dataset(md.DIGITAL_MODS, [MOD_PILOT_SNR], n, rng_,
                                       include_clean=True)
        return ds.x, ds.clean

    return ScenarioBundle("modulation", "accuracy", clf,
                          ModulationTarget(clf, pool.x, pool.labels),
                          eval_fn, pilot_sampler, md.SAMPLES, train_data=train)


def build_ofdm_bundle(master: int) -> ScenarioBundle:
    rng = stage_rng(master, "victim-ofdm")
    frames, bits = ofdm.make_ofdm_dataset(OFDM_TRAIN_COUNT, list(OFDM_TRAIN_SNR_GRID), rng)
    from ..nn import Adam, mse_and_grad
    detector = ofdm.build_detector(rng)
    targets = bits.astype(np.float32)
    for lr, epochs in OFDM_TRAIN_STAGES:
        opt = Adam(detector, lr)
        for _ in range(epochs):
            order = rng.permutation(len(frames))
            for lo in range(0, len(frames), 256):
                idx = order[lo:lo + 256]
                _, dout = mse_and_grad(detector.forward(frames[idx]), targets[idx])
                detector.backward(dout.astype(np.float32))
                opt.step()

    def eval_fn(snr, n, rng_, perturb, defend):
        return ofdm.evaluate_ber(detector, float(snr), n, rng_, perturb, defend)

    sigma = math.sqrt(snr_to_noise_variance(OFDM_PILOT_SNR))

    def pilot_sampler(n, rng_):
        pilot_bits = rng_.integers(0, 2, size=(n, ofdm.N_BITS))
        h = ofdm.sample_channel(rng_, n)
        ref = ofdm.transmit_frames(pilot_bits, h, None, rng_)
        y0 = (ref + sigma * rng_.normal(size=ref.shape)).astype(np.float32)
        return y0, ref

    return ScenarioBundle("ofdm", "ber", detector,
                          OfdmTarget(detector, snr_db=(5.0, 25.0)),
                          eval_fn, pilot_sampler, 2 * ofdm.N_SC,
                          train_data=(frames, bits))


_BUILDERS = {"autoencoder": build_autoencoder_bundle,
             "modulation": build_modulation_bundle,
             "ofdm": build_ofdm_bundle}


def build_substitute_target(bundle: ScenarioBundle, master: int):
    """Train the Table-IV substitute on the same task and wrap it as the
    black-box attack surface.

    The modulation substitute trains on its own synthetic draw concentrated
    around the attack operating point (the task data is synthesizable by the
    attacker); the dense architecture needs that focus to reach parity with
    the convolutional victim.
    """
    rng = stage_rng(master, f"substitute-{bundle.scenario}")
    if bundle.scenario == "autoencoder":
        sub = subs.train_substitute_autoencoder(rng)
        return AutoencoderTarget(sub, ebn0_range=(0.0, 14.0))
    if bundle.scenario == "modulation":
        sub_ds = md.gen_modulation_dataset(
            md.DIGITAL_MODS, [MOD_PILOT_SNR - 2.0, MOD_PILOT_SNR, MOD_PILOT_SNR + 2.0],
            32000, rng)
        sub = subs.train_substitute_classifier(
            sub_ds, rng, stages=((1e-3, 20), (2e-4, 10), (5e-5, 5)), batch=128)
        pool = md.gen_modulation_dataset(md.DIGITAL_MODS, [MOD_PILOT_SNR], 4000,
                                         stage_rng(master, "substitute-mod-pool"))
        return ModulationTarget(sub, pool.x, pool.labels)
    frames, bits = bundle.train_data
    sub = subs.train_substitute_ofdm(frames[:20000], bits[:20000], rng)
    return OfdmTarget(sub, snr_db=(5.0, 25.0))


def pgm_config(bundle: ScenarioBundle, spec_psr: float, alpha: float = 0.0,
               beta: float = 0.1, **overrides) -> AttackConfig:
    preset = dict(PGM_PRESETS[bundle.scenario])
    preset.update(overrides)
    return attack_config(bundle.scenario, desk=True, psr_db=spec_psr,
                         alpha=alpha, beta=beta, **preset)


def uap_config(bundle: ScenarioBundle, spec_psr: float, **overrides) -> UapTrainConfig:
    preset = dict(UAP_PRESETS[bundle.scenario])
    preset.update(overrides)
    return UapTrainConfig(psr_db=spec_psr, **preset)


class Workspace:
    """Deterministic artifact cache over one master seed."""

    def __init__(self, master_seed: int, desk: bool = True):
        self.master = master_seed
        self.desk = desk
        self._cache: dict = {}

    def _memo(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def bundle(self, scenario: str) -> ScenarioBundle:
        if scenario not in _BUILDERS:
            raise ConfigError(f"unknown scenario {scenario!r}")
        if scenario == "modulation":
            return self._memo(("bundle", scenario),
                              lambda: _BUILDERS[scenario](self.master, self.desk))
        return self._memo(("bundle", scenario), lambda: _BUILDERS[scenario](self.master))

    def pgm(self, scenario: str, psr_db: float, alpha: float = 0.0,
            beta: float | None = None, black_box: bool = False,
            stage: str = "attacker", **overrides):
        if beta is None:
            beta = DEFAULT_BETA[scenario]

        def build():
            bundle = self.bundle(scenario)
            target = (self._memo(("sub-target", scenario),
                                 lambda: build_substitute_target(bundle, self.master))
                      if black_box else bundle.target)
            cfg = pgm_config(bundle, psr_db, alpha=alpha, beta=beta, **overrides)
            rng = stage_rng(self.master, f"pgm-{stage}-{scenario}-{psr_db}-{alpha}-{beta}"
                                         f"-{black_box}")
            if alpha > 0:
                return train_joint(target, cfg, rng)
            return train_pgm(target, cfg, rng), None
        return self._memo(("pgm", scenario, psr_db, alpha, beta, black_box, stage,
                           tuple(sorted(overrides.items()))), build)

    def uap(self, scenario: str, psr_db: float, stage: str = "attacker", **overrides):
        def build():
            bundle = self.bundle(scenario)
            cfg = uap_config(bundle, psr_db, **overrides)
            rng = stage_rng(self.master, f"uap-{stage}-{scenario}-{psr_db}")
            return train_single_uap(bundle.target, cfg, rng)
        return self._memo(("uap", scenario, psr_db, stage,
                           tuple(sorted(overrides.items()))), build)

    def pilot_estimate(self, scenario: str, perturber, label: str,
                       n_pilots: int = N_PILOTS) -> dfs.PilotEstimate:
        def build():
            bundle = self.bundle(scenario)
            rng = stage_rng(self.master, f"pilots-{scenario}-{label}")
            return dfs.estimate_via_pilots(perturber, bundle.pilot_sampler,
                                           n_pilots, rng)
        return self._memo(("pilots", scenario, label, n_pilots), build)

    def defender_pgm(self, scenario: str, psr_db: float, beta: float | None = None,
                     stage: str = "defender", **overrides):
        """Structure-aware defender: same architecture/protocol, her own run."""
        gen, _ = self.pgm(scenario, psr_db, beta=beta, stage=stage, **overrides)
        return gen


def _phase_for(config: ExperimentConfig) -> str:
    if getattr(config, "phase_policy", None):
        return config.phase_policy
    return "none" if config.defense.kind != "none" else "per-transmission"


def build_attack(ws: Workspace, config: ExperimentConfig, phase: str):
    """Returns (perturber or None, artifact dict)."""
    spec = config.attack
    bundle = ws.bundle(config.scenario)
    if spec.kind == "none":
        return None, {}
    if spec.kind == "single_uap":
        uap = ws.uap(config.scenario, spec.psr_db)
        return uap.perturber(phase), {"uap": uap, "p": uap.power_budget}
    gen, disc = ws.pgm(config.scenario, spec.psr_db, alpha=spec.alpha,
                       beta=spec.beta, black_box=spec.black_box)
    return gen.perturber(phase), {"gen": gen, "disc": disc, "p": gen.power_budget}


def build_defense(ws: Workspace, config: ExperimentConfig, attack_perturber,
                  artifacts: dict):
    """Returns (defend callable or None, replacement eval_fn or None)."""
    spec = config.defense
    bundle = ws.bundle(config.scenario)
    if spec.kind == "none":
        return None, None
    if spec.kind == "subtract":
        if config.attack.kind == "single_uap" or spec.knowledge == dfs.AD_HOC:
            label = f"{config.attack.kind}-{config.attack.psr_db}-{config.attack.beta}"
            est = ws.pilot_estimate(config.scenario,
                                    lambda y, rng: attack_perturber(y, rng), label)
            knowledge = dfs.DefenderKnowledge(dfs.AD_HOC, pilot_estimate=est)
        elif spec.knowledge == dfs.STRUCTURE_AWARE:
            gen_def = ws.defender_pgm(config.scenario, config.attack.psr_db,
                                      beta=config.attack.beta)
            knowledge = dfs.DefenderKnowledge(dfs.STRUCTURE_AWARE, defender_pgm=gen_def)
        else:
            if "gen" not in artifacts:
                raise ConfigError("perfect-aware defense requires a pgm attack")
            knowledge = dfs.DefenderKnowledge(dfs.PERFECT_AWARE,
                                              defender_pgm=artifacts["gen"])
        return dfs.subtract_defense(knowledge), None
    # adversarial training: retrain the victim with attack-sourced augmentation
    # (the defender knows the jammer is phase-unsynchronized, so augmentation
    # samples span the rotation orbit)
    if config.attack.kind == "single_uap":
        est = ws.pilot_estimate(config.scenario,
                                lambda y, rng: attack_perturber(y, rng),
                                f"single_uap-{config.attack.psr_db}-{config.attack.beta}")
        delta_hat = est.delta_hat

        def attack_source(y, rng):
            from ..signal_core import rotate_phase
            theta = rng.uniform(0.0, 2.0 * np.pi, size=len(y))
            return (y + rotate_phase(np.broadcast_to(delta_hat, y.shape),
                                     theta)).astype(np.float32)
    else:
        gen_def = ws.defender_pgm(config.scenario, config.attack.psr_db,
                                  beta=config.attack.beta)
        attack_source = gen_def.perturber("per-transmission")
    rng = stage_rng(ws.master, f"adv-train-{config.scenario}-{config.attack.kind}")
    if config.scenario == "autoencoder":
        hardened = dfs.adversarial_training(bundle.victim, attack_source,
                                            dfs.AdvTrainConfig(), rng)

        def eval_fn(ebn0, n, rng_, perturb, defend):
            return evaluate_bler(hardened, float(ebn0), n, rng_, perturb, defend)
    elif config.scenario == "modulation":
        hardened = dfs.adversarial_training_classifier(bundle.train_data, attack_source, rng)

        def eval_fn(snr, n, rng_, perturb, defend):
            ds = md.gen_modulation_dataset(md.DIGITAL_MODS, [float(snr)], n, rng_)
            return md.evaluate_accuracy(hardened, ds.x, ds.labels, rng_, perturb, defend)
    else:
        frames, bits = bundle.train_data
        hardened = dfs.adversarial_training_ofdm(frames, bits, attack_source, rng)

        def eval_fn(snr, n, rng_, perturb, defend):
            return ofdm.evaluate_ber(hardened, float(snr), n, rng_, perturb, defend)
    return None, eval_fn


def load_victim_bundle(config: ExperimentConfig, master: int) -> ScenarioBundle:
    """Rebuild a bundle around victim weights referenced in config.artifacts."""
    from ..nn import load_model
    from ..systems.autoencoder import AutoencoderSystem
    paths = dict(config.artifacts)
    missing = [p for p in paths.values() if not Path(p).exists()]
    if missing:
        raise MissingArtifactError(", ".join(missing))
    if config.scenario == "autoencoder":
        enc, _ = load_model(paths["encoder"], expect_tag="ae-encoder")
        dec, _ = load_model(paths["decoder"], expect_tag="ae-decoder")
        system = AutoencoderSystem(enc, dec)

        def eval_fn(ebn0, n, rng, perturb, defend):
            return evaluate_bler(system, float(ebn0), n, rng, perturb, defend)

        sigma = math.sqrt(ebn0_to_noise_variance(AE_PILOT_EBN0, system.code_rate))

        def pilot_sampler(n, rng):
            s = rng.integers(0, system.m, size=n)
            x = system.encode(s)
            return (x + rng.normal(0.0, sigma, size=x.shape)).astype(np.float32), x

        return ScenarioBundle("autoencoder", "bler", system,
                              AutoencoderTarget(system, ebn0_range=(0.0, 14.0)),
                              eval_fn, pilot_sampler, system.n_complex)
    raise ConfigError(f"artifact loading not supported for {config.scenario!r}")


def run(config: ExperimentConfig, workspace: Workspace | None = None) -> ResultTable:
    """Evaluate one experiment; deterministic in config.seed."""
    config.validate()
    if not config.sweep:
        raise ConfigError("sweep range must be non-empty")
    ws = workspace or Workspace(config.seed, desk=config.desk_scale)
    if config.artifacts:
        ws._cache[("bundle", config.scenario)] = load_victim_bundle(config, ws.master)
    bundle = ws.bundle(config.scenario)
    phase = _phase_for(config)
    perturber, artifacts = build_attack(ws, config, phase)
    defend, hardened_eval = build_defense(ws, config, perturber, artifacts)
    eval_fn = hardened_eval or bundle.eval_fn

    table = ResultTable()
    # "attack"/"jam" rows run against the undefended victim; "defended" and
    # "defense_only" run the defense pipeline (subtraction stage or hardened
    # replacement model)
    conditions = [("clean", None, None, bundle.eval_fn)]
    if perturber is not None:
        conditions.append(("attack", perturber, None, bundle.eval_fn))
        if config.include_jamming:
            conditions.append(("jam", jammer(artifacts["p"]), None, bundle.eval_fn))
    if defend is not None:
        conditions.append(("defended", perturber, defend, eval_fn))
        conditions.append(("defense_only", None, defend, eval_fn))
    elif hardened_eval is not None:
        conditions.append(("defended", perturber, None, eval_fn))
        conditions.append(("defense_only", None, None, eval_fn))
    for value in config.sweep:
        for name, p, d, fn in conditions:
            rng = stage_rng(config.seed, f"eval-{config.scenario}-{name}-{value}")
            est: Estimate = fn(value, config.trials, rng, p, d)
            table.add(value, f"{bundle.metric}_{name}", est, config.seed)
    if config.out:
        out = Path(config.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out)
    return table
