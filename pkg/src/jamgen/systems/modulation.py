"""Synthetic modulation-recognition task: 8 digital modulations, 128 complex
samples per example, and the two-stage convolutional classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedError
from ..nn import (Adam, Conv2d, Dense, LeakyRelu, Model, Reshape, Softmax,
                  cross_entropy_and_grad)
from ..signal_core import snr_to_noise_variance
from .metrics import Estimate, binomial_estimate

SAMPLES = 128          # complex samples per example
SPS = 8                # samples per symbol
RRC_ROLLOFF = 0.35
RRC_SPAN = 6           # symbols each side of the peak
FSK_INDEX = 0.5
GFSK_BT = 0.35

DIGITAL_MODS = ("BPSK", "QPSK", "8PSK", "QAM16", "QAM64", "PAM4", "CPFSK", "GFSK")


def _psk(order: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(order) / order)


def _qam(order: int) -> np.ndarray:
    side = int(round(math.sqrt(order)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


_CONSTELLATIONS = {
    "BPSK": np.array([1.0 + 0j, -1.0 + 0j]),
    "QPSK": _psk(4) * np.exp(1j * np.pi / 4),
    "8PSK": _psk(8),
    "QAM16": _qam(16),
    "QAM64": _qam(64),
    "PAM4": np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(5.0) + 0j,
}


def rrc_taps(sps: int = SPS, span: int = RRC_SPAN, beta: float = RRC_ROLLOFF) -> np.ndarray:
    """Unit-energy root-raised-cosine taps."""
    n = span * sps
    t = np.arange(-n, n + 1, dtype=float) / sps
    taps = np.empty_like(t)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 + beta * (4.0 / np.pi - 1.0)
        elif abs(abs(ti) - 1.0 / (4.0 * beta)) < 1e-12:
            taps[i] = (beta / np.sqrt(2.0)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta)))
        else:
            num = np.sin(np.pi * ti * (1 - beta)) + 4 * beta * ti * np.cos(np.pi * ti * (1 + beta))
            taps[i] = num / (np.pi * ti * (1 - (4 * beta * ti) ** 2))
    return taps / np.sqrt(np.sum(taps ** 2))


_RRC = rrc_taps()


def _linear_waveform(mod: str, rng: np.random.Generator) -> np.ndarray:
    const = _CONSTELLATIONS[mod]
    n_sym = SAMPLES // SPS + 2 * RRC_SPAN
    syms = const[rng.integers(0, len(const), size=n_sym)]
    up = np.zeros(n_sym * SPS, dtype=complex)
    up[::SPS] = syms
    shaped = np.convolve(up, _RRC)
    start = RRC_SPAN * SPS  # steady state after the filter ramp-up
    return shaped[start:start + SAMPLES]


def _fsk_waveform(mod: str, rng: np.random.Generator) -> np.ndarray:
    n_sym = SAMPLES // SPS + 4
    bits = rng.integers(0, 2, size=n_sym) * 2.0 - 1.0
    freq = np.repeat(bits, SPS)
    if mod == "GFSK":
        span = 2 * SPS
        t = np.arange(-span, span + 1, dtype=float) / SPS
        alpha = math.sqrt(math.log(2.0)) / (2.0 * math.pi * GFSK_BT)
        g = np.exp(-(t ** 2) / (2.0 * alpha ** 2))
        freq = np.convolve(freq, g / g.sum(), mode="same")
    phase = np.cumsum(np.pi * FSK_INDEX * freq / SPS)
    wave = np.exp(1j * phase)
    return wave[2 * SPS:2 * SPS + SAMPLES]


def modulate(mod: str, rng: np.random.Generator) -> np.ndarray:
    """One unit-power 128-complex-sample baseband waveform of the given scheme."""
    if mod in _CONSTELLATIONS:
        wave = _linear_waveform(mod, rng)
    elif mod in ("CPFSK", "GFSK"):
        wave = _fsk_waveform(mod, rng)
    else:
        raise ValueError(f"unsupported modulation {mod!r}")
    return wave / np.sqrt(np.mean(np.abs(wave) ** 2))


@dataclass
class ModulationDataset:
    x: np.ndarray                 # (n, 256) float32, 128 I then 128 Q
    labels: np.ndarray            # (n,) int64 indices into mods
    snr_db: np.ndarray            # (n,) float32
    mods: tuple
    clean: np.ndarray | None = None

    def __len__(self):
        return len(self.labels)

    def subset(self, mask) -> "ModulationDataset":
        return ModulationDataset(self.x[mask], self.labels[mask], self.snr_db[mask],
                                 self.mods, None if self.clean is None else self.clean[mask])

    def at_snr(self, snr_db: float) -> "ModulationDataset":
        return self.subset(np.isclose(self.snr_db, snr_db))


def gen_modulation_dataset(mods, snr_db, count: int, rng: np.random.Generator,
                           include_clean: bool = False) -> ModulationDataset:
    """Balanced synthetic dataset; snr_db may be a scalar or a sequence cycled
    across examples (mixed-SNR sets)."""
    mods = tuple(mods)
    for mod in mods:
        if mod not in DIGITAL_MODS:
            raise ValueError(f"unsupported modulation {mod!r}")
    snrs = np.atleast_1d(np.asarray(snr_db, dtype=float))
    x = np.empty((count, 2 * SAMPLES), dtype=np.float32)
    labels = np.empty(count, dtype=np.int64)
    ex_snr = np.empty(count, dtype=np.float32)
    clean = np.empty((count, 2 * SAMPLES), dtype=np.float32) if include_clean else None
    order = rng.permutation(count)
    for idx, slot in enumerate(order):
        label = idx % len(mods)
        snr = snrs[(idx // len(mods)) % len(snrs)]
        wave = modulate(mods[label], rng)
        sigma = math.sqrt(snr_to_noise_variance(snr))
        noisy = wave + sigma * (rng.normal(size=SAMPLES) + 1j * rng.normal(size=SAMPLES))
        if include_clean:
            clean[slot] = np.concatenate([wave.real, wave.imag]).astype(np.float32)
        x[slot] = np.concatenate([noisy.real, noisy.imag]).astype(np.float32)
        labels[slot] = label
        ex_snr[slot] = snr
    return ModulationDataset(x, labels, ex_snr, mods, clean)


# (kernels, dense width) for the two-stage classifier
TABLE_II_FULL = {"kernels": (256, 80), "dense": 256}
DESK = {"kernels": (64, 40), "dense": 512}


def build_classifier(rng: np.random.Generator, n_classes: int,
                     arch: dict = DESK) -> Model:
    k1, k2 = arch["kernels"]
    # each conv: width padding 2 per side, kernel width 3 -> net +2 columns
    flat = k2 * 1 * (SAMPLES + 4)  # 80*132 = 10560 at Table II widths
    return Model([
        Reshape((1, 2, SAMPLES)),
        Conv2d(1, k1, (1, 3), (1, 1), (0, 2), rng), LeakyRelu(),
        Conv2d(k1, k2, (2, 3), (1, 1), (0, 2), rng), LeakyRelu(),
        Reshape((flat,)),
        Dense(flat, arch["dense"], rng), LeakyRelu(),
        Dense(arch["dense"], n_classes, rng), Softmax(),
    ], (2 * SAMPLES,))


@dataclass
class ClassifierTrainConfig:
    epochs: int = 8
    batch: int = 64
    lr: float = 1e-3
    arch: dict = field(default_factory=lambda: dict(DESK))


def train_classifier(ds: ModulationDataset, cfg: ClassifierTrainConfig,
                     rng: np.random.Generator) -> Model:
    model = build_classifier(rng, len(ds.mods), cfg.arch)
    opt = Adam(model, cfg.lr)
    n = len(ds)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch):
            idx = order[lo:lo + cfg.batch]
            logits = model.forward_logits(ds.x[idx])
            loss, dlogits = cross_entropy_and_grad(logits, ds.labels[idx])
            if not math.isfinite(loss):
                raise DivergedError("classifier training diverged")
            model.backward(dlogits.astype(np.float32), from_logits=True)
            opt.step()
    return model


def classify(model: Model, x: np.ndarray, batch: int = 512) -> np.ndarray:
    out = np.empty(len(x), dtype=np.int64)
    for lo in range(0, len(x), batch):
        out[lo:lo + batch] = np.argmax(model.forward_logits(x[lo:lo + batch]), axis=-1)
    return out


def evaluate_accuracy(model: Model, x: np.ndarray, labels: np.ndarray,
                      rng: np.random.Generator | None = None, perturb=None,
                      defend=None) -> Estimate:
    x = x.astype(np.float32, copy=True)
    if perturb is not None:
        x = perturb(x, rng)
    if defend is not None:
        x = defend(x, rng)
    correct = int(np.sum(classify(model, x) == labels))
    return binomial_estimate(correct, len(labels))
