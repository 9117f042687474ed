"""Black-box substitute models: architectures the attacker trains on the same
task/data in place of the unknown victim."""

from __future__ import annotations

import numpy as np

from ..nn import (Conv2d, Dense, Elu, Flatten, Model, PowerNorm, Relu, Reshape,
                  Sigmoid, Softmax)
from . import ofdm as ofdm_mod
from .autoencoder import AeTrainConfig, AutoencoderSystem, train_autoencoder
from .modulation import SAMPLES, ModulationDataset


def build_substitute_encoder(rng: np.random.Generator, m: int = 16,
                             n_complex: int = 7) -> Model:
    return Model([
        Dense(m, 16, rng), Elu(),
        Reshape((1, 1, 16)),
        Conv2d(1, 16, (1, 6), (1, 1), (0, 3), rng), Relu(),
        Flatten(),  # 16 * 17 = 272
        Dense(272, 2 * n_complex, rng), PowerNorm(n_complex),
    ], (m,))


def build_substitute_decoder(rng: np.random.Generator, m: int = 16,
                             n_complex: int = 7) -> Model:
    # conv stack: (1,2,7) -> (16,3,7) -> (8,4,5)
    return Model([
        Reshape((1, 2, n_complex)),
        Conv2d(1, 16, (2, 3), (1, 1), (1, 1), rng), Relu(),
        Conv2d(16, 8, (2, 3), (1, 1), (1, 0), rng), Relu(),
        Flatten(),
        Dense(160, 112, rng), Relu(),
        Dense(112, 32, rng),
        Dense(32, m, rng), Softmax(),
    ], (2 * n_complex,))


def train_substitute_autoencoder(rng: np.random.Generator,
                                 cfg: AeTrainConfig | None = None) -> AutoencoderSystem:
    cfg = cfg or AeTrainConfig()
    system = AutoencoderSystem(build_substitute_encoder(rng), build_substitute_decoder(rng),
                               cfg.n_complex, cfg.k)
    return train_autoencoder(cfg, rng, system=system)


def build_substitute_classifier(rng: np.random.Generator, n_classes: int) -> Model:
    dims = (2 * SAMPLES, 1024, 1024, 512, 128)
    layers = []
    for a, b in zip(dims[:-1], dims[1:]):
        layers += [Dense(a, b, rng), Relu()]
    layers += [Dense(dims[-1], n_classes, rng), Softmax()]
    return Model(layers, (2 * SAMPLES,))


def train_substitute_classifier(ds: ModulationDataset, rng: np.random.Generator,
                                stages=((1e-3, 10), (2e-4, 6)),
                                batch: int = 64) -> Model:
    from ..nn import Adam, cross_entropy_and_grad
    model = build_substitute_classifier(rng, len(ds.mods))
    for lr, epochs in stages:
        opt = Adam(model, lr)
        for _ in range(epochs):
            order = rng.permutation(len(ds))
            for lo in range(0, len(ds), batch):
                idx = order[lo:lo + batch]
                _, dlogits = cross_entropy_and_grad(model.forward_logits(ds.x[idx]),
                                                    ds.labels[idx])
                model.backward(dlogits.astype(np.float32), from_logits=True)
                opt.step()
    return model


def build_substitute_ofdm(rng: np.random.Generator) -> Model:
    # (1,4,64) -> conv(32,(2,8),s(2,1),p(0,1)) -> (32,2,59) -> conv(64,(2,8),p(0,1)) -> (64,1,54)
    return Model([
        Reshape((1, 4, 64)),
        Conv2d(1, 32, (2, 8), (2, 1), (0, 1), rng), Relu(),
        Conv2d(32, 64, (2, 8), (1, 1), (0, 1), rng), Relu(),
        Flatten(),  # 3456
        Dense(3456, 500, rng), Relu(),
        Dense(500, 250, rng), Relu(),
        Dense(250, 120, rng), Relu(),
        Dense(120, ofdm_mod.N_OUT, rng), Sigmoid(),
    ], (ofdm_mod.FRAME_DIM,))


def train_substitute_ofdm(frames: np.ndarray, bits: np.ndarray,
                          rng: np.random.Generator, epochs: int = 10,
                          batch: int = 128, lr: float = 1e-3) -> Model:
    from ..nn import Adam, mse_and_grad
    model = build_substitute_ofdm(rng)
    opt = Adam(model, lr)
    targets = bits.astype(np.float32)
    for _ in range(epochs):
        order = rng.permutation(len(frames))
        for lo in range(0, len(frames), batch):
            idx = order[lo:lo + batch]
            _, dout = mse_and_grad(model.forward(frames[idx]), targets[idx])
            model.backward(dout.astype(np.float32))
            opt.step()
    return model
