"""OFDM link with a DNN bit detector.

64 QPSK subcarriers, cyclic prefix 16, one known pilot block plus one data
block per frame.  The detector consumes the 256-real frequency-domain frame
([I,Q of pilot block; I,Q of data block] after CP removal and DFT) and emits
16 sigmoid bit estimates (the first 16 of the 128 transmitted bits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergedError
from ..nn import Adam, Dense, Model, Relu, Sigmoid, mse_and_grad
from ..signal_core import snr_to_noise_variance
from .metrics import Estimate, binomial_estimate

N_SC = 64
CP = 16
N_BITS = 2 * N_SC          # QPSK bits per data block
N_OUT = 16                 # bits the detector reconstructs
FRAME_DIM = 4 * N_SC       # 256 reals
TAP_POWERS_DB = (0.0, -3.0, -6.0)

_SCALE = math.sqrt(N_SC)   # unitary DFT convention: unit average time power


def _qpsk(bits: np.ndarray) -> np.ndarray:
    """(…, 2K) bits -> (…, K) unit-power QPSK symbols."""
    b = bits.reshape(bits.shape[:-1] + (-1, 2))
    return ((1.0 - 2.0 * b[..., 0]) + 1j * (1.0 - 2.0 * b[..., 1])) / math.sqrt(2.0)


def pilot_symbols() -> np.ndarray:
    """Fixed pseudo-random QPSK pilot block shared by every frame."""
    bits = np.random.default_rng(0x0FD).integers(0, 2, size=2 * N_SC)
    return _qpsk(bits)


_PILOT_FREQ = pilot_symbols()


def sample_channel(rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """(n, taps) complex channel draws, exponential power decay, unit total power."""
    powers = 10.0 ** (np.asarray(TAP_POWERS_DB) / 10.0)
    powers = powers / powers.sum()
    taps = (rng.normal(size=(n, len(powers))) + 1j * rng.normal(size=(n, len(powers))))
    return taps * np.sqrt(powers / 2.0)


def _block_time(freq: np.ndarray) -> np.ndarray:
    """Frequency symbols -> CP-prefixed time block(s)."""
    t = np.fft.ifft(freq, axis=-1) * _SCALE
    return np.concatenate([t[..., -CP:], t], axis=-1)


def _rx_frame(time_rx: np.ndarray) -> np.ndarray:
    """CP removal + DFT of both blocks -> (n, 256) float32 frame vectors."""
    yp = np.fft.fft(time_rx[..., CP:CP + N_SC], axis=-1) / _SCALE
    yd = np.fft.fft(time_rx[..., 2 * CP + N_SC:], axis=-1) / _SCALE
    return np.concatenate([yp.real, yp.imag, yd.real, yd.imag],
                          axis=-1).astype(np.float32)


@dataclass
class OfdmFrame:
    pilot_block: np.ndarray    # 128 reals (I then Q)
    data_block: np.ndarray     # 128 reals
    true_bits: np.ndarray      # the N_OUT detector targets
    channel_taps: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.pilot_block, self.data_block])


def transmit_frames(bits: np.ndarray, h: np.ndarray, snr_db: float | None,
                    rng: np.random.Generator) -> np.ndarray:
    """(n, 128) bits through per-frame channels -> (n, 256) received frames."""
    bits = np.atleast_2d(bits)
    h = np.atleast_2d(h)
    n = bits.shape[0]
    if h.shape[1] - 1 > CP:
        raise ValueError(
            f"cyclic prefix {CP} shorter than channel delay spread {h.shape[1] - 1}")
    tp = np.broadcast_to(_block_time(_PILOT_FREQ), (n, N_SC + CP))
    td = _block_time(_qpsk(bits))
    frame_t = np.concatenate([tp, td], axis=-1)
    # linear convolution over the frame; CP absorbs inter-block leakage
    nfft = frame_t.shape[1] + h.shape[1] - 1
    rx = np.fft.ifft(np.fft.fft(frame_t, nfft, axis=-1) *
                     np.fft.fft(h, nfft, axis=-1), axis=-1)[:, :frame_t.shape[1]]
    if snr_db is not None:
        sigma = math.sqrt(snr_to_noise_variance(snr_db))
        rx = rx + sigma * (rng.normal(size=rx.shape) + 1j * rng.normal(size=rx.shape))
    return _rx_frame(rx)


def make_ofdm_frame(bits: np.ndarray, h: np.ndarray, snr_db: float | None,
                    rng: np.random.Generator) -> OfdmFrame:
    bits = np.asarray(bits)
    if bits.shape != (N_BITS,):
        raise ValueError(f"expected {N_BITS} data bits, got shape {bits.shape}")
    vec = transmit_frames(bits[None], np.atleast_2d(h), snr_db, rng)[0]
    return OfdmFrame(vec[:2 * N_SC], vec[2 * N_SC:], bits[:N_OUT].copy(),
                     np.asarray(h).copy())


def make_ofdm_dataset(n: int, snr_db, rng: np.random.Generator):
    """(frames (n,256) float32, target bits (n,16)); snr_db scalar or sequence cycled."""
    snrs = np.atleast_1d(np.asarray(snr_db, dtype=float))
    bits = rng.integers(0, 2, size=(n, N_BITS))
    frames = np.empty((n, FRAME_DIM), dtype=np.float32)
    for i, snr in enumerate(snrs):
        idx = np.arange(i, n, len(snrs))
        h = sample_channel(rng, len(idx))
        frames[idx] = transmit_frames(bits[idx], h, float(snr), rng)
    return frames, bits[:, :N_OUT]


def build_detector(rng: np.random.Generator) -> Model:
    return Model([Dense(FRAME_DIM, 500, rng), Relu(),
                  Dense(500, 250, rng), Relu(),
                  Dense(250, 120, rng), Relu(),
                  Dense(120, N_OUT, rng), Sigmoid()], (FRAME_DIM,))


@dataclass
class DetectorTrainConfig:
    epochs: int = 25
    batch: int = 256
    lr: float = 1e-3


def train_ofdm_detector(frames: np.ndarray, bits: np.ndarray,
                        cfg: DetectorTrainConfig, rng: np.random.Generator) -> Model:
    model = build_detector(rng)
    opt = Adam(model, cfg.lr)
    targets = bits.astype(np.float32)
    n = len(frames)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch):
            idx = order[lo:lo + cfg.batch]
            out = model.forward(frames[idx])
            loss, dout = mse_and_grad(out, targets[idx])
            if not math.isfinite(loss):
                raise DivergedError("detector training diverged")
            model.backward(dout.astype(np.float32))
            opt.step()
    return model


def detect_bits(model: Model, frames: np.ndarray) -> np.ndarray:
    return (model.forward(frames.astype(np.float32)) >= 0.5).astype(np.int8)


def evaluate_ber(model: Model, snr_db: float, n_frames: int,
                 rng: np.random.Generator, perturb=None, defend=None,
                 batch: int = 4096) -> Estimate:
    """Monte-Carlo BER over the detector's N_OUT bits."""
    if n_frames <= 0:
        raise ValueError("n_frames must be positive")
    errors = 0
    done = 0
    while done < n_frames:
        b = min(batch, n_frames - done)
        frames, bits = make_ofdm_dataset(b, snr_db, rng)
        if perturb is not None:
            frames = perturb(frames, rng)
        if defend is not None:
            frames = defend(frames, rng)
        errors += int(np.sum(detect_bits(model, frames) != bits))
        done += b
    return binomial_estimate(errors, n_frames * N_OUT)
