"""Attack surfaces: a frozen victim plus its input domain, exposing exactly
what perturbation training needs.

Duck-typed interface:
  input_dim / n_complex        signal dimensions (2N, N)
  sample_inputs(n, rng)        -> (clean received (n, 2N) float32, loss targets)
  loss_and_input_grad(y, t)    -> (batch-mean victim loss, dloss/dy)
  checksum()                   -> victim parameter fingerprint (mutation guard)
"""

from __future__ import annotations

import numpy as np

from ..nn import Model, cross_entropy_and_grad, mse_and_grad
from ..systems.autoencoder import AutoencoderSystem
from ..systems.modulation import SAMPLES
from ..systems.ofdm import FRAME_DIM, N_SC, make_ofdm_dataset

CLEAN_PREDICTION = "clean-prediction"
TRUE_LABEL = "true-label"


class AutoencoderTarget:
    """Decoder of a trained (7,4) autoencoder; inputs are post-AWGN receptions."""

    def __init__(self, system: AutoencoderSystem, ebn0_range=(0.0, 14.0),
                 target_mode: str = CLEAN_PREDICTION):
        self.system = system
        self.ebn0_range = ebn0_range
        self.target_mode = target_mode
        self.input_dim = 2 * system.n_complex
        self.n_complex = system.n_complex

    def sample_inputs(self, n: int, rng: np.random.Generator):
        s = rng.integers(0, self.system.m, size=n)
        x = self.system.encode(s)
        ebn0 = rng.uniform(*self.ebn0_range, size=(n, 1))
        sigma = np.sqrt(1.0 / (2.0 * self.system.code_rate * 10.0 ** (ebn0 / 10.0)))
        y = (x + sigma * rng.normal(size=x.shape)).astype(np.float32)
        targets = s if self.target_mode == TRUE_LABEL else self.system.decode(y)
        return y, targets

    def loss_and_input_grad(self, y: np.ndarray, targets):
        logits = self.system.decoder.forward_logits(y)
        loss, dlogits = cross_entropy_and_grad(logits, targets)
        return loss, self.system.decoder.backward(dlogits.astype(np.float32),
                                                  from_logits=True)

    def checksum(self) -> int:
        return self.system.checksum()


class ModulationTarget:
    """Modulation classifier over a fixed pool of received examples."""

    def __init__(self, classifier: Model, pool_x: np.ndarray, pool_labels: np.ndarray,
                 target_mode: str = CLEAN_PREDICTION):
        self.classifier = classifier
        self.pool_x = pool_x.astype(np.float32)
        self.pool_labels = np.asarray(pool_labels)
        self.target_mode = target_mode
        self.input_dim = 2 * SAMPLES
        self.n_complex = SAMPLES
        self._clean_pred = None

    def _predictions(self) -> np.ndarray:
        if self._clean_pred is None:
            from ..systems.modulation import classify
            self._clean_pred = classify(self.classifier, self.pool_x)
        return self._clean_pred

    def sample_inputs(self, n: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self.pool_x), size=n)
        targets = (self.pool_labels if self.target_mode == TRUE_LABEL
                   else self._predictions())[idx]
        return self.pool_x[idx], targets

    def loss_and_input_grad(self, y: np.ndarray, targets):
        logits = self.classifier.forward_logits(y)
        loss, dlogits = cross_entropy_and_grad(logits, targets)
        return loss, self.classifier.backward(dlogits.astype(np.float32),
                                              from_logits=True)

    def checksum(self) -> int:
        return self.classifier.param_checksum()


class OfdmTarget:
    """OFDM detector; inputs are fresh frequency-domain frames, MSE loss against
    the detector's own clean outputs."""

    def __init__(self, detector: Model, snr_db=(5.0, 25.0)):
        self.detector = detector
        self.snr_db = snr_db
        self.input_dim = FRAME_DIM
        self.n_complex = 2 * N_SC

    def sample_inputs(self, n: int, rng: np.random.Generator):
        lo, hi = (self.snr_db if isinstance(self.snr_db, tuple)
                  else (self.snr_db, self.snr_db))
        frames, _ = make_ofdm_dataset(n, rng.uniform(lo, hi), rng)
        return frames, self.detector.forward(frames).copy()

    def loss_and_input_grad(self, y: np.ndarray, targets):
        out = self.detector.forward(y)
        loss, dout = mse_and_grad(out, targets)
        return loss, self.detector.backward(dout.astype(np.float32))

    def checksum(self) -> int:
        return self.detector.param_checksum()


class LinearToyTarget:
    """Tiny fixed linear-softmax victim for unit tests and oracles."""

    def __init__(self, weights: np.ndarray, noise_sigma: float = 0.1):
        self.w = weights.astype(np.float32)  # (dim, classes)
        self.noise_sigma = noise_sigma
        self.input_dim = weights.shape[0]
        self.n_complex = weights.shape[0] // 2

    def sample_inputs(self, n: int, rng: np.random.Generator):
        centers = np.eye(self.w.shape[1], self.input_dim, dtype=np.float32)
        labels = rng.integers(0, self.w.shape[1], size=n)
        y = centers[labels] + self.noise_sigma * rng.normal(size=(n, self.input_dim))
        y = y.astype(np.float32)
        return y, np.argmax(y @ self.w, axis=-1)

    def loss_and_input_grad(self, y: np.ndarray, targets):
        logits = y @ self.w
        loss, dlogits = cross_entropy_and_grad(logits, targets)
        return loss, (dlogits @ self.w.T).astype(np.float32)

    def predict(self, y: np.ndarray) -> np.ndarray:
        return np.argmax(y @ self.w, axis=-1)

    def checksum(self) -> int:
        import zlib
        return zlib.crc32(self.w.tobytes())
