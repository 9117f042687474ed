"""Hard-decision Hamming(7,4) baseline over BPSK/AWGN.

Serves as the quality bar for the learned (7,4) autoencoder: closed-form
block-error rate plus an explicit syndrome-decoding codec for cross-checks.
"""

from __future__ import annotations

import math

import numpy as np

# Systematic G = [I | P]; parity-check columns are the binary numbers 1..7.
_P = np.array([[1, 1, 0],
               [1, 0, 1],
               [0, 1, 1],
               [1, 1, 1]], dtype=np.int8)
_G = np.hstack([np.eye(4, dtype=np.int8), _P])
_H = np.hstack([_P.T, np.eye(3, dtype=np.int8)])


def _q(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def bit_error_prob(ebn0_db: float, code_rate: float = 4.0 / 7.0) -> float:
    """Raw BPSK coded-bit error probability at unit symbol power."""
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return _q(math.sqrt(2.0 * code_rate * ebn0))


def hamming74_bler(ebn0_db: float) -> float:
    """Closed-form hard-decision BLER: the code corrects any single bit error."""
    p = bit_error_prob(ebn0_db)
    return 1.0 - (1.0 - p) ** 7 - 7.0 * p * (1.0 - p) ** 6


def encode_blocks(data_bits: np.ndarray) -> np.ndarray:
    """(B, 4) data bits -> (B, 7) codewords."""
    return (np.asarray(data_bits, dtype=np.int8) @ _G) % 2


def decode_blocks(hard_bits: np.ndarray) -> np.ndarray:
    """(B, 7) hard decisions -> (B, 4) data bits after single-error correction."""
    r = np.asarray(hard_bits, dtype=np.int8)
    syndrome = (r @ _H.T) % 2
    # Map each syndrome to the unique column of H it matches (or no error).
    corrected = r.copy()
    for col in range(7):
        hit = np.all(syndrome == _H[:, col], axis=1)
        corrected[hit, col] ^= 1
    return corrected[:, :4]


def simulate_bler(ebn0_db: float, n_blocks: int, rng: np.random.Generator) -> float:
    """Monte-Carlo hard-decision BLER; independent cross-check of the closed form."""
    sigma = math.sqrt(1.0 / (2.0 * (4.0 / 7.0) * 10.0 ** (ebn0_db / 10.0)))
    data = rng.integers(0, 2, size=(n_blocks, 4))
    tx = 1.0 - 2.0 * encode_blocks(data)
    rx = tx + rng.normal(0.0, sigma, size=tx.shape)
    decoded = decode_blocks(rx < 0)
    return float(np.mean(np.any(decoded != data, axis=1)))
