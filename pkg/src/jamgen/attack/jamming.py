"""Budget-matched Gaussian jamming: the non-adversarial reference every attack
must beat."""

from __future__ import annotations

import math

import numpy as np


def gaussian_jam(y: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Add a fresh isotropic Gaussian vector scaled to squared norm exactly p."""
    y2 = np.atleast_2d(y)
    g = rng.normal(size=y2.shape)
    g *= math.sqrt(p) / np.linalg.norm(g, axis=-1, keepdims=True)
    return (y2 + g).astype(y2.dtype).reshape(np.shape(y))


def jammer(p: float):
    return lambda y, rng: gaussian_jam(y, p, rng)
