"""Deterministic per-stage RNG derivation from one master seed."""

from __future__ import annotations

import zlib

import numpy as np


def stage_seed(master: int, stage: str) -> np.random.SeedSequence:
    """Counter-based split: the stage name hashes to a spawn key, so any stage
    can be re-run independently of the others."""
    return np.random.SeedSequence(entropy=master,
                                  spawn_key=(zlib.crc32(stage.encode()),))


def stage_rng(master: int, stage: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(stage_seed(master, stage)))
