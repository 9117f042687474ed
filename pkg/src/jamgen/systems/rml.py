"""Optional import/export of preprocessed radio-dataset binaries.

Directory layout: one file per (modulation, SNR), named <MOD>_snr<SNR>.rmlx,
each: magic "RMLX" | u32 LE record count | raw little-endian f32 records of
256 values (128 I then 128 Q).  The synthetic generator remains the default;
this loader ingests a real-dataset export when one is available.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .modulation import ModulationDataset

MAGIC = b"RMLX"
RECORD_LEN = 256


def _fname(mod: str, snr_db: float) -> str:
    return f"{mod}_snr{int(round(snr_db))}.rmlx"


def export_dataset(ds: ModulationDataset, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for mod_idx, mod in enumerate(ds.mods):
        for snr in np.unique(ds.snr_db):
            mask = (ds.labels == mod_idx) & np.isclose(ds.snr_db, snr)
            if not mask.any():
                continue
            records = np.ascontiguousarray(ds.x[mask], dtype="<f4")
            path = directory / _fname(mod, float(snr))
            with open(path, "wb") as f:
                f.write(MAGIC)
                f.write(struct.pack("<I", len(records)))
                f.write(records.tobytes())
            written.append(path)
    return written


def _read_file(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise ModelFormatError("bad-magic", str(path))
        raw = f.read(4)
        if len(raw) < 4:
            raise ModelFormatError("truncated", str(path))
        count, = struct.unpack("<I", raw)
        data = f.read(4 * RECORD_LEN * count)
        if len(data) < 4 * RECORD_LEN * count:
            raise ModelFormatError("truncated", str(path))
    return np.frombuffer(data, dtype="<f4").reshape(count, RECORD_LEN).copy()


def load_dataset(directory, mods, snrs_db) -> ModulationDataset:
    """Load the (mod, snr) grid; every referenced file must exist."""
    directory = Path(directory)
    xs, labels, ex_snr = [], [], []
    for mod_idx, mod in enumerate(mods):
        for snr in snrs_db:
            path = directory / _fname(mod, snr)
            if not path.exists():
                raise FileNotFoundError(path)
            records = _read_file(path)
            xs.append(records)
            labels.append(np.full(len(records), mod_idx, dtype=np.int64))
            ex_snr.append(np.full(len(records), snr, dtype=np.float32))
    return ModulationDataset(np.concatenate(xs), np.concatenate(labels),
                             np.concatenate(ex_snr), tuple(mods))
