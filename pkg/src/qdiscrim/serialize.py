"""JSON helpers for complex arrays.

Complex vectors and matrices are exchanged as nested lists of [re, im]
pairs, in the fixed (HH, HV, VH, VV) basis order for two-qubit objects.
"""

from __future__ import annotations

import numpy as np


def complex_to_pairs(arr: np.ndarray) -> list:
    """Nested lists with each complex entry replaced by [re, im]."""
    arr = np.asarray(arr, dtype=complex)
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def pairs_to_complex(data, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Inverse of :func:`complex_to_pairs`.

    ``shape`` optionally enforces the expected array shape (without the
    trailing pair axis); a mismatch raises ValueError.
    """
    raw = np.asarray(data, dtype=float)
    if raw.ndim < 1 or raw.shape[-1] != 2:
        raise ValueError("expected nested [re, im] pairs on the last axis")
    arr = raw[..., 0] + 1j * raw[..., 1]
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"expected shape {tuple(shape)}, got {arr.shape}")
    return arr
