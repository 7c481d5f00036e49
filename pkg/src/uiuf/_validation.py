"""Argument checks shared by the estimators, samplers and CLI."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_probability(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not 0.0 <= float(value) <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
    return float(value)


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_positive_real(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not float(value) > 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return float(value)


def check_bits(X, n_features: int, name: str = "X") -> np.ndarray:
    """2-d array of 0/1 entries with ``n_features`` columns."""
    X = check_array(X, dtype=np.uint8, ensure_2d=True, ensure_min_samples=0)
    if X.shape[1] != n_features:
        raise ValueError(f"{name} has {X.shape[1]} columns, expected {n_features}")
    if X.size and X.max() > 1:
        raise ValueError(f"{name} must contain only 0/1 entries")
    return X


def check_bit_vector(bits, length: int, name: str) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.shape[0] != length:
        raise ValueError(f"{name} has length {bits.shape[0]}, expected {length}")
    if bits.size and bits.max() > 1:
        raise ValueError(f"{name} must contain only 0/1 entries")
    return bits
