"""Input validation helpers shared by the estimators and the CLI."""
import math

import numpy as np
from sklearn.utils.validation import check_array


def check_points(X, n_features=None, min_samples=1):
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=min_samples)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, expected {n_features}")
    return X


def check_positive(value, name):
    if value is None or not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_fraction(value, name, low=0.0, high=1.0):
    if not (low < value <= high):
        raise ValueError(f"{name} must lie in ({low}, {high}], got {value!r}")
    return float(value)
