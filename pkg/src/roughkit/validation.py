"""Input checks for array-based entry points."""

import numpy as np
from sklearn.utils.validation import check_array

__all__ = ["check_path_batch", "check_initial_values", "check_times"]


def check_path_batch(X, min_points=2):
    """Validate a batch of sampled paths with shape ``(samples, points, m)``.

    A 2-d array is read as a batch of scalar paths.
    """
    X = check_array(X, allow_nd=True, ensure_2d=True, dtype=float)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise ValueError(f"expected paths of shape (samples, points, m), got {X.shape}")
    if X.shape[1] < min_points:
        raise ValueError(f"each path needs at least {min_points} points, got {X.shape[1]}")
    return X


def check_initial_values(Y, d):
    """Validate initial values as ``(k, d)``; a single vector becomes one row."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Y = check_array(Y, dtype=float)
    if Y.shape[1] != d:
        raise ValueError(f"initial values must have {d} columns, got {Y.shape[1]}")
    return Y


def check_times(times, n_points):
    """Strictly increasing finite time grid of the given length (default ``[0, 1]``)."""
    if times is None:
        return np.linspace(0.0, 1.0, n_points)
    t = np.asarray(times, dtype=float)
    if t.shape != (n_points,):
        raise ValueError(f"times must have shape ({n_points},), got {t.shape}")
    if not (np.all(np.isfinite(t)) and np.all(np.diff(t) > 0)):
        raise ValueError("times must be finite and strictly increasing")
    return t
