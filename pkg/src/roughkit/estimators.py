"""scikit-learn style wrappers around the functional core.

``RoughNormFeatures`` and ``GreedyCounter`` are stateless transformers that
map a batch of sampled paths to per-path features.  ``RoughFlow`` learns
nothing: ``fit`` stores a driver and ``predict`` solves from initial values.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .fields import field_from_spec
from .greedy import greedy_times_pvar
from .lift import lift_piecewise_linear
from .norms import norm_report
from .rough_core import GridPath, RoughPathGrid
from .solver import solve_davie, solve_doss_sussmann
from .validation import check_initial_values, check_path_batch, check_times

__all__ = ["RoughNormFeatures", "GreedyCounter", "RoughFlow"]

_FEATURES = ("holder", "pvar", "area_2holder", "area_qvar", "rough_holder", "rough_pvar")


def _lifts(X, times, alpha):
    X = check_path_batch(X)
    t = check_times(times, X.shape[1])
    return [lift_piecewise_linear(GridPath(t, x), alpha) for x in X]


class RoughNormFeatures(TransformerMixin, BaseEstimator):
    """Hölder and variation norms of the piecewise-linear lift of each path.

    Parameters
    ----------
    alpha : float
        Hölder exponent in (1/3, 1/2); ``p = 1 / alpha``.
    features : tuple of str
        Any of ``holder``, ``pvar``, ``area_2holder``, ``area_qvar``,
        ``rough_holder``, ``rough_pvar``.
    times : array-like or None
        Shared time grid; defaults to a uniform grid on ``[0, 1]``.
    """

    def __init__(self, alpha=0.45, features=("pvar", "area_qvar", "rough_pvar"), times=None):
        self.alpha = alpha
        self.features = features
        self.times = times

    def fit(self, X, y=None):
        X = check_path_batch(X)
        unknown = set(self.features) - set(_FEATURES)
        if unknown:
            raise ValueError(f"unknown features {sorted(unknown)}")
        self.n_points_ = X.shape[1]
        self.n_features_in_ = X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_points_")
        rows = []
        for rp in _lifts(X, self.times, self.alpha):
            rep = norm_report(rp)
            rows.append([getattr(rep, f) for f in self.features])
        return np.asarray(rows, dtype=float)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.features, dtype=object)


class GreedyCounter(TransformerMixin, BaseEstimator):
    """Number of greedy p-variation stopping times for each threshold."""

    def __init__(self, gammas=(0.5, 1.0), alpha=0.45, times=None):
        self.gammas = gammas
        self.alpha = alpha
        self.times = times

    def fit(self, X, y=None):
        check_path_batch(X)
        if not all(g > 0 for g in self.gammas):
            raise ValueError("every gamma must be positive")
        self.n_points_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_points_")
        return np.asarray(
            [[greedy_times_pvar(rp, g).count for g in self.gammas] for rp in _lifts(X, self.times, self.alpha)],
            dtype=float,
        )


class RoughFlow(BaseEstimator):
    """Solution map ``y_a -> y_b`` of an RDE driven by a fixed rough path.

    Parameters
    ----------
    field : dict
        Field description accepted by :func:`roughkit.fields.field_from_spec`.
    scheme : {"davie", "ds"}
    alpha : float
        Used when ``fit`` receives a raw path array instead of a rough path.
    """

    def __init__(self, field=None, scheme="davie", alpha=0.45):
        self.field = field
        self.scheme = scheme
        self.alpha = alpha

    def fit(self, X, y=None):
        if self.field is None:
            raise ValueError("a field description is required")
        self.field_ = field_from_spec(self.field)
        if self.scheme not in ("davie", "ds"):
            raise ValueError(f"scheme must be 'davie' or 'ds', got {self.scheme!r}")
        if isinstance(X, RoughPathGrid):
            self.driver_ = X
        else:
            arr = np.asarray(X, dtype=float)
            if arr.ndim == 2:
                arr = arr[None]
            self.driver_ = _lifts(arr, None, self.alpha)[0]
        if self.driver_.dim != self.field_.m:
            raise ValueError("driver dimension does not match the field's noise channels")
        return self

    def predict(self, Y0):
        """Terminal values, one row per initial value."""
        check_is_fitted(self, "driver_")
        return np.stack([s.values[-1] for s in self._solve(Y0)])

    def solve_paths(self, Y0):
        """Full solution paths with shape ``(k, points, d)``."""
        check_is_fitted(self, "driver_")
        return np.stack([s.values for s in self._solve(Y0)])

    def _solve(self, Y0):
        Y0 = check_initial_values(Y0, self.field_.d)
        fn = solve_davie if self.scheme == "davie" else solve_doss_sussmann
        return [fn(self.driver_, self.field_, y) for y in Y0]
