"""scikit-learn style facade over the streaming detector.

``X`` is a list of navigation paths, each a sequence of :class:`Item`. ``fit``
calibrates the threshold (unless ``tau`` is given), ``transform`` returns the
relative diversity trace of every path and ``predict`` flags context changes.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .catalog import Item, validate_item
from .diversity import DEFAULT_K, Calibration, Detector, StreamResult, calibrate_tau
from .schema import Schema


def check_streams(X, schema: Schema) -> list[list[Item]]:
    """Validate ``X`` as a list of item sequences conforming to ``schema``."""
    if isinstance(X, (str, bytes, Item)) or not isinstance(X, Sequence):
        raise TypeError(f"expected a sequence of item streams, got {type(X).__name__}")
    streams = []
    for n, stream in enumerate(X):
        if isinstance(stream, Item) or not isinstance(stream, Sequence):
            raise TypeError(f"stream {n}: expected a sequence of Item, got {type(stream).__name__}")
        for item in stream:
            if not isinstance(item, Item):
                raise TypeError(f"stream {n}: expected Item, got {type(item).__name__}")
            validate_item(item, schema)
        streams.append(list(stream))
    return streams


def _check_params(schema, k, tau):
    if not isinstance(schema, Schema):
        raise TypeError("schema must be a Schema")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if tau is not None and not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")


class ContextChangeDetector(TransformerMixin, BaseEstimator):
    """Detect implicit context changes from diversity peaks.

    Parameters
    ----------
    schema : Schema
        Attribute declarations shared by all items.
    k : int, default=5
        Size of the sliding history.
    tau : float or None, default=None
        Diversity threshold. When None, ``fit`` sets it to the mean relative
        diversity over the training streams.

    Attributes
    ----------
    tau_ : float
        Threshold used by ``predict``.
    calibration_ : Calibration or None
        Mean/sd of relative diversity over the training streams, None when
        ``tau`` was given.
    """

    def __init__(self, schema: Schema, k: int = DEFAULT_K, tau: float | None = None):
        self.schema = schema
        self.k = k
        self.tau = tau

    def fit(self, X, y=None):
        _check_params(self.schema, self.k, self.tau)
        streams = check_streams(X, self.schema)
        if self.tau is None:
            points = (p for r in self._run(streams, None) for p in r.points)
            self.calibration_: Calibration | None = calibrate_tau(points)
            self.tau_ = self.calibration_.tau
        else:
            self.calibration_ = None
            self.tau_ = float(self.tau)
        self.n_streams_ = len(streams)
        return self

    def _run(self, streams, tau) -> list[StreamResult]:
        results = []
        for n, stream in enumerate(streams):
            detector = Detector(self.schema, int(self.k), tau, user_id=str(n))
            points, changes = [], []
            for item in stream:
                point, change = detector.step(None, item)
                points.append(point)
                if change is not None:
                    changes.append(change)
            results.append(StreamResult(points, changes))
        return results

    def detect(self, X) -> list[StreamResult]:
        """Full per-step output (diversity points and change events)."""
        check_is_fitted(self, "tau_")
        return self._run(check_streams(X, self.schema), self.tau_)

    def transform(self, X) -> list[np.ndarray]:
        """Relative diversity of every step (nan where not computable)."""
        return [np.array([p.rd for p in r.points], dtype=float) for r in self.detect(X)]

    def predict(self, X) -> list[np.ndarray]:
        """Boolean mask per stream, True where a context change starts."""
        out = []
        for stream, res in zip(X, self.detect(X)):
            mask = np.zeros(len(stream), dtype=bool)
            mask[[c.index for c in res.changes]] = True
            out.append(mask)
        return out

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)
