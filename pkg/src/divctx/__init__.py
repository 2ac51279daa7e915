"""Diversity-based detection of implicit context changes in navigation paths."""

__version__ = "0.1.0"

from .catalog import (  # noqa: E402
    Catalog,
    Consultation,
    Coordinate,
    Interval,
    Item,
    corpus_stats,
    degrade_catalog,
    derive_numeric_bounds,
    load_catalog,
    load_log,
    make_item,
    split_types,
)
from .diversity import (  # noqa: E402
    ContextChange,
    Detector,
    DiversityPoint,
    HistoryWindow,
    calibrate_tau,
    detector_step,
    relative_diversity,
    run_user_stream,
)
from .estimator import ContextChangeDetector  # noqa: E402
from .schema import AttributeKind, AttributeSpec, Schema, default_weights, load_schema  # noqa: E402
from .similarity import sim_binary, sim_coordinate, sim_interval, sim_items, sim_numeric, sim_set  # noqa: E402
