"""Relative diversity over a sliding history and the context-change detector."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .catalog import Catalog, Consultation, Item, validate_item
from .exceptions import CalibrationError, OrderingError, ValidationError
from .schema import Schema
from .similarity import ItemSimilarity, sim_items

DEFAULT_K = 5

SimilarityFn = Callable[[Item, Item, Schema], ItemSimilarity]


class HistoryWindow:
    """The ``k`` most recently consulted items, oldest first."""

    def __init__(self, capacity: int, entries: Iterable[Item] = ()):
        if not isinstance(capacity, int) or capacity < 1:
            raise ValueError(f"window capacity must be a positive integer, got {capacity!r}")
        self.capacity = capacity
        self._entries: deque[Item] = deque(entries, maxlen=capacity)

    def push(self, item: Item) -> None:
        self._entries.append(item)

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"HistoryWindow(capacity={self.capacity}, entries={[i.id for i in self._entries]})"


@dataclass(frozen=True)
class DiversityPoint:
    index: int
    rd: float
    s: int
    per_attribute_rd: Mapping[str, float] = field(default_factory=dict)

    @property
    def is_nan(self) -> bool:
        return math.isnan(self.rd)

    @property
    def attribute_mean_rd(self) -> float:
        """Mean of the computable per-attribute diversities (nan if none)."""
        vals = [v for v in self.per_attribute_rd.values() if v == v]
        return math.fsum(vals) / len(vals) if vals else math.nan


@dataclass(frozen=True)
class ContextChange:
    index: int
    rd_value: float
    user_id: str
    item_id: str


def _mean_or_nan(values: list) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def relative_diversity(target: Item, window: Iterable[Item], schema: Schema, index: int = 0,
                       similarity: SimilarityFn = sim_items) -> DiversityPoint:
    """Mean dissimilarity between ``target`` and the window items it is comparable with.

    ``s`` counts the window items whose item-level similarity is computable; the
    result is ``nan`` when the window is empty or ``s == 0``.
    """
    dissims = []
    per_attr: dict[str, list] = {name: [] for name in schema.names}
    for entry in window:
        sim = similarity(target, entry, schema)
        if sim.aggregate == sim.aggregate:
            dissims.append(1.0 - sim.aggregate)
        for name, value in sim.per_attribute.items():
            if value == value:
                per_attr[name].append(1.0 - value)
    return DiversityPoint(
        index=index,
        rd=_mean_or_nan(dissims),
        s=len(dissims),
        per_attribute_rd={name: _mean_or_nan(v) for name, v in per_attr.items()},
    )


def detection_conditions(previous_rd, current_rd: float, tau: float) -> tuple[bool, bool, bool, bool]:
    """The four detector conditions, in order: previous defined, current
    defined, strictly increasing, strictly above ``tau``."""
    prev = math.nan if previous_rd is None else previous_rd
    return (prev == prev, current_rd == current_rd, prev < current_rd, current_rd > tau)


def is_context_change(previous_rd, current_rd: float, tau: float) -> bool:
    return all(detection_conditions(previous_rd, current_rd, tau))


class StepResult(NamedTuple):
    point: DiversityPoint
    change: ContextChange | None


class Detector:
    """Streaming detector for one user.

    ``tau=None`` only traces diversity and never emits changes (used by the
    calibration pass). ``similarity`` is injectable for instrumentation.
    """

    def __init__(self, schema: Schema, k: int = DEFAULT_K, tau: float | None = None, user_id: str = "",
                 similarity: SimilarityFn = sim_items):
        if tau is not None and not 0.0 <= tau <= 1.0:
            raise ValueError(f"tau must be within [0, 1], got {tau!r}")
        self.schema = schema
        self.k = k
        self.tau = tau
        self.user_id = user_id
        self.similarity = similarity
        self.window = HistoryWindow(k)
        self.previous_rd: float | None = None
        self.index = 0
        self._last_ts = None

    def step(self, consultation: Consultation | None, item: Item) -> StepResult:
        validate_item(item, self.schema)
        if consultation is not None:
            if consultation.item_id != item.id:
                raise ValidationError(f"consultation references {consultation.item_id!r} but item is {item.id!r}")
            if self._last_ts is not None and consultation.timestamp < self._last_ts:
                raise OrderingError(
                    f"user {self.user_id!r}: timestamp {consultation.timestamp} precedes {self._last_ts}"
                )
        point = relative_diversity(item, self.window, self.schema, self.index, self.similarity)
        change = None
        if self.tau is not None and is_context_change(self.previous_rd, point.rd, self.tau):
            change = ContextChange(self.index, point.rd, self.user_id, item.id)
        self.window.push(item)
        self.previous_rd = point.rd
        self.index += 1
        if consultation is not None:
            self._last_ts = consultation.timestamp
        return StepResult(point, change)


def detector_step(detector: Detector, consultation: Consultation | None, item: Item,
                  schema: Schema | None = None) -> StepResult:
    if schema is not None and schema is not detector.schema and schema != detector.schema:
        raise ValueError("schema does not match the detector's schema")
    return detector.step(consultation, item)


class Calibration(NamedTuple):
    tau: float
    mean: float
    sd: float
    n: int


def calibrate_tau(points: Iterable[DiversityPoint | float]) -> Calibration:
    """Set the threshold to the mean of all non-nan diversity values.

    The standard deviation is the population one.
    """
    values = [p.rd if isinstance(p, DiversityPoint) else float(p) for p in points]
    values = [v for v in values if v == v]
    if not values:
        raise CalibrationError("no computable relative diversity value to calibrate from")
    mean = math.fsum(values) / len(values)
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))
    return Calibration(tau=mean, mean=mean, sd=sd, n=len(values))


class StreamResult(NamedTuple):
    points: list[DiversityPoint]
    changes: list[ContextChange]


def check_sorted(consultations: Sequence[Consultation]) -> None:
    for prev, cur in zip(consultations, consultations[1:]):
        if cur.timestamp < prev.timestamp:
            raise OrderingError(
                f"user {cur.user_id!r}: stream not sorted by timestamp ({cur.timestamp} after {prev.timestamp})"
            )


def run_user_stream(consultations: Sequence[Consultation], catalog: Catalog, schema: Schema | None = None,
                    k: int = DEFAULT_K, tau: float | None = None,
                    similarity: SimilarityFn = sim_items) -> StreamResult:
    """Fold the detector over one user's ordered consultations."""
    schema = catalog.schema if schema is None else schema
    check_sorted(consultations)
    user = consultations[0].user_id if consultations else ""
    detector = Detector(schema, k, tau, user, similarity)
    points, changes = [], []
    for c in consultations:
        point, change = detector.step(c, catalog[c.item_id])
        points.append(point)
        if change is not None:
            changes.append(change)
    return StreamResult(points, changes)


def run_corpus(catalog: Catalog, streams: Mapping[str, Sequence[Consultation]], k: int = DEFAULT_K,
               tau: float | None = None, schema: Schema | None = None) -> dict[str, StreamResult]:
    return {user: run_user_stream(s, catalog, schema, k, tau) for user, s in streams.items()}


def calibrate_corpus(catalog: Catalog, streams: Mapping[str, Sequence[Consultation]],
                     k: int = DEFAULT_K, schema: Schema | None = None) -> Calibration:
    results = run_corpus(catalog, streams, k, None, schema)
    return calibrate_tau(p for r in results.values() for p in r.points)
