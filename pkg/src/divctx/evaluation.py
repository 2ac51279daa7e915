"""Experiment harnesses: session alignment, sparsity sweeps, type splits and
synthetic corpora with planted context boundaries."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from ._random import derive_seed, make_rng
from .catalog import Catalog, Consultation, Coordinate, Interval, Item, degrade_catalog, split_types
from .diversity import DEFAULT_K, ContextChange, StreamResult, check_sorted, run_corpus
from .schema import AttributeKind, AttributeSpec, Schema

DEFAULT_GAP_SECONDS = 900


@dataclass(frozen=True)
class Session:
    user_id: str
    start_index: int
    end_index: int
    start_ts: int
    end_ts: int

    def __len__(self):
        return self.end_index - self.start_index + 1


def sessionize(stream: Sequence[Consultation], gap_threshold: int = DEFAULT_GAP_SECONDS) -> list[Session]:
    """Split a sorted stream wherever two consecutive timestamps are more than
    ``gap_threshold`` seconds apart."""
    check_sorted(stream)
    sessions = []
    start = 0
    for n in range(1, len(stream) + 1):
        if n == len(stream) or stream[n].timestamp - stream[n - 1].timestamp > gap_threshold:
            first, last = stream[start], stream[n - 1]
            sessions.append(Session(first.user_id, start, n - 1, first.timestamp, last.timestamp))
            start = n
    return sessions


def sessionize_corpus(streams: Mapping[str, Sequence[Consultation]],
                      gap_threshold: int = DEFAULT_GAP_SECONDS) -> list[Session]:
    return [s for stream in streams.values() for s in sessionize(stream, gap_threshold)]


@dataclass(frozen=True)
class H1Report:
    total_sessions: int
    detected_sessions: int
    session_rate: float
    total_changes: int
    non_session_changes: int
    #: sessions other than each user's first one, which no change can ever hit
    detectable_sessions: int
    detectable_rate: float


def align_sessions(changes: Iterable[ContextChange], sessions: Sequence[Session]) -> H1Report:
    """Count sessions whose first consultation carries a detected change."""
    changes = list(changes)
    change_keys = {(c.user_id, c.index) for c in changes}
    detected = sum((s.user_id, s.start_index) in change_keys for s in sessions)
    total = len(sessions)
    first_sessions = sum(s.start_index == 0 for s in sessions)
    detectable = total - first_sessions
    return H1Report(
        total_sessions=total,
        detected_sessions=detected,
        session_rate=detected / total if total else 0.0,
        total_changes=len(changes),
        non_session_changes=len(changes) - detected,
        detectable_sessions=detectable,
        detectable_rate=detected / detectable if detectable else 0.0,
    )


def all_changes(results: Mapping[str, StreamResult]) -> list[ContextChange]:
    return [c for r in results.values() for c in r.changes]


def run_h1(catalog: Catalog, streams: Mapping[str, Sequence[Consultation]], k: int, tau: float,
           gap_threshold: int = DEFAULT_GAP_SECONDS, schema: Schema | None = None,
           sessions: Sequence[Session] | None = None) -> tuple[H1Report, dict[str, StreamResult]]:
    if sessions is None:
        sessions = sessionize_corpus(streams, gap_threshold)
    results = run_corpus(catalog, streams, k, tau, schema)
    return align_sessions(all_changes(results), sessions), results


@dataclass(frozen=True)
class SweepRow:
    sparsity: float
    session_rate: float
    total_changes: int
    seed: int
    detected_sessions: int
    total_sessions: int
    detectable_rate: float


def sparsity_sweep(catalog: Catalog, streams: Mapping[str, Sequence[Consultation]], schema: Schema | None,
                   k: int, tau: float, rates: Sequence[float], seed: int,
                   gap_threshold: int = DEFAULT_GAP_SECONDS) -> list[SweepRow]:
    """Degrade the catalog to each sparsity rate and rerun detection."""
    for rate in rates:
        if not 0.0 <= rate <= 0.99:
            raise ValueError(f"sparsity rates must lie in [0, 0.99], got {rate!r}")
    sessions = sessionize_corpus(streams, gap_threshold)
    rows = []
    for rate in rates:
        sub_seed = derive_seed(seed, "h2", repr(float(rate)))
        degraded = degrade_catalog(catalog, rate, sub_seed)
        report, _ = run_h1(degraded, streams, k, tau, schema=schema, sessions=sessions)
        rows.append(SweepRow(float(rate), report.session_rate, report.total_changes, sub_seed,
                             report.detected_sessions, report.total_sessions, report.detectable_rate))
    return rows


@dataclass(frozen=True)
class TypeSplitRow:
    x: int
    y: int
    runs: int
    session_rate_avg: float
    session_rate_sd: float
    contexts_avg: float
    contexts_sd: float
    num_types: int
    changes_avg: float


def type_split_experiment(catalog: Catalog, streams: Mapping[str, Sequence[Consultation]], schema: Schema | None,
                          k: int, tau: float, num_types: int = 4, x: int | None = None, y: int = 1,
                          runs: int = 10, seed: int = 0,
                          gap_threshold: int = DEFAULT_GAP_SECONDS) -> TypeSplitRow:
    """Repeat type splitting plus detection ``runs`` times.

    ``contexts`` counts changes that do not open a session; standard
    deviations are population ones.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if x is None:
        x = len(catalog.schema)
    sessions = sessionize_corpus(streams, gap_threshold)
    rates, contexts, totals = [], [], []
    for r in range(runs):
        sub_seed = derive_seed(seed, "h3", num_types, x, y, r)
        split = split_types(catalog, num_types, x, y, sub_seed)
        report, _ = run_h1(split, streams, k, tau, schema=schema, sessions=sessions)
        rates.append(report.session_rate)
        contexts.append(report.non_session_changes)
        totals.append(report.total_changes)
    return TypeSplitRow(x, y, runs, statistics.mean(rates), statistics.pstdev(rates),
                        float(statistics.mean(contexts)), float(statistics.pstdev(contexts)), num_types,
                        float(statistics.mean(totals)))


@dataclass(frozen=True)
class SyntheticSpec:
    num_users: int = 20
    contexts_per_user: int = 10
    items_per_context: int = 15
    attribute_shift: float = 1.0
    session_gap_probability: float = 1.0
    seed: int = 0
    #: within-context noise on numeric attributes, as a fraction of the range
    numeric_noise: float = 0.0

    def __post_init__(self):
        for name in ("num_users", "contexts_per_user", "items_per_context"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        for name in ("attribute_shift", "session_gap_probability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.numeric_noise >= 0:
            raise ValueError(f"numeric_noise must be >= 0, got {self.numeric_noise!r}")


def synthetic_schema() -> Schema:
    """A music-like schema covering all five attribute kinds (8 attributes)."""
    return Schema((
        AttributeSpec("terms", AttributeKind.SET),
        AttributeSpec("similar_artists", AttributeKind.SET),
        AttributeSpec("years_active", AttributeKind.INTERVAL),
        AttributeSpec("mode", AttributeKind.BINARY),
        AttributeSpec("tempo", AttributeKind.NUMERIC, bounds=(35.0, 239.0)),
        AttributeSpec("energy", AttributeKind.NUMERIC, bounds=(0.0, 1.0)),
        AttributeSpec("duration", AttributeKind.NUMERIC, bounds=(12.0, 4194.0)),
        AttributeSpec("location", AttributeKind.COORDINATE),
    ))


class SyntheticCorpus(NamedTuple):
    catalog: Catalog
    streams: dict[str, list[Consultation]]
    ground_truth: dict[str, list[int]]


# Consecutive draws of one attribute come from disjoint pools. Pools of the
# scalar and coordinate kinds alternate between two far-apart bands, so that
# adjacent contexts are nearly fully dissimilar on every shifted attribute.
_SET_POOL_SIZE, _SET_DRAW = 6, 3


def _draw_profile_value(spec: AttributeSpec, pool: int, rng: np.random.Generator):
    kind = spec.kind
    if kind is AttributeKind.SET:
        picks = rng.choice(_SET_POOL_SIZE, size=_SET_DRAW, replace=False)
        return frozenset(f"{spec.name}:{pool}:{j}" for j in sorted(picks))
    if kind is AttributeKind.INTERVAL:
        lo = 1900 + 30 * pool + int(rng.integers(0, 10))
        return Interval(float(lo), float(lo + int(rng.integers(1, 20))))
    if kind is AttributeKind.BINARY:
        return pool % 2
    if kind is AttributeKind.NUMERIC:
        lo, hi = spec.bounds
        span = hi - lo
        band_lo = lo if pool % 2 == 0 else hi - 0.2 * span
        return float(band_lo + 0.2 * span * rng.random())
    if pool % 2 == 0:
        return Coordinate(float(rng.uniform(30, 50)), float(rng.uniform(-10, 10)))
    return Coordinate(float(rng.uniform(-50, -30)), float(rng.uniform(170, 180)))


def generate_synthetic(spec: SyntheticSpec, schema: Schema | None = None) -> SyntheticCorpus:
    """Corpus of users moving through contexts of homogeneous items.

    At every context boundary ``round(attribute_shift * h)`` randomly chosen
    attributes are redrawn from a pool disjoint from the previous one, and with
    probability ``session_gap_probability`` the boundary also gets a gap longer
    than 15 minutes. Ground truth lists the boundary indices of each user.
    """
    schema = synthetic_schema() if schema is None else schema
    if len(schema) == 0:
        raise ValueError("synthetic generation needs a non-empty schema")
    for a in schema:
        if a.kind is AttributeKind.NUMERIC and a.bounds is None:
            raise ValueError(f"attribute {a.name!r}: numeric bounds are required for generation")
    h = len(schema)
    n_shift = round(spec.attribute_shift * h)
    items: dict[str, Item] = {}
    streams: dict[str, list[Consultation]] = {}
    truth: dict[str, list[int]] = {}
    for u in range(spec.num_users):
        rng = make_rng(derive_seed(spec.seed, "synthetic", u))
        user = f"user{u:03d}"
        # odd offsets alternate the starting band across attributes
        pools = [int(rng.integers(0, 2)) for _ in range(h)]
        profile = [_draw_profile_value(a, p, rng) for a, p in zip(schema, pools)]
        ts = 1_400_000_000 + int(rng.integers(0, 10_000_000))
        stream, boundaries = [], []
        for c in range(spec.contexts_per_user):
            if c > 0:
                for j in sorted(rng.choice(h, size=n_shift, replace=False)):
                    pools[j] += 1
                    profile[j] = _draw_profile_value(schema.attributes[j], pools[j], rng)
                boundaries.append(len(stream))
                if rng.random() < spec.session_gap_probability:
                    ts += int(rng.integers(1_800, 86_400))
                else:
                    ts += int(rng.integers(60, 601))
            for i in range(spec.items_per_context):
                if i > 0:
                    ts += int(rng.integers(60, 601))
                values = {}
                for a, value in zip(schema, profile):
                    if a.kind is AttributeKind.NUMERIC and spec.numeric_noise > 0:
                        lo, hi = a.bounds
                        noisy = value + rng.normal(0.0, spec.numeric_noise * (hi - lo))
                        value = float(min(hi, max(lo, noisy)))
                    values[a.name] = value
                item_id = f"{user}-c{c:03d}-i{i:03d}"
                items[item_id] = Item(item_id, values)
                stream.append(Consultation(user, ts, item_id))
        streams[user] = stream
        truth[user] = boundaries
    return SyntheticCorpus(Catalog(schema=schema, items=items), streams, truth)


@dataclass(frozen=True)
class GroundTruthReport:
    recall: float
    precision: float
    precision_defined: bool
    hits: int
    boundaries: int
    matched_changes: int
    total_changes: int
    window: int


def evaluate_ground_truth(changes: Iterable[ContextChange], ground_truth: Mapping[str, Sequence[int]],
                          window: int = 0) -> GroundTruthReport:
    """Recall/precision of detected changes against planted boundaries.

    A boundary is hit when some change of the same user lies within
    ``window`` steps of it. Precision is reported as 0 with
    ``precision_defined=False`` when there is no change at all.
    """
    if window < 0:
        raise ValueError("window must be >= 0")
    changes = list(changes)
    by_user: dict[str, set[int]] = {}
    for c in changes:
        by_user.setdefault(c.user_id, set()).add(c.index)

    def near(indices, t):
        return any(t + d in indices for d in range(-window, window + 1))

    n_boundaries = sum(len(b) for b in ground_truth.values())
    hits = sum(near(by_user.get(u, ()), t) for u, bounds in ground_truth.items() for t in bounds)
    truth_sets = {u: set(b) for u, b in ground_truth.items()}
    matched = sum(near(truth_sets.get(c.user_id, ()), c.index) for c in changes)
    return GroundTruthReport(
        recall=hits / n_boundaries if n_boundaries else 0.0,
        precision=matched / len(changes) if changes else 0.0,
        precision_defined=bool(changes),
        hits=hits,
        boundaries=n_boundaries,
        matched_changes=matched,
        total_changes=len(changes),
        window=window,
    )


def mean_rd_by_position(results: Mapping[str, StreamResult], ground_truth: Mapping[str, Sequence[int]]):
    """Mean non-nan rd at planted boundaries and at interior steps."""
    boundary, interior = [], []
    for user, res in results.items():
        marks = set(ground_truth.get(user, ()))
        for p in res.points:
            if p.rd == p.rd:
                (boundary if p.index in marks else interior).append(p.rd)
    mean = lambda v: math.fsum(v) / len(v) if v else math.nan  # noqa: E731
    return mean(boundary), mean(interior)
