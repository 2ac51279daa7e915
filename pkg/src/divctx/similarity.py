"""Attribute-level and item-level similarity.

Every function returns a float in [0, 1], or ``nan`` when the similarity is not
computable (empty set, missing value, no shared attribute). ``nan`` is never
turned into 0: a 0 would claim maximal dissimilarity.
"""

from __future__ import annotations

import math
from typing import Mapping, NamedTuple

from .catalog import Coordinate, Interval, Item
from .schema import EARTH_RADIUS_KM, AttributeKind, AttributeSpec, Schema

NOT_COMPUTABLE = math.nan


def is_computable(value: float) -> bool:
    return not math.isnan(value)


def sim_set(a: frozenset, b: frozenset) -> float:
    """Overlap coefficient ``|a & b| / min(|a|, |b|)``."""
    if not a or not b:
        return NOT_COMPUTABLE
    return len(a & b) / min(len(a), len(b))


def sim_interval(a: Interval, b: Interval) -> float:
    """Overlap length over the longer interval's length.

    Two points are fully similar when equal and dissimilar otherwise. A point
    against a proper interval always scores 0 (zero-length overlap).
    """
    len_a = a[1] - a[0]
    len_b = b[1] - b[0]
    if len_a == 0 and len_b == 0:
        return 1.0 if a[0] == b[0] else 0.0
    overlap = min(a[1], b[1]) - max(a[0], b[0])
    if overlap <= 0:
        return 0.0
    return overlap / max(len_a, len_b)


def sim_binary(a: int, b: int) -> float:
    return 1.0 if a == b else 0.0


def sim_numeric(a: float, b: float, spec: AttributeSpec) -> float:
    """Gaussian-shaped similarity ``exp(-decay * ((a - b) / (max - min))**2)``."""
    if spec.bounds is None:
        raise ValueError(f"attribute {spec.name!r}: numeric similarity needs bounds")
    lo, hi = spec.bounds
    if not hi > lo:
        raise ValueError(f"attribute {spec.name!r}: degenerate bounds {spec.bounds}")
    if not spec.decay > 0:
        raise ValueError(f"attribute {spec.name!r}: decay must be > 0")
    return math.exp(-spec.decay * ((a - b) / (hi - lo)) ** 2)


def haversine_km(a: Coordinate, b: Coordinate, radius: float = EARTH_RADIUS_KM) -> float:
    """Great-circle distance by the haversine formula.

    The complement ``1 - hav`` is taken as the haversine towards the antipode
    of ``b`` rather than by subtraction, which keeps nearly antipodal pairs
    accurate (``asin`` alone loses half the digits there).
    """
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    cos_cos = math.cos(lat1) * math.cos(lat2)
    dlon = (lon2 - lon1) / 2
    h = math.sin((lat2 - lat1) / 2) ** 2 + cos_cos * math.sin(dlon) ** 2
    h_anti = math.sin((lat1 + lat2) / 2) ** 2 + cos_cos * math.cos(dlon) ** 2
    return 2 * radius * math.atan2(math.sqrt(h), math.sqrt(h_anti))


def sim_coordinate(a: Coordinate, b: Coordinate, spec: AttributeSpec) -> float:
    """``1 - haversine(a, b) / max_distance``, clamped to [0, 1]."""
    if a == b:
        return 1.0
    sim = 1.0 - haversine_km(a, b) / spec.max_distance
    return min(1.0, max(0.0, sim))


def sim_attribute(a, b, spec: AttributeSpec) -> float:
    """Similarity of two non-missing values of attribute ``spec``."""
    kind = spec.kind
    if kind is AttributeKind.SET:
        return sim_set(a, b)
    if kind is AttributeKind.INTERVAL:
        return sim_interval(a, b)
    if kind is AttributeKind.BINARY:
        return sim_binary(a, b)
    if kind is AttributeKind.NUMERIC:
        return sim_numeric(a, b, spec)
    return sim_coordinate(a, b, spec)


class ItemSimilarity(NamedTuple):
    aggregate: float
    per_attribute: Mapping[str, float]


def sim_items(a: Item, b: Item, schema: Schema) -> ItemSimilarity:
    """Weighted mean of attribute similarities over the computable shared attributes.

    ``per_attribute`` lists every schema attribute, ``nan`` where skipped. The
    aggregate is ``nan`` when no shared attribute is computable (or all of them
    carry weight 0).
    """
    per_attribute = {}
    num = []
    den = []
    va, vb = a.values, b.values
    for spec in schema.attributes:
        name = spec.name
        if name in va and name in vb:
            s = sim_attribute(va[name], vb[name], spec)
        else:
            s = NOT_COMPUTABLE
        per_attribute[name] = s
        if s == s:
            num.append(spec.weight * s)
            den.append(spec.weight)
    total_weight = math.fsum(den)
    if total_weight == 0:
        return ItemSimilarity(NOT_COMPUTABLE, per_attribute)
    return ItemSimilarity(math.fsum(num) / total_weight, per_attribute)
