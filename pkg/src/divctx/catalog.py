"""Item catalog and consultation logs.

Attribute values are held as plain Python values keyed by attribute name:

==========  ==================================
kind        Python value
==========  ==================================
set         ``frozenset`` of ``str``
interval    :class:`Interval` ``(lo, hi)``
binary      ``int`` (0 or 1)
numeric     ``float``
coordinate  :class:`Coordinate` ``(lat, lon)``
==========  ==================================

A missing value is simply an absent key; it is never confused with an empty set
or with 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from ._random import make_rng
from .exceptions import (
    DegenerateRangeError,
    FormatError,
    InfeasibleSplitError,
    ReferentialError,
    ValidationError,
)
from .schema import AttributeKind, AttributeSpec, Schema

DEFAULT_TYPE = "item"
MAX_SPLIT_RETRIES = 10_000


class Interval(NamedTuple):
    lo: float
    hi: float


class Coordinate(NamedTuple):
    lat: float
    lon: float


@dataclass(frozen=True)
class Item:
    id: str
    values: Mapping[str, object] = field(default_factory=dict)
    type_id: str = DEFAULT_TYPE

    def get(self, name):
        return self.values.get(name)


@dataclass(frozen=True)
class Consultation:
    user_id: str
    timestamp: int
    item_id: str


@dataclass(frozen=True)
class Catalog:
    schema: Schema
    items: Mapping[str, Item] = field(default_factory=dict)
    #: attribute names kept by each item type, set by :func:`split_types`
    type_attributes: Mapping[str, tuple[str, ...]] | None = None

    def __len__(self):
        return len(self.items)

    def __getitem__(self, item_id) -> Item:
        return self.items[item_id]

    def __contains__(self, item_id):
        return item_id in self.items


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def coerce_value(spec: AttributeSpec, raw, item_id="?"):
    """Convert a raw decoded value to the canonical form for ``spec.kind``.

    Returns None for a missing value (``raw is None``).
    """
    if raw is None:
        return None
    kind = spec.kind

    def bad(why):
        return ValidationError(f"item {item_id!r}, attribute {spec.name!r} ({kind.value}): {why}, got {raw!r}")

    if kind is AttributeKind.SET:
        if isinstance(raw, (str, bytes)) or not isinstance(raw, (list, tuple, set, frozenset)):
            raise bad("expected a list of strings")
        if not all(isinstance(v, str) for v in raw):
            raise bad("set members must be strings")
        return frozenset(raw)
    if kind is AttributeKind.INTERVAL:
        if not isinstance(raw, (list, tuple)) or len(raw) != 2 or not all(_is_number(v) for v in raw):
            raise bad("expected [lo, hi]")
        lo, hi = float(raw[0]), float(raw[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise bad("interval needs finite lo <= hi")
        return Interval(lo, hi)
    if kind is AttributeKind.BINARY:
        if isinstance(raw, bool):
            return int(raw)
        if not _is_number(raw) or raw not in (0, 1):
            raise bad("expected 0 or 1")
        return int(raw)
    if kind is AttributeKind.NUMERIC:
        if not _is_number(raw) or not math.isfinite(raw):
            raise bad("expected a finite number")
        return float(raw)
    if kind is AttributeKind.COORDINATE:
        if not isinstance(raw, (list, tuple)) or len(raw) != 2 or not all(_is_number(v) for v in raw):
            raise bad("expected [lat, lon]")
        lat, lon = float(raw[0]), float(raw[1])
        if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
            raise bad("latitude must be in [-90, 90] and longitude in [-180, 180]")
        return Coordinate(lat, lon)
    raise AssertionError(kind)


def make_item(item_id, attrs: Mapping[str, object], schema: Schema, type_id=DEFAULT_TYPE) -> Item:
    """Build a validated :class:`Item` from raw attribute values."""
    values = {}
    for name, raw in attrs.items():
        if name not in schema:
            raise ValidationError(f"item {item_id!r}: attribute {name!r} is not declared in the schema")
        value = coerce_value(schema[name], raw, item_id)
        if value is not None:
            values[name] = value
    # canonical schema order keeps iteration deterministic
    ordered = {name: values[name] for name in schema.names if name in values}
    return Item(id=str(item_id), values=ordered, type_id=str(type_id))


def validate_item(item: Item, schema: Schema) -> Item:
    for name, value in item.values.items():
        if name not in schema:
            raise ValidationError(f"item {item.id!r}: attribute {name!r} is not declared in the schema")
        if value is None:
            raise ValidationError(f"item {item.id!r}, attribute {name!r}: use an absent key for missing values")
        coerce_value(schema[name], value, item.id)
    return item


def _iter_lines(source) -> Iterable[tuple[int, str]]:
    lines = source.splitlines() if isinstance(source, str) else source
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if line:
            yield lineno, line


def _parse_json(line, lineno):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(record, dict):
        raise FormatError("record must be a JSON object", lineno)
    return record


def load_catalog(source, schema: Schema) -> Catalog:
    """Load one item record per line: ``{"id", "type"?, "attrs": {...}}``."""
    items: dict[str, Item] = {}
    for lineno, line in _iter_lines(source):
        record = _parse_json(line, lineno)
        if "id" not in record:
            raise FormatError("item record lacks 'id'", lineno)
        attrs = record.get("attrs", {})
        if not isinstance(attrs, dict):
            raise FormatError("'attrs' must be an object", lineno)
        item_id = str(record["id"])
        if item_id in items:
            raise FormatError(f"duplicate item id {item_id!r}", lineno)
        items[item_id] = make_item(item_id, attrs, schema, record.get("type", DEFAULT_TYPE))
    return Catalog(schema=schema, items=items)


def _parse_ts(raw, lineno) -> int:
    if isinstance(raw, bool):
        raise FormatError(f"unparsable timestamp {raw!r}", lineno)
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float) and raw.is_integer():
        return int(raw)
    if isinstance(raw, str):
        try:
            return int(raw.strip())
        except ValueError:
            pass
    raise FormatError(f"unparsable timestamp {raw!r}", lineno)


def load_log(source, catalog: Catalog) -> dict[str, list[Consultation]]:
    """Load consultations (``{"user", "ts", "item"}`` per line), grouped by user.

    Each user's list is sorted by timestamp; ties keep input order.
    """
    streams: dict[str, list[Consultation]] = {}
    for lineno, line in _iter_lines(source):
        record = _parse_json(line, lineno)
        for key in ("user", "ts", "item"):
            if key not in record:
                raise FormatError(f"consultation record lacks {key!r}", lineno)
        item_id = str(record["item"])
        if item_id not in catalog:
            raise ReferentialError(f"line {lineno}: unknown item id {item_id!r}")
        c = Consultation(str(record["user"]), _parse_ts(record["ts"], lineno), item_id)
        streams.setdefault(c.user_id, []).append(c)
    for user in streams:
        streams[user].sort(key=lambda c: c.timestamp)
    return streams


def read_catalog(path, schema: Schema) -> Catalog:
    with open(path, encoding="utf-8") as f:
        return load_catalog(f, schema)


def read_log(path, catalog: Catalog) -> dict[str, list[Consultation]]:
    with open(path, encoding="utf-8") as f:
        return load_log(f, catalog)


def encode_value(value):
    if isinstance(value, frozenset):
        return sorted(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def item_record(item: Item) -> dict:
    return {"id": item.id, "type": item.type_id, "attrs": {k: encode_value(v) for k, v in item.values.items()}}


def dump_catalog(catalog: Catalog) -> str:
    return "".join(json.dumps(item_record(i), sort_keys=True) + "\n" for i in catalog.items.values())


def dump_log(streams: Mapping[str, list[Consultation]]) -> str:
    lines = []
    for user, stream in streams.items():
        for c in stream:
            lines.append(json.dumps({"user": user, "ts": c.timestamp, "item": c.item_id}) + "\n")
    return "".join(lines)


def derive_numeric_bounds(catalog: Catalog) -> Schema:
    """Return the catalog schema with numeric bounds set to observed extrema."""
    if not catalog.items:
        raise DegenerateRangeError("cannot derive bounds from an empty catalog")
    schema = catalog.schema
    for spec in catalog.schema:
        if spec.kind is not AttributeKind.NUMERIC:
            continue
        observed = [i.values[spec.name] for i in catalog.items.values() if spec.name in i.values]
        if len(set(observed)) < 2:
            raise DegenerateRangeError(
                f"attribute {spec.name!r}: need at least 2 distinct values to derive bounds, "
                f"found {len(set(observed))}"
            )
        schema = schema.replace_spec(spec.name, bounds=(min(observed), max(observed)))
    return schema


@dataclass(frozen=True)
class AttributeStats:
    name: str
    kind: str
    count: int
    min: float | None = None
    max: float | None = None
    mean: float | None = None
    sd: float | None = None

    @property
    def absent(self) -> bool:
        return self.count == 0


def corpus_stats(catalog: Catalog) -> list[AttributeStats]:
    """Per-attribute max/min/mean/population-sd over non-missing values.

    Only scalar kinds (numeric, binary) get summary statistics; other kinds
    report their value count. An attribute with no value at all is ``absent``.
    """
    if not catalog.items:
        raise ValueError("corpus_stats needs a non-empty catalog")
    rows = []
    for spec in catalog.schema:
        observed = [i.values[spec.name] for i in catalog.items.values() if spec.name in i.values]
        if observed and spec.kind in (AttributeKind.NUMERIC, AttributeKind.BINARY):
            arr = np.asarray(observed, dtype=float)
            rows.append(AttributeStats(spec.name, spec.kind.value, len(observed),
                                       float(arr.min()), float(arr.max()),
                                       float(arr.mean()), float(arr.std())))
        else:
            rows.append(AttributeStats(spec.name, spec.kind.value, len(observed)))
    return rows


def count_cells(catalog: Catalog) -> int:
    return sum(len(i.values) for i in catalog.items.values())


def degrade_catalog(catalog: Catalog, sparsity: float, seed: int) -> Catalog:
    """Delete ``floor(sparsity * n)`` of the ``n`` non-missing cells at random.

    Cells are (item, attribute) pairs of the catalog, so an item consulted many
    times loses the same values everywhere. Surviving values are untouched.
    """
    if not _is_number(sparsity) or not 0.0 <= sparsity <= 0.99:
        raise ValueError(f"sparsity must be within [0, 0.99], got {sparsity!r}")
    cells = [(item_id, name) for item_id, item in catalog.items.items() for name in item.values]
    n_delete = math.floor(Fraction(str(sparsity)) * len(cells))
    if n_delete == 0:
        return catalog
    rng = make_rng(seed)
    doomed = {cells[j] for j in rng.choice(len(cells), size=n_delete, replace=False)}
    items = {}
    for item_id, item in catalog.items.items():
        kept = {k: v for k, v in item.values.items() if (item_id, k) not in doomed}
        items[item_id] = item if len(kept) == len(item.values) else replace(item, values=kept)
    return replace(catalog, items=items)


def _draw_type_subsets(h, num_types, x, y, rng) -> list[tuple[int, ...]]:
    if x == h:
        return [tuple(range(h))] * num_types
    for _ in range(MAX_SPLIT_RETRIES):
        subsets = [tuple(sorted(rng.choice(h, size=x, replace=False))) for _ in range(num_types)]
        if all(len(set(p) & set(q)) >= y for p, q in combinations(subsets, 2)):
            return subsets
    raise InfeasibleSplitError(
        f"no attribute subsets found after {MAX_SPLIT_RETRIES} draws "
        f"(T={num_types}, x={x}, y={y}, h={h})"
    )


def split_types(catalog: Catalog, num_types: int, attrs_per_type: int, min_common: int, seed: int) -> Catalog:
    """Simulate a multi-type catalog.

    Every type keeps a random subset of ``attrs_per_type`` attribute names, any
    two types sharing at least ``min_common`` names; every item gets a uniformly
    random type and loses the values outside its type's subset.
    """
    names = catalog.schema.names
    h, T, x, y = len(names), num_types, attrs_per_type, min_common
    if T < 1 or not 0 <= y <= x <= h or x < 1:
        raise InfeasibleSplitError(f"need T >= 1 and y <= x <= h (T={T}, x={x}, y={y}, h={h})")
    rng = make_rng(seed)
    subsets = _draw_type_subsets(h, T, x, y, rng)
    type_attrs = {f"type{j}": tuple(names[i] for i in s) for j, s in enumerate(subsets)}
    assignment = rng.integers(T, size=len(catalog.items))
    items = {}
    for (item_id, item), t in zip(catalog.items.items(), assignment):
        type_id = f"type{t}"
        keep = set(type_attrs[type_id])
        items[item_id] = Item(item.id, {k: v for k, v in item.values.items() if k in keep}, type_id)
    return replace(catalog, items=items, type_attributes=type_attrs)
