"""Attribute universe: kinds, weights and normalization constants.

A schema document is YAML (JSON is accepted too, being a YAML subset)::

    attributes:
      - name: tempo
        kind: numeric
        min: 35
        max: 239
      - name: location
        kind: coordinate
        max_distance: 20015.09
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Iterator

import yaml

from .exceptions import SchemaError

EARTH_RADIUS_KM = 6371.0
#: Half the circumference of the reference sphere, i.e. the antipodal distance.
HALF_CIRCUMFERENCE_KM = math.pi * EARTH_RADIUS_KM
DEFAULT_DECAY = 10.0


class AttributeKind(str, enum.Enum):
    SET = "set"
    INTERVAL = "interval"
    BINARY = "binary"
    NUMERIC = "numeric"
    COORDINATE = "coordinate"


@dataclass(frozen=True)
class AttributeSpec:
    """Declaration of a single attribute.

    ``bounds`` is the ``(min, max)`` pair used to normalize numeric differences;
    ``max_distance`` (km) normalizes coordinate distances.
    """

    name: str
    kind: AttributeKind
    weight: float = 1.0
    bounds: tuple[float, float] | None = None
    max_distance: float | None = None
    decay: float = DEFAULT_DECAY

    def __post_init__(self):
        object.__setattr__(self, "kind", AttributeKind(self.kind))
        if self.kind is AttributeKind.COORDINATE and self.max_distance is None:
            object.__setattr__(self, "max_distance", HALF_CIRCUMFERENCE_KM)
        if self.bounds is not None:
            object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))

    def validate(self, require_bounds=True):
        where = f"attribute {self.name!r}"
        if not isinstance(self.name, str) or not self.name:
            raise SchemaError(f"{where}: name must be a non-empty string")
        if not _finite(self.weight) or self.weight < 0:
            raise SchemaError(f"{where}: weight must be a finite number >= 0, got {self.weight!r}")
        if self.kind is AttributeKind.NUMERIC:
            if self.bounds is None:
                if require_bounds:
                    raise SchemaError(f"{where}: numeric attribute requires min and max")
            elif not (_finite(self.bounds[0]) and _finite(self.bounds[1])) or self.bounds[0] >= self.bounds[1]:
                raise SchemaError(f"{where}: numeric bounds need min < max, got {self.bounds}")
            if not _finite(self.decay) or self.decay <= 0:
                raise SchemaError(f"{where}: decay must be > 0, got {self.decay!r}")
        if self.kind is AttributeKind.COORDINATE:
            if not _finite(self.max_distance) or self.max_distance <= 0:
                raise SchemaError(f"{where}: max_distance must be > 0, got {self.max_distance!r}")


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


@dataclass(frozen=True)
class Schema:
    """Ordered collection of attribute specs with unique names."""

    attributes: tuple[AttributeSpec, ...] = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "_index", {a.name: a for a in self.attributes})

    def __iter__(self) -> Iterator[AttributeSpec]:
        return iter(self.attributes)

    def __len__(self):
        return len(self.attributes)

    def __contains__(self, name):
        return name in self._index

    def __getitem__(self, name) -> AttributeSpec:
        return self._index[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def validate(self, require_bounds=True) -> "Schema":
        seen = set()
        for spec in self.attributes:
            if spec.name in seen:
                raise SchemaError(f"attribute {spec.name!r}: duplicate attribute name")
            seen.add(spec.name)
            spec.validate(require_bounds=require_bounds)
        if self.attributes and not any(a.weight > 0 for a in self.attributes):
            raise SchemaError("at least one attribute must have weight > 0")
        return self

    def replace_spec(self, name, **changes) -> "Schema":
        return Schema(tuple(replace(a, **changes) if a.name == name else a for a in self.attributes))

    def subset(self, names: Iterable[str]) -> "Schema":
        keep = set(names)
        return Schema(tuple(a for a in self.attributes if a.name in keep))


_ALLOWED_KEYS = {"name", "kind", "weight", "min", "max", "max_distance", "decay"}


def _spec_from_mapping(entry: Any, position: int) -> AttributeSpec:
    if not isinstance(entry, dict):
        raise SchemaError(f"attributes[{position}]: expected a mapping, got {type(entry).__name__}")
    unknown = set(entry) - _ALLOWED_KEYS
    if unknown:
        raise SchemaError(f"attributes[{position}]: unknown field(s) {sorted(unknown)}")
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError(f"attributes[{position}]: missing or invalid field 'name'")
    try:
        kind = AttributeKind(entry.get("kind"))
    except ValueError:
        raise SchemaError(
            f"attribute {name!r}: field 'kind' must be one of "
            f"{[k.value for k in AttributeKind]}, got {entry.get('kind')!r}"
        ) from None
    bounds = None
    if "min" in entry or "max" in entry:
        if kind is not AttributeKind.NUMERIC:
            raise SchemaError(f"attribute {name!r}: min/max only apply to numeric attributes")
        if "min" not in entry or "max" not in entry:
            raise SchemaError(f"attribute {name!r}: numeric bounds need both min and max")
        bounds = (entry["min"], entry["max"])
        if not all(_finite(b) for b in bounds):
            raise SchemaError(f"attribute {name!r}: min/max must be numbers")
    if "max_distance" in entry and kind is not AttributeKind.COORDINATE:
        raise SchemaError(f"attribute {name!r}: max_distance only applies to coordinate attributes")
    if "decay" in entry and kind is not AttributeKind.NUMERIC:
        raise SchemaError(f"attribute {name!r}: decay only applies to numeric attributes")
    return AttributeSpec(
        name=name,
        kind=kind,
        weight=entry.get("weight", 1.0),
        bounds=bounds,
        max_distance=entry.get("max_distance"),
        decay=entry.get("decay", DEFAULT_DECAY),
    )


def load_schema(source: str, require_bounds: bool = True) -> Schema:
    """Parse and validate a schema document.

    Raises :class:`SchemaError` on malformed YAML (with line/column) or on any
    rule violation (naming the attribute).
    """
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SchemaError(f"malformed schema document{where}: {getattr(exc, 'problem', exc)}") from exc
    if doc is None:
        doc = {"attributes": []}
    if not isinstance(doc, dict) or "attributes" not in doc:
        raise SchemaError("schema document must be a mapping with an 'attributes' list")
    entries = doc["attributes"] or []
    if not isinstance(entries, list):
        raise SchemaError("field 'attributes' must be a list")
    schema = Schema(tuple(_spec_from_mapping(e, i) for i, e in enumerate(entries)))
    return schema.validate(require_bounds=require_bounds)


def read_schema(path, require_bounds: bool = True) -> Schema:
    with open(path, encoding="utf-8") as f:
        return load_schema(f.read(), require_bounds=require_bounds)


def schema_to_dict(schema: Schema) -> dict:
    entries = []
    for a in schema:
        entry = {"name": a.name, "kind": a.kind.value, "weight": a.weight}
        if a.kind is AttributeKind.NUMERIC:
            if a.bounds is not None:
                entry["min"], entry["max"] = a.bounds
            entry["decay"] = a.decay
        if a.kind is AttributeKind.COORDINATE:
            entry["max_distance"] = a.max_distance
        entries.append(entry)
    return {"attributes": entries}


def dump_schema(schema: Schema) -> str:
    """Serialize a schema; ``load_schema(dump_schema(s)) == s``."""
    return yaml.safe_dump(schema_to_dict(schema), sort_keys=False)


def default_weights(schema: Schema) -> Schema:
    """Return a copy of ``schema`` with every attribute weight set to 1."""
    return Schema(tuple(replace(a, weight=1.0) for a in schema))
