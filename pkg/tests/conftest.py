import pytest

from divctx.catalog import Catalog, Consultation, make_item
from divctx.schema import AttributeKind, AttributeSpec, Schema


@pytest.fixture
def schema():
    return Schema((
        AttributeSpec("tags", AttributeKind.SET),
        AttributeSpec("years", AttributeKind.INTERVAL),
        AttributeSpec("mode", AttributeKind.BINARY),
        AttributeSpec("tempo", AttributeKind.NUMERIC, bounds=(35, 239)),
        AttributeSpec("location", AttributeKind.COORDINATE),
    ))


@pytest.fixture
def binary_schema():
    """Ten binary attributes: an item with m ones against an all-zero item has similarity (10 - m) / 10."""
    return Schema(tuple(AttributeSpec(f"b{j}", AttributeKind.BINARY) for j in range(10)))


def bits_item(item_id, ones, n=10):
    from divctx.catalog import Item
    return Item(item_id, {f"b{j}": int(j < ones) for j in range(n)})


def catalog_from(schema, records):
    items = {}
    for item_id, attrs in records.items():
        items[item_id] = make_item(item_id, attrs, schema)
    return Catalog(schema=schema, items=items)


def stream_of(user, item_ids, start=0, step=60):
    return [Consultation(user, start + n * step, i) for n, i in enumerate(item_ids)]
