import json

import pytest

from cohortkit import CatalogError, load_catalog
from cohortkit.catalog import derive_display


def field(name, kind="categorical", values=("a", "b"), rng=None, group="g", **extra):
    body = {"name": name, "kind": kind, "group": group}
    if kind == "categorical":
        body["values"] = list(values)
        body["range"] = None
    else:
        body["values"] = None
        body["range"] = rng or {"min": 0, "max": 10, "unit": "days"}
    body.update(extra)
    return body


def manifest(*fields, version="test-1"):
    return json.dumps({"version": version, "fields": list(fields)})


def test_load_desk_manifest_exposes_table_fields(catalog):
    spec = catalog.get("cases.samples.preservation_method")
    assert spec is not None
    assert "ffpe" in (spec.values or ())
    assert catalog.get("cases.diagnoses.age_at_diagnosis").range.unit == "days"


def test_iteration_order_is_manifest_order():
    cat = load_catalog(manifest(field("b.x"), field("a.y")))
    assert cat.field_names() == ["b.x", "a.y"]


def test_empty_field_list_rejected():
    with pytest.raises(CatalogError, match="at least one field"):
        load_catalog(manifest())


def test_numeric_min_equal_max_rejected():
    with pytest.raises(CatalogError, match="min < max"):
        load_catalog(manifest(field("a.x", kind="numeric", rng={"min": 5, "max": 5, "unit": "u"})))


def test_duplicate_field_rejected():
    with pytest.raises(CatalogError, match="duplicate field"):
        load_catalog(manifest(field("a.x"), field("a.x")))


def test_duplicate_value_rejected():
    with pytest.raises(CatalogError, match="duplicate value"):
        load_catalog(manifest(field("a.x", values=("v", "v"))))


def test_uppercase_value_rejected():
    with pytest.raises(CatalogError, match="not lowercase"):
        load_catalog(manifest(field("a.x", values=("OK",))))


def test_malformed_json_rejected():
    with pytest.raises(CatalogError, match="not valid JSON"):
        load_catalog(b"{nope")


def test_categorical_needs_values():
    with pytest.raises(CatalogError, match="values list"):
        load_catalog(manifest({"name": "a.x", "kind": "categorical", "group": "g", "values": [], "range": None}))


def test_error_paths_carry_field_index():
    with pytest.raises(CatalogError, match=r"fields\[1\]"):
        load_catalog(manifest(field("a.x"), field("b.y", values=())))


def test_display_defaults_and_override():
    cat = load_catalog(
        manifest(
            field("cases.project.program.name"),
            field("cases.diagnoses.age_at_diagnosis", kind="numeric"),
            field("cases.weird_thing", display="custom phrase"),
        )
    )
    assert cat.get("cases.project.program.name").display == "program name"
    assert cat.get("cases.diagnoses.age_at_diagnosis").display == "age at diagnosis"
    assert cat.get("cases.weird_thing").display == "custom phrase"


def test_derive_display_rules():
    assert derive_display("cases.project.project_id") == "project id"
    assert derive_display("cases.samples.tissue_type") == "tissue type"
    assert derive_display("cases.project.program.name") == "program name"


def test_manifest_round_trip(catalog):
    doc = catalog.to_manifest()
    again = load_catalog(json.dumps(doc))
    assert again.field_names() == catalog.field_names()
    assert again.get("cases.samples.tissue_type").values == catalog.get("cases.samples.tissue_type").values


def test_desk_displays_are_unique(catalog):
    displays = [f.display for f in catalog]
    assert len(set(displays)) == len(displays)
