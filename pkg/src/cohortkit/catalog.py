"""Field catalog: the machine-readable manifest of filterable cohort properties.

A catalog lists every field a filter may constrain, its kind (categorical
with an enumerated value list, or numeric with a bounded range), and display
metadata used by the verbalizer and the web UI. Catalogs are immutable after
loading and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

CATEGORICAL = "categorical"
NUMERIC = "numeric"


class CatalogError(ValueError):
    """Raised when a catalog manifest is malformed or violates invariants."""


@dataclass(frozen=True)
class NumericRange:
    min: float
    max: float
    unit: str


@dataclass(frozen=True)
class FieldSpec:
    """One filterable property.

    ``display`` is the human phrase used in verbalizations ("program name",
    "age at diagnosis"); it comes from the manifest when present, otherwise
    it is derived from the dotted field name.
    """

    name: str
    kind: str
    group: str
    values: tuple[str, ...] | None = None
    range: NumericRange | None = None
    display: str = ""

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


def derive_display(name: str) -> str:
    """Default display phrase for a dotted field path.

    Generic tails like ``name``/``id`` keep their parent segment so the
    phrase stays distinctive (cases.project.program.name -> "program name").
    """
    parts = name.split(".")
    tail = parts[-1]
    if tail in ("name", "id") and len(parts) > 1:
        tail = f"{parts[-2]}_{tail}"
    return tail.replace("_", " ").strip()


@dataclass(frozen=True)
class FieldCatalog:
    """Ordered, immutable collection of field specs (manifest order)."""

    version: str
    fields: tuple[FieldSpec, ...]
    _by_name: dict[str, FieldSpec] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_name", {f.name: f for f in self.fields})

    def __iter__(self):
        return iter(self.fields)

    def __len__(self) -> int:
        return len(self.fields)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> FieldSpec | None:
        return self._by_name.get(name)

    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]

    def categorical_fields(self) -> list[FieldSpec]:
        return [f for f in self.fields if f.kind == CATEGORICAL]

    def numeric_fields(self) -> list[FieldSpec]:
        return [f for f in self.fields if f.kind == NUMERIC]

    def to_manifest(self) -> dict:
        """Manifest document equivalent to this catalog (wire shape)."""
        out = []
        for f in self.fields:
            out.append(
                {
                    "name": f.name,
                    "kind": f.kind,
                    "values": list(f.values) if f.values is not None else None,
                    "range": (
                        {"min": f.range.min, "max": f.range.max, "unit": f.range.unit}
                        if f.range is not None
                        else None
                    ),
                    "group": f.group,
                    "display": f.display,
                }
            )
        return {"version": self.version, "fields": out}


def _field_error(idx: int, name: str, msg: str) -> CatalogError:
    where = f"fields[{idx}]" + (f" ({name})" if name else "")
    return CatalogError(f"{where}: {msg}")


def _parse_field(idx: int, raw: object) -> FieldSpec:
    if not isinstance(raw, dict):
        raise _field_error(idx, "", "field entry must be an object")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise _field_error(idx, "", "field name must be a non-empty string")
    kind = raw.get("kind")
    if kind not in (CATEGORICAL, NUMERIC):
        raise _field_error(idx, name, f"kind must be '{CATEGORICAL}' or '{NUMERIC}', got {kind!r}")
    group = raw.get("group")
    if not isinstance(group, str):
        raise _field_error(idx, name, "group must be a string")
    display = raw.get("display")
    if display is not None and not isinstance(display, str):
        raise _field_error(idx, name, "display must be a string when present")

    values: tuple[str, ...] | None = None
    rng: NumericRange | None = None
    if kind == CATEGORICAL:
        raw_values = raw.get("values")
        if not isinstance(raw_values, list) or not raw_values:
            raise _field_error(idx, name, "categorical field needs a non-empty values list")
        if raw.get("range") is not None:
            raise _field_error(idx, name, "categorical field must not carry a range")
        seen: set[str] = set()
        for v in raw_values:
            if not isinstance(v, str) or not v:
                raise _field_error(idx, name, f"values must be non-empty strings, got {v!r}")
            if v != v.lower():
                raise _field_error(idx, name, f"value {v!r} is not lowercase")
            if v in seen:
                raise _field_error(idx, name, f"duplicate value {v!r}")
            seen.add(v)
        values = tuple(raw_values)
    else:
        raw_range = raw.get("range")
        if not isinstance(raw_range, dict):
            raise _field_error(idx, name, "numeric field needs a range object")
        if raw.get("values") is not None:
            raise _field_error(idx, name, "numeric field must not carry a values list")
        try:
            lo = raw_range["min"]
            hi = raw_range["max"]
            unit = raw_range["unit"]
        except KeyError as exc:
            raise _field_error(idx, name, f"range is missing key {exc}") from None
        if not isinstance(lo, (int, float)) or isinstance(lo, bool):
            raise _field_error(idx, name, "range min must be a number")
        if not isinstance(hi, (int, float)) or isinstance(hi, bool):
            raise _field_error(idx, name, "range max must be a number")
        if not isinstance(unit, str):
            raise _field_error(idx, name, "range unit must be a string")
        if not lo < hi:
            raise _field_error(idx, name, f"range must satisfy min < max, got [{lo}, {hi}]")
        rng = NumericRange(min=lo, max=hi, unit=unit)

    return FieldSpec(
        name=name,
        kind=kind,
        group=group,
        values=values,
        range=rng,
        display=display or derive_display(name),
    )


def load_catalog(manifest_text: bytes | str) -> FieldCatalog:
    """Parse and validate a catalog manifest document.

    Raises CatalogError with the offending path on malformed input,
    duplicate field names, or invariant violations.
    """
    if isinstance(manifest_text, bytes):
        try:
            manifest_text = manifest_text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CatalogError(f"manifest is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(manifest_text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CatalogError("manifest must be a JSON object")
    version = doc.get("version")
    if not isinstance(version, str):
        raise CatalogError("manifest needs a string 'version'")
    raw_fields = doc.get("fields")
    if not isinstance(raw_fields, list):
        raise CatalogError("manifest needs a 'fields' list")
    if not raw_fields:
        raise CatalogError("catalog must define at least one field")

    specs = []
    names: set[str] = set()
    for idx, raw in enumerate(raw_fields):
        spec = _parse_field(idx, raw)
        if spec.name in names:
            raise _field_error(idx, spec.name, "duplicate field name")
        names.add(spec.name)
        specs.append(spec)
    return FieldCatalog(version=version, fields=tuple(specs))


def load_catalog_file(path: str) -> FieldCatalog:
    with open(path, "rb") as fh:
        return load_catalog(fh.read())


def desk_catalog() -> FieldCatalog:
    """The packaged desk-scale catalog (a full production set is a drop-in manifest)."""
    text = resources.files("cohortkit.data").joinpath("desk_catalog.json").read_bytes()
    return load_catalog(text)
