"""Cohort filter AST, wire parsing, validation, and canonical serialization.

A filter is a flat conjunction of leaves: categorical leaves select cases
whose field matches any listed value (``in``), numeric leaves compare a
field against a threshold (``<=``, ``<``, ``>=``, ``>``). The wire form is
UTF-8 JSON with keys exactly ``op``/``content``/``field``/``value``::

    {"op": "and", "content": [
        {"op": "in", "content": {"field": "cases.samples.preservation_method",
                                 "value": ["ffpe"]}},
        {"op": ">=", "content": {"field": "cases.diagnoses.age_at_diagnosis",
                                 "value": 18250}}]}

Structure checking (this module's parser) and string legality checking
(``validate`` against a catalog) are deliberately separate tiers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

from .catalog import FieldCatalog

NUMERIC_OPS = ("<=", "<", ">=", ">")


class FilterParseError(ValueError):
    """Raised for non-JSON input (syntax) or wrong shape/keys/ops (structure)."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class CategoricalLeaf:
    field: str
    values: tuple[str, ...]

    op = "in"


@dataclass(frozen=True)
class NumericLeaf:
    field: str
    op: str
    value: float | int


Leaf = CategoricalLeaf | NumericLeaf


@dataclass(frozen=True)
class Conjunction:
    """Top-level filter node: an ``and`` over leaves (possibly zero — D1 null filter)."""

    leaves: tuple[Leaf, ...]

    op = "and"

    def __len__(self) -> int:
        return len(self.leaves)


FilterNode = Conjunction


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def valid(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "issues": [
                {"severity": i.severity, "path": i.path, "message": i.message}
                for i in self.issues
            ],
        }


def empty_filter() -> Conjunction:
    return Conjunction(leaves=())


# ---------------------------------------------------------------------------
# Wire parsing
# ---------------------------------------------------------------------------


def _check_keys(obj: dict, allowed: tuple[str, ...], path: str) -> None:
    extra = set(obj) - set(allowed)
    missing = set(allowed) - set(obj)
    if extra:
        raise FilterParseError(f"unexpected key(s) {sorted(extra)}", path)
    if missing:
        raise FilterParseError(f"missing key(s) {sorted(missing)}", path)


def _is_number(v: object) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _parse_leaf(raw: object, path: str) -> Leaf:
    if not isinstance(raw, dict):
        raise FilterParseError("leaf must be an object", path)
    _check_keys(raw, ("op", "content"), path)
    op = raw["op"]
    content = raw["content"]
    if op == "and":
        raise FilterParseError("nested conjunctions are not allowed (flat depth-2 only)", path)
    if not isinstance(content, dict):
        raise FilterParseError("leaf content must be an object", f"{path}.content")
    _check_keys(content, ("field", "value"), f"{path}.content")
    fld = content["field"]
    if not isinstance(fld, str) or not fld:
        raise FilterParseError("field must be a non-empty string", f"{path}.content.field")
    value = content["value"]

    if op == "in":
        if not isinstance(value, list):
            raise FilterParseError("'in' leaf value must be a list of strings", f"{path}.content.value")
        if not value:
            raise FilterParseError("'in' leaf needs at least one value", f"{path}.content.value")
        cleaned: list[str] = []
        seen: set[str] = set()
        for j, v in enumerate(value):
            if not isinstance(v, str):
                raise FilterParseError(
                    f"'in' values must be strings, got {type(v).__name__}",
                    f"{path}.content.value[{j}]",
                )
            low = v.lower()
            if low != v:
                warnings.warn(
                    f"{path}.content.value[{j}]: lowercased {v!r}", stacklevel=2
                )
            if low in seen:
                warnings.warn(
                    f"{path}.content.value[{j}]: dropped duplicate value {low!r}",
                    stacklevel=2,
                )
                continue
            seen.add(low)
            cleaned.append(low)
        return CategoricalLeaf(field=fld, values=tuple(cleaned))

    if op in NUMERIC_OPS:
        if not _is_number(value):
            raise FilterParseError(
                f"comparator leaf value must be a number, got {type(value).__name__}",
                f"{path}.content.value",
            )
        return NumericLeaf(field=fld, op=op, value=value)

    raise FilterParseError(f"unknown leaf op {op!r}", path)


def parse_filter(text: bytes | str, catalog: FieldCatalog | None = None) -> Conjunction:
    """Parse the wire form into a FilterNode.

    Accepts arbitrary bytes and raises only FilterParseError. Structure is
    checked here; field/value legality against the ``catalog`` is deferred
    to ``validate`` (the catalog argument is accepted for signature symmetry
    and future stricter modes). Incoming values are lowercased and deduped
    with a UserWarning so every parsed node satisfies the AST invariants.
    """
    del catalog  # legality checking lives in validate()
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FilterParseError(f"input is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FilterParseError(f"input is not valid JSON: {exc}") from None

    if not isinstance(doc, dict):
        raise FilterParseError("filter must be a JSON object")
    _check_keys(doc, ("op", "content"), "$")
    if doc["op"] != "and":
        raise FilterParseError(f"top-level op must be 'and', got {doc['op']!r}")
    content = doc["content"]
    if not isinstance(content, list):
        raise FilterParseError("top-level content must be a list of leaves", "$.content")
    leaves = tuple(
        _parse_leaf(raw, f"$.content[{i}]") for i, raw in enumerate(content)
    )
    return Conjunction(leaves=leaves)


# ---------------------------------------------------------------------------
# Validation (string legality tier)
# ---------------------------------------------------------------------------


def validate(filt: Conjunction, catalog: FieldCatalog) -> ValidationReport:
    """Check a structurally well-formed filter against the catalog.

    Problems are reported, never raised: unknown fields, out-of-list values,
    out-of-range numbers, kind/op mismatches, and repeated fields are errors;
    the zero-leaf null filter is a warning (it matches all cases).
    """
    issues: list[Issue] = []
    if not filt.leaves:
        issues.append(Issue("warning", "$", "null filter matches all cases"))

    seen_fields: set[str] = set()
    for i, leaf in enumerate(filt.leaves):
        path = f"$.content[{i}]"
        if leaf.field in seen_fields:
            issues.append(Issue("error", path, f"duplicate field {leaf.field!r}"))
        seen_fields.add(leaf.field)
        spec = catalog.get(leaf.field)
        if spec is None:
            issues.append(Issue("error", path, f"unknown field {leaf.field!r}"))
            continue
        if isinstance(leaf, CategoricalLeaf):
            if not spec.is_categorical:
                issues.append(Issue("error", path, f"field {leaf.field!r} is numeric, not categorical"))
                continue
            allowed = set(spec.values or ())
            for j, v in enumerate(leaf.values):
                if v not in allowed:
                    issues.append(
                        Issue("error", f"{path}.value[{j}]", f"value {v!r} not allowed for {leaf.field!r}")
                    )
            if len(set(leaf.values)) != len(leaf.values):
                issues.append(Issue("error", path, "duplicate values in leaf"))
        else:
            if spec.is_categorical:
                issues.append(Issue("error", path, f"field {leaf.field!r} is categorical, not numeric"))
                continue
            rng = spec.range
            assert rng is not None
            if not (rng.min <= leaf.value <= rng.max):
                issues.append(
                    Issue(
                        "error",
                        f"{path}.value",
                        f"value {leaf.value} outside range [{rng.min}, {rng.max}] {rng.unit}",
                    )
                )
    return ValidationReport(issues=tuple(issues))


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------


def _canonical_value(v: float | int) -> float | int:
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return v


def canonicalize(filt: Conjunction) -> Conjunction:
    """Normal form: leaves sorted by field name, values sorted, ints normalized."""
    leaves: list[Leaf] = []
    for leaf in filt.leaves:
        if isinstance(leaf, CategoricalLeaf):
            leaves.append(CategoricalLeaf(field=leaf.field, values=tuple(sorted(leaf.values))))
        else:
            leaves.append(NumericLeaf(field=leaf.field, op=leaf.op, value=_canonical_value(leaf.value)))
    leaves.sort(key=lambda lf: lf.field)
    return Conjunction(leaves=tuple(leaves))


def filter_to_wire(filt: Conjunction) -> dict:
    """Wire-shaped dict (canonical key order, original leaf order)."""
    content = []
    for leaf in filt.leaves:
        if isinstance(leaf, CategoricalLeaf):
            content.append({"op": "in", "content": {"field": leaf.field, "value": list(leaf.values)}})
        else:
            content.append(
                {"op": leaf.op, "content": {"field": leaf.field, "value": _canonical_value(leaf.value)}}
            )
    return {"op": "and", "content": content}


def serialize_canonical(filt: Conjunction) -> str:
    """Deterministic single-line serialization.

    Leaves sorted by field name, values sorted lexicographically, object keys
    in fixed order, no insignificant whitespace. Equal ASTs (up to leaf/value
    order) produce byte-identical output.
    """
    return json.dumps(filter_to_wire(canonicalize(filt)), separators=(",", ":"), ensure_ascii=False)


def lint_null(filt: Conjunction) -> bool:
    """True iff the conjunction has zero leaves (matches all cases)."""
    return len(filt.leaves) == 0
