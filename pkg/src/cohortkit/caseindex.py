"""Local case store: loads case records, executes filters to case-ID sets,
and exports cohorts as sorted ID files.

Retrieval semantics: a conjunction intersects its leaves' sets; a
categorical leaf matches a case when any of the case's values for that
field is listed (attributes are multi-valued); a numeric leaf compares the
case's single number; a record missing the field never matches either way;
the zero-leaf null filter matches every case. The index is immutable after
load and safe for concurrent execution.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .catalog import FieldCatalog
from .filters import CategoricalLeaf, Conjunction, Leaf, NumericLeaf, validate


class CaseLoadError(ValueError):
    """Raised for malformed case files or records off the catalog."""


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    attributes: dict[str, tuple[str, ...] | float | int]


class CaseIndex:
    """Inverted postings for categorical fields, sorted arrays for numeric ones."""

    def __init__(self, records: Sequence[CaseRecord], catalog: FieldCatalog):
        self.catalog = catalog
        self.records: tuple[CaseRecord, ...] = tuple(records)
        self.all_ids: frozenset[str] = frozenset(r.case_id for r in self.records)
        self._postings: dict[tuple[str, str], set[str]] = {}
        self._numeric: dict[str, tuple[list[float], list[str]]] = {}

        numeric_pairs: dict[str, list[tuple[float, str]]] = {}
        for record in self.records:
            for fld, value in record.attributes.items():
                if isinstance(value, tuple):
                    for v in value:
                        self._postings.setdefault((fld, v), set()).add(record.case_id)
                else:
                    numeric_pairs.setdefault(fld, []).append((float(value), record.case_id))
        for fld, pairs in numeric_pairs.items():
            pairs.sort()
            self._numeric[fld] = ([v for v, _ in pairs], [cid for _, cid in pairs])

    def __len__(self) -> int:
        return len(self.records)

    def postings(self, fld: str, value: str) -> frozenset[str]:
        return frozenset(self._postings.get((fld, value), ()))

    def _leaf_ids(self, leaf: Leaf) -> set[str]:
        if isinstance(leaf, CategoricalLeaf):
            out: set[str] = set()
            for v in leaf.values:
                out |= self._postings.get((leaf.field, v), set())
            return out
        values, ids = self._numeric.get(leaf.field, ([], []))
        x = float(leaf.value)
        if leaf.op == "<=":
            lo, hi = 0, bisect_right(values, x)
        elif leaf.op == "<":
            lo, hi = 0, bisect_left(values, x)
        elif leaf.op == ">=":
            lo, hi = bisect_left(values, x), len(values)
        else:  # ">"
            lo, hi = bisect_right(values, x), len(values)
        return set(ids[lo:hi])


def execute(filt: Conjunction, index: CaseIndex) -> set[str]:
    """Case-ID set retrieved by a validating filter."""
    report = validate(filt, index.catalog)
    if not report.valid:
        first = report.errors()[0]
        raise ValueError(f"cannot execute invalid filter: {first.path}: {first.message}")
    if not filt.leaves:
        return set(index.all_ids)
    leaf_sets = sorted((index._leaf_ids(leaf) for leaf in filt.leaves), key=len)
    result = leaf_sets[0]
    for s in leaf_sets[1:]:
        result = result & s
        if not result:
            break
    return result


# ---------------------------------------------------------------------------
# Case file I/O
# ---------------------------------------------------------------------------


def _parse_record(lineno: int, doc: object, catalog: FieldCatalog) -> CaseRecord:
    if not isinstance(doc, dict):
        raise CaseLoadError(f"line {lineno}: expected an object")
    case_id = doc.get("case_id")
    if not isinstance(case_id, str) or not case_id:
        raise CaseLoadError(f"line {lineno}: case_id must be a non-empty string")
    raw_attrs = doc.get("attributes")
    if not isinstance(raw_attrs, dict):
        raise CaseLoadError(f"line {lineno}: attributes must be an object")

    unknown = [fld for fld in raw_attrs if fld not in catalog]
    if unknown:
        raise CaseLoadError(f"line {lineno}: unknown field(s) {sorted(unknown)}")

    attributes: dict[str, tuple[str, ...] | float | int] = {}
    for fld, value in raw_attrs.items():
        spec = catalog.get(fld)
        assert spec is not None
        if spec.is_categorical:
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise CaseLoadError(f"line {lineno}: {fld} must be a list of strings")
            lowered = tuple(v.lower() for v in value)
            attributes[fld] = lowered
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise CaseLoadError(f"line {lineno}: {fld} must be a number")
            if isinstance(value, float) and not math.isfinite(value):
                raise CaseLoadError(f"line {lineno}: {fld} must be finite")
            attributes[fld] = value
    return CaseRecord(case_id=case_id, attributes=attributes)


def load_cases(fh: IO[str], catalog: FieldCatalog) -> CaseIndex:
    """Load a JSONL case file; errors carry the offending line number."""
    records: list[CaseRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CaseLoadError(f"line {lineno}: not valid JSON: {exc}") from None
        record = _parse_record(lineno, doc, catalog)
        if record.case_id in seen:
            raise CaseLoadError(f"line {lineno}: duplicate case_id {record.case_id!r}")
        seen.add(record.case_id)
        records.append(record)
    return CaseIndex(records, catalog)


def load_cases_file(path: str, catalog: FieldCatalog) -> CaseIndex:
    with open(path, "r", encoding="utf-8") as fh:
        return load_cases(fh, catalog)


def record_to_line(record: CaseRecord) -> str:
    attrs = {
        fld: (list(v) if isinstance(v, tuple) else v) for fld, v in record.attributes.items()
    }
    return json.dumps({"case_id": record.case_id, "attributes": attrs}, separators=(",", ":"), ensure_ascii=False)


def write_cases(records: Iterable[CaseRecord], fh: IO[str]) -> int:
    count = 0
    for record in records:
        fh.write(record_to_line(record) + "\n")
        count += 1
    return count


def export_cases(ids: Iterable[str], path: str) -> None:
    """Write the cohort export file: sorted IDs, one per line, trailing newline."""
    sorted_ids = sorted(ids)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for cid in sorted_ids:
            fh.write(cid + "\n")


def export_text(ids: Iterable[str]) -> str:
    """Export file content as a string (the HTTP download body)."""
    return "".join(cid + "\n" for cid in sorted(ids))


# ---------------------------------------------------------------------------
# Synthetic case fixtures
# ---------------------------------------------------------------------------


def _satisfying_number(rng: np.random.Generator, op: str, x: float, lo: float, hi: float) -> float | None:
    if op == "<=":
        lo2, hi2 = lo, math.floor(x)
    elif op == "<":
        lo2, hi2 = lo, math.ceil(x) - 1
    elif op == ">=":
        lo2, hi2 = math.ceil(x), hi
    else:
        lo2, hi2 = math.floor(x) + 1, hi
    lo2, hi2 = max(lo2, math.ceil(lo)), min(hi2, math.floor(hi))
    if lo2 > hi2:
        return None
    return int(rng.integers(int(lo2), int(hi2) + 1))


def _random_attributes(
    rng: np.random.Generator, catalog: FieldCatalog, density: float
) -> dict[str, tuple[str, ...] | float | int]:
    attributes: dict[str, tuple[str, ...] | float | int] = {}
    for spec in catalog:
        if rng.random() > density:
            continue
        if spec.is_categorical:
            values = spec.values or ()
            m = int(rng.integers(1, min(3, len(values)) + 1))
            picked = rng.choice(len(values), size=m, replace=False)
            attributes[spec.name] = tuple(values[i] for i in picked)
        else:
            rng_spec = spec.range
            assert rng_spec is not None
            attributes[spec.name] = int(rng.integers(int(rng_spec.min), int(rng_spec.max) + 1))
    return attributes


def generate_cases(
    catalog: FieldCatalog,
    count: int,
    seed: int,
    seed_filters: Sequence[Conjunction] = (),
    density: float = 0.85,
) -> list[CaseRecord]:
    """Seeded synthetic case records.

    The first len(seed_filters) records are forced to satisfy the
    corresponding filter (best effort for razor-thin comparators), so
    corpora built from those filters retrieve non-empty cohorts; the rest
    are random background.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    records: list[CaseRecord] = []
    width = max(6, len(str(count)))
    for i in range(count):
        attributes = _random_attributes(rng, catalog, density)
        if i < len(seed_filters):
            for leaf in seed_filters[i].leaves:
                spec = catalog.get(leaf.field)
                if spec is None:
                    continue
                if isinstance(leaf, CategoricalLeaf):
                    forced = leaf.values[int(rng.integers(len(leaf.values)))]
                    existing = attributes.get(leaf.field)
                    merged = {forced}
                    if isinstance(existing, tuple):
                        merged.update(existing)
                    attributes[leaf.field] = tuple(sorted(merged))
                elif spec.range is not None:
                    value = _satisfying_number(
                        rng, leaf.op, float(leaf.value), spec.range.min, spec.range.max
                    )
                    if value is not None:
                        attributes[leaf.field] = value
        records.append(CaseRecord(case_id=f"case-{i:0{width}d}", attributes=attributes))
    return records
