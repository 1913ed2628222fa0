"""Render cohort filters as natural-language descriptions.

Two modes. Canonical mode is a loss-free template: the lexicon parser
recovers the exact filter from its output, which makes round-trip
properties provable. Fluent mode draws phrasing from a seeded template
bank to produce varied, training-style sentences; it keeps every value
verbatim but is not guaranteed to round-trip.
"""

from __future__ import annotations

import random

from .catalog import FieldCatalog, FieldSpec
from .filters import CategoricalLeaf, Conjunction, canonicalize, validate

# Comparator phrases used by canonical mode; the lexicon parser maps each
# of these back to its operator, so the pairing must stay in sync with
# nlparse.COMPARATOR_PHRASES.
CANONICAL_OP_PHRASE = {
    ">=": "is at least",
    "<=": "is at most",
    ">": "is more than",
    "<": "is less than",
}

EMPTY_CANONICAL = "all cases"
EMPTY_FLUENT = "all cases in the GDC"


def _spec_for(leaf_field: str, catalog: FieldCatalog) -> FieldSpec:
    spec = catalog.get(leaf_field)
    if spec is None:  # guarded by the validate() gate below
        raise ValueError(f"field {leaf_field!r} not in catalog")
    return spec


def _require_valid(filt: Conjunction, catalog: FieldCatalog) -> None:
    report = validate(filt, catalog)
    if not report.valid:
        first = report.errors()[0]
        raise ValueError(f"cannot verbalize invalid filter: {first.path}: {first.message}")


def _format_number(value: float | int) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def verbalize_canonical(filt: Conjunction, catalog: FieldCatalog) -> str:
    """Deterministic, parse-recoverable sentence for a valid filter.

    Leaves appear in canonical order; each clause is
    ``<display phrase> <operator phrase> <values>``; clauses join on "; ".
    """
    _require_valid(filt, catalog)
    filt = canonicalize(filt)
    if not filt.leaves:
        return EMPTY_CANONICAL
    clauses = []
    for leaf in filt.leaves:
        spec = _spec_for(leaf.field, catalog)
        if isinstance(leaf, CategoricalLeaf):
            clauses.append(f"{spec.display} is any of: {', '.join(leaf.values)}")
        else:
            phrase = CANONICAL_OP_PHRASE[leaf.op]
            unit = spec.range.unit if spec.range else ""
            clauses.append(f"{spec.display} {phrase} {_format_number(leaf.value)} {unit}".rstrip())
    return "cases where " + "; ".join(clauses)


# ---------------------------------------------------------------------------
# Fluent mode
# ---------------------------------------------------------------------------

_OPENERS = ("cases with", "patients with", "cohort of cases with", "samples with")

_CAT_TEMPLATES = (
    "{values} for {display}",
    "{display} of {values}",
    "{display} being {values}",
    "{values} {display}",
)

_NUM_PHRASES = {
    ">=": ("at least", "no less than"),
    "<=": ("at most", "no more than"),
    ">": ("more than", "over"),
    "<": ("less than", "under"),
}

_JOINERS = (", ", " and ", " or ")


def verbalize_fluent(filt: Conjunction, catalog: FieldCatalog, seed: int) -> str:
    """Grammatical-ish sentence from a seeded template bank.

    Same (filter, seed) gives the same text; every leaf value appears
    verbatim. Surface form varies with the seed, value mentions never do.
    """
    _require_valid(filt, catalog)
    filt = canonicalize(filt)
    if not filt.leaves:
        return EMPTY_FLUENT
    rng = random.Random(seed)
    clauses = []
    for leaf in filt.leaves:
        spec = _spec_for(leaf.field, catalog)
        if isinstance(leaf, CategoricalLeaf):
            values = rng.choice(_JOINERS).join(leaf.values)
            template = rng.choice(_CAT_TEMPLATES)
            clauses.append(template.format(values=values, display=spec.display))
        else:
            phrase = rng.choice(_NUM_PHRASES[leaf.op])
            unit = spec.range.unit if spec.range else ""
            clauses.append(f"{spec.display} {phrase} {_format_number(leaf.value)} {unit}".rstrip())
    rng.shuffle(clauses)
    opener = rng.choice(_OPENERS)
    return f"{opener} {'; '.join(clauses)}"
