"""Synthetic cohort filter generation and paired-corpus plumbing.

Filters are drawn by a two-step process: the leaf count comes from a
chi-square(6) draw rounded to the nearest integer and rejection-sampled
into [1, number of catalog fields]; each chosen field then gets either a
uniform comparator + in-range value (numeric) or 1..5 values sampled
without replacement (categorical). Uniqueness across a corpus is enforced
by the MD5 digest of the canonical serialization.

All randomness flows through numpy's PCG64 so corpora are reproducible
from a 64-bit seed across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .catalog import FieldCatalog, FieldSpec
from .filters import (
    CategoricalLeaf,
    Conjunction,
    Leaf,
    NumericLeaf,
    filter_to_wire,
    parse_filter,
    serialize_canonical,
)

PROVENANCE_REAL = "real"
PROVENANCE_SYNTHETIC = "synthetic"


class GenerationExhausted(RuntimeError):
    """Raised when the dedup rejection loop stops making progress."""


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    target_count: int
    chi_square_df: int = 6
    max_values_per_field: int = 5

    def __post_init__(self) -> None:
        if self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if self.chi_square_df < 1:
            raise ValueError("chi_square_df must be >= 1")
        if self.max_values_per_field < 1:
            raise ValueError("max_values_per_field must be >= 1")


@dataclass(frozen=True)
class PairedSample:
    """(natural-language query, filter) pair with provenance and dedup digest."""

    query: str | None
    filter: Conjunction
    provenance: str
    hash: str


def canonical_hash(filt: Conjunction) -> str:
    """Lowercase-hex MD5 of the canonical serialization (leaf order never matters)."""
    return hashlib.md5(serialize_canonical(filt).encode("utf-8")).hexdigest()


def sample_field_count(rng: np.random.Generator, max_fields: int, config: SynthConfig) -> int:
    """Draw the leaf count n ~ round(chi-square(df)) conditioned on 1 <= n <= max_fields.

    The continuous draw is the sum of df squared standard normals; rounding is
    half-to-even; out-of-range draws are rejected and redrawn.
    """
    if max_fields < 1:
        raise ValueError("max_fields must be >= 1")
    while True:
        x = float(np.sum(rng.standard_normal(config.chi_square_df) ** 2))
        n = round(x)
        if 1 <= n <= max_fields:
            return n


def _sample_leaf(rng: np.random.Generator, spec: FieldSpec, config: SynthConfig) -> Leaf:
    if spec.is_categorical:
        values = spec.values or ()
        m = int(rng.integers(1, min(config.max_values_per_field, len(values)) + 1))
        picked = rng.choice(len(values), size=m, replace=False)
        return CategoricalLeaf(field=spec.name, values=tuple(values[i] for i in picked))
    rng_spec = spec.range
    assert rng_spec is not None
    op = str(rng.choice(np.array(["<=", "<", ">=", ">"])))
    # Unit granularity: desk units are integer-valued (days, year), so round.
    value = int(round(float(rng.uniform(rng_spec.min, rng_spec.max))))
    return NumericLeaf(field=spec.name, op=op, value=value)


def sample_filter(rng: np.random.Generator, catalog: FieldCatalog, config: SynthConfig) -> Conjunction:
    """One random filter: n distinct fields uniformly without replacement, then values."""
    if len(catalog) == 0:
        raise ValueError("catalog is empty")
    n = sample_field_count(rng, len(catalog), config)
    picked = rng.choice(len(catalog), size=n, replace=False)
    leaves = tuple(_sample_leaf(rng, catalog.fields[i], config) for i in picked)
    return Conjunction(leaves=leaves)


def generate_corpus(
    config: SynthConfig,
    catalog: FieldCatalog,
    existing_hashes: set[str] | None = None,
) -> list[Conjunction]:
    """Generate exactly target_count filters with distinct digests.

    Digests are also disjoint from ``existing_hashes``. Aborts with
    GenerationExhausted after 100 x target_count consecutive rejections,
    which only tiny catalogs can trigger.
    """
    rng = np.random.default_rng(config.seed)
    taken = set(existing_hashes) if existing_hashes else set()
    out: list[Conjunction] = []
    consecutive_rejects = 0
    limit = 100 * config.target_count
    while len(out) < config.target_count:
        filt = sample_filter(rng, catalog, config)
        digest = canonical_hash(filt)
        if digest in taken:
            consecutive_rejects += 1
            if consecutive_rejects >= limit:
                raise GenerationExhausted(
                    f"{consecutive_rejects} consecutive duplicate rejections; "
                    f"catalog may not support {config.target_count} unique filters"
                )
            continue
        consecutive_rejects = 0
        taken.add(digest)
        out.append(filt)
    return out


# ---------------------------------------------------------------------------
# Corpus JSONL
# ---------------------------------------------------------------------------


def sample_to_line(sample: PairedSample) -> str:
    return json.dumps(
        {
            "query": sample.query,
            "filter": filter_to_wire(sample.filter),
            "provenance": sample.provenance,
            "hash": sample.hash,
        },
        separators=(",", ":"),
        ensure_ascii=False,
    )


def write_corpus(samples: Iterable[PairedSample], fh: IO[str]) -> int:
    count = 0
    for sample in samples:
        fh.write(sample_to_line(sample) + "\n")
        count += 1
    return count


def read_corpus(fh: IO[str]) -> list[PairedSample]:
    """Load a JSONL corpus, verifying each line's hash against its filter."""
    out: list[PairedSample] = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ValueError(f"line {lineno}: expected an object")
        query = doc.get("query")
        if query is not None and (not isinstance(query, str) or not query):
            raise ValueError(f"line {lineno}: query must be a non-empty string or null")
        provenance = doc.get("provenance")
        if provenance not in (PROVENANCE_REAL, PROVENANCE_SYNTHETIC):
            raise ValueError(f"line {lineno}: provenance must be 'real' or 'synthetic'")
        filt = parse_filter(json.dumps(doc.get("filter")))
        digest = doc.get("hash")
        expected = canonical_hash(filt)
        if digest != expected:
            raise ValueError(f"line {lineno}: hash {digest!r} does not match filter ({expected})")
        out.append(PairedSample(query=query, filter=filt, provenance=provenance, hash=digest))
    return out
