"""Natural language -> cohort filter translation.

The default backend is a deterministic lexicon parser: greedy longest
match over a normalized token stream, with field display phrases used as
context to disambiguate values that exist under several fields. It always
returns a filter that validates; weakness is signaled through diagnostics,
never raised.

An optional external-LLM backend speaks a standard chat-completions wire
shape, constrains the reply with the schema automaton, and raises on
anything the automaton rejects. It is excluded from the core offline path.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import httpx

from .catalog import FieldCatalog
from .filters import CategoricalLeaf, Conjunction, NumericLeaf, parse_filter, validate
from .fsm import SchemaFsm

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:\.[0-9]+)?")
_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?$")

# Comparator surface forms accepted for numeric constraints. Canonical-mode
# verbalizations use the first phrase of each operator's set; the rest are
# common paraphrases. Any of them applies to whichever numeric field is in
# context.
COMPARATOR_PHRASES: dict[str, str] = {
    "at least": ">=",
    "no less than": ">=",
    "greater than or equal to": ">=",
    "at most": "<=",
    "no more than": "<=",
    "less than or equal to": "<=",
    "more than": ">",
    "over": ">",
    "above": ">",
    "greater than": ">",
    "less than": "<",
    "under": "<",
    "below": "<",
}

# Structural words emitted by the verbalizer templates; they never carry
# filter content, so they don't count against an exact parse.
_GLUE_WORDS = {
    "cases", "case", "where", "is", "are", "any", "of", "all", "and", "or",
    "with", "for", "patients", "cohort", "samples", "sample", "being", "in",
    "the", "a", "an", "gdc", "that", "belong", "to", "data", "derived",
    "from", "project", "projects",
}


def normalize_phrase(text: str) -> tuple[str, ...]:
    """Token form used for lexicon keys and matching (lowercase, punctuation-blind)."""
    return tuple(t.lower() for t in _TOKEN_RE.findall(text))


@dataclass(frozen=True)
class MatchedSpan:
    start: int
    end: int
    field: str
    value: str | None  # None for a bare field-phrase mention


@dataclass(frozen=True)
class ParseDiagnostics:
    matched_spans: tuple[MatchedSpan, ...]
    unmatched_text: tuple[tuple[int, int], ...]
    confidence: str  # "exact" | "partial"

    def unmatched_strings(self, text: str) -> list[str]:
        return [text[s:e] for s, e in self.unmatched_text]

    def to_dict(self, text: str | None = None) -> dict:
        return {
            "matched": [
                {"start": m.start, "end": m.end, "field": m.field, "value": m.value}
                for m in self.matched_spans
            ],
            "unmatched": [
                {"start": s, "end": e, **({"text": text[s:e]} if text is not None else {})}
                for s, e in self.unmatched_text
            ],
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class Lexicon:
    """Phrase tables compiled from a catalog.

    value_entries keeps every (field, value) candidate for an ambiguous
    surface string, in catalog order; parse-time field context picks among
    them. Values or displays that normalize to identical token sequences
    under the same field cannot be told apart and resolve to the first.
    """

    value_entries: dict[tuple[str, ...], tuple[tuple[str, str], ...]]
    field_entries: dict[tuple[str, ...], str]
    comparator_entries: dict[tuple[str, ...], str]
    glue: frozenset[str]
    max_phrase_len: int = field(default=1)


def build_lexicon(catalog: FieldCatalog) -> Lexicon:
    """One value entry per (field, value) pair plus display and comparator phrases."""
    value_entries: dict[tuple[str, ...], list[tuple[str, str]]] = {}
    field_entries: dict[tuple[str, ...], str] = {}
    glue = set(_GLUE_WORDS)
    for spec in catalog:
        display_key = normalize_phrase(spec.display)
        if display_key and display_key not in field_entries:
            field_entries[display_key] = spec.name
        if spec.is_categorical:
            for value in spec.values or ():
                key = normalize_phrase(value)
                if not key:
                    continue
                value_entries.setdefault(key, []).append((spec.name, value))
        elif spec.range is not None:
            glue.update(normalize_phrase(spec.range.unit))
    comparator_entries = {normalize_phrase(k): v for k, v in COMPARATOR_PHRASES.items()}
    keys = list(value_entries) + list(field_entries) + list(comparator_entries)
    max_len = max((len(k) for k in keys), default=1)
    return Lexicon(
        value_entries={k: tuple(v) for k, v in value_entries.items()},
        field_entries=field_entries,
        comparator_entries=comparator_entries,
        glue=frozenset(glue),
        max_phrase_len=max_len,
    )


def _bind_field(
    candidates: tuple[tuple[str, str], ...], context_field: str | None
) -> tuple[str, str]:
    for fld, value in candidates:
        if fld == context_field:
            return fld, value
    return candidates[0]  # catalog order breaks the tie


def parse_query(
    text: str, lexicon: Lexicon, catalog: FieldCatalog
) -> tuple[Conjunction, ParseDiagnostics]:
    """Greedy longest-match translation of free text into a validating filter.

    Value mentions group by field into `in` leaves; a comparator phrase
    followed by a number attaches to the numeric field in context. Words
    that match nothing are surfaced in diagnostics rather than guessed at.
    """
    tokens = [(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]
    matched: list[MatchedSpan] = []
    unmatched_idx: list[int] = []
    cat_values: dict[str, dict[str, None]] = {}  # field -> ordered value set
    num_constraints: dict[str, tuple[str, float | int]] = {}
    context_field: str | None = None
    pending_op: tuple[str, int, int] | None = None  # (op, token_start_idx, token_end_idx)
    dangling_ops: list[tuple[int, int]] = []

    i = 0
    n = len(tokens)
    while i < n:
        hit_len = 0
        hit_kind = ""
        hit_payload: object = None
        limit = min(lexicon.max_phrase_len, n - i)
        for length in range(limit, 0, -1):
            key = tuple(tok[0] for tok in tokens[i : i + length])
            if key in lexicon.value_entries:
                hit_len, hit_kind, hit_payload = length, "value", lexicon.value_entries[key]
                break
            if key in lexicon.field_entries:
                hit_len, hit_kind, hit_payload = length, "field", lexicon.field_entries[key]
                break
            if key in lexicon.comparator_entries:
                hit_len, hit_kind, hit_payload = length, "comparator", lexicon.comparator_entries[key]
                break

        if hit_kind == "value":
            if pending_op is not None:  # comparator with no number before a value
                dangling_ops.append((pending_op[1], pending_op[2]))
                pending_op = None
            fld, value = _bind_field(hit_payload, context_field)  # type: ignore[arg-type]
            cat_values.setdefault(fld, {})[value] = None
            matched.append(MatchedSpan(tokens[i][1], tokens[i + hit_len - 1][2], fld, value))
            i += hit_len
            continue
        if hit_kind == "field":
            if pending_op is not None:
                dangling_ops.append((pending_op[1], pending_op[2]))
                pending_op = None
            context_field = str(hit_payload)
            matched.append(
                MatchedSpan(tokens[i][1], tokens[i + hit_len - 1][2], context_field, None)
            )
            i += hit_len
            continue
        if hit_kind == "comparator":
            if pending_op is not None:
                dangling_ops.append((pending_op[1], pending_op[2]))
            pending_op = (str(hit_payload), tokens[i][1], tokens[i + hit_len - 1][2])
            i += hit_len
            continue

        word, start, end = tokens[i]
        if _NUMBER_RE.match(word):
            spec = catalog.get(context_field) if context_field else None
            number: float | int = float(word) if "." in word else int(word)
            if (
                pending_op is not None
                and spec is not None
                and not spec.is_categorical
                and spec.range is not None
                and spec.range.min <= number <= spec.range.max
                and context_field not in num_constraints
            ):
                assert context_field is not None
                num_constraints[context_field] = (pending_op[0], number)
                matched.append(
                    MatchedSpan(pending_op[1], end, context_field, str(number))
                )
                pending_op = None
                i += 1
                continue
            unmatched_idx.append(i)
            i += 1
            continue
        if word in lexicon.glue:
            i += 1
            continue
        unmatched_idx.append(i)
        i += 1

    if pending_op is not None:
        dangling_ops.append((pending_op[1], pending_op[2]))

    leaves: list[CategoricalLeaf | NumericLeaf] = []
    for fld, values in cat_values.items():
        leaves.append(CategoricalLeaf(field=fld, values=tuple(values)))
    for fld, (op, number) in num_constraints.items():
        leaves.append(NumericLeaf(field=fld, op=op, value=number))
    filt = Conjunction(leaves=tuple(leaves))

    # Merge adjacent unmatched tokens into spans; fold in dangling comparators.
    spans: list[tuple[int, int]] = []
    for idx in unmatched_idx:
        start, end = tokens[idx][1], tokens[idx][2]
        if spans and text[spans[-1][1] : start].strip() == "":
            spans[-1] = (spans[-1][0], end)
        else:
            spans.append((start, end))
    spans.extend(dangling_ops)
    spans.sort()

    exact = bool(leaves) and not spans
    diagnostics = ParseDiagnostics(
        matched_spans=tuple(matched),
        unmatched_text=tuple(spans),
        confidence="exact" if exact else "partial",
    )
    return filt, diagnostics


# ---------------------------------------------------------------------------
# External LLM backend
# ---------------------------------------------------------------------------


class TransportError(RuntimeError):
    """Network/protocol failure talking to the completion endpoint."""


class InvalidGenerationError(RuntimeError):
    """Endpoint replied, but the text is not an automaton-accepted filter."""

    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass(frozen=True)
class EndpointConfig:
    """Chat-completions endpoint settings; the API key is read from the
    environment variable named by ``api_key_var`` at request time."""

    base_url: str
    model: str = "default"
    api_key_var: str | None = None
    seed: int = 0
    timeout: float = 30.0

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "EndpointConfig | None":
        env = dict(os.environ) if env is None else env
        base_url = env.get("COHORT_LLM_ENDPOINT")
        if not base_url:
            return None
        return cls(
            base_url=base_url,
            model=env.get("COHORT_LLM_MODEL", "default"),
            api_key_var=env.get("COHORT_LLM_KEY_VAR") or None,
        )


SYSTEM_PROMPT = (
    "Construct NCI GDC cohort filters based on the input cohort description "
    "using the given list of possible fields and values."
)

USER_PROMPT_TEMPLATE = (
    "Here is the list of possible fields and values:\n\n{listing}\n\n"
    "Use the above properties to construct a NCI GDC cohort filter for the "
    "following cohort description:\n{query}"
)


def render_field_listing(catalog: FieldCatalog) -> str:
    """The full field->value mapping sent to the endpoint (large at full scale)."""
    lines = []
    for spec in catalog:
        if spec.is_categorical:
            lines.append(f"{spec.name}: {' | '.join(spec.values or ())}")
        else:
            rng = spec.range
            assert rng is not None
            lines.append(f"{spec.name}: number in [{rng.min}, {rng.max}] ({rng.unit})")
    return "\n".join(lines)


def filter_json_schema(catalog: FieldCatalog) -> dict:
    """JSON schema for catalog-valid filters (structure plus field/value strings)."""
    leaf_schemas: list[dict] = []
    for spec in catalog:
        if spec.is_categorical:
            content = {
                "type": "object",
                "additionalProperties": False,
                "required": ["field", "value"],
                "properties": {
                    "field": {"const": spec.name},
                    "value": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"enum": list(spec.values or ())},
                    },
                },
            }
            op_schema: dict = {"const": "in"}
        else:
            rng = spec.range
            assert rng is not None
            content = {
                "type": "object",
                "additionalProperties": False,
                "required": ["field", "value"],
                "properties": {
                    "field": {"const": spec.name},
                    "value": {"type": "number", "minimum": rng.min, "maximum": rng.max},
                },
            }
            op_schema = {"enum": ["<=", "<", ">=", ">"]}
        leaf_schemas.append(
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["op", "content"],
                "properties": {"op": op_schema, "content": content},
            }
        )
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["op", "content"],
        "properties": {
            "op": {"const": "and"},
            "content": {"type": "array", "items": {"anyOf": leaf_schemas}},
        },
    }


def llm_generate(
    query: str,
    endpoint_config: EndpointConfig,
    catalog: FieldCatalog,
    fsm: SchemaFsm,
) -> Conjunction:
    """Ask the endpoint for a filter and accept it only via the automaton.

    The request is deterministic: temperature 0, fixed seed, at most 1,024
    completion tokens, and a response_format carrying the filter schema.
    Automaton rejection (or a validation failure) raises
    InvalidGenerationError with the raw reply attached so callers can fall
    back to parse_query or score the sample as an empty retrieval.
    """
    payload = {
        "model": endpoint_config.model,
        "messages": [
            {"role": "system", "content": SYSTEM_PROMPT},
            {
                "role": "user",
                "content": USER_PROMPT_TEMPLATE.format(
                    listing=render_field_listing(catalog), query=query
                ),
            },
        ],
        "temperature": 0,
        "seed": endpoint_config.seed,
        "max_tokens": 1024,
        "response_format": {
            "type": "json_schema",
            "json_schema": {"name": "cohort_filter", "schema": filter_json_schema(catalog)},
        },
    }
    headers = {}
    if endpoint_config.api_key_var:
        key = os.environ.get(endpoint_config.api_key_var)
        if key:
            headers["Authorization"] = f"Bearer {key}"
    url = endpoint_config.base_url.rstrip("/") + "/chat/completions"
    try:
        response = httpx.post(url, json=payload, headers=headers, timeout=endpoint_config.timeout)
        response.raise_for_status()
        body = response.json()
    except httpx.HTTPError as exc:
        raise TransportError(f"completion request failed: {exc}") from exc
    except ValueError as exc:
        raise TransportError(f"endpoint returned non-JSON body: {exc}") from exc

    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise TransportError("endpoint reply missing choices[0].message.content") from None
    if not isinstance(text, str):
        raise TransportError("completion content is not text")

    if not fsm.accepts(text):
        raise InvalidGenerationError("automaton rejected generated text", raw_text=text)
    filt = parse_filter(text)
    report = validate(filt, catalog)
    if not report.valid:
        first = report.errors()[0]
        raise InvalidGenerationError(
            f"generated filter failed validation: {first.path}: {first.message}",
            raw_text=text,
        )
    return filt
