"""Character-level DFA over catalog-valid canonical filter serializations.

The compiled automaton accepts exactly the canonical grammar: fixed object
key order, leaves in strictly increasing field-name order, values strictly
increasing within a leaf, field/value/operator strings drawn from the
catalog, and JSON-valid unsigned numeric literals constrained to the
field's declared range (integer bounds required; an optional fraction part
is admitted only where it cannot exceed the upper bound). Strict leaf
ordering plus range-aware numerals keep the machine sound: it cannot spell
a duplicate-field or out-of-range filter, so every accepted string parses
and validates, and uniform random walks are usable as a fuzzing oracle.

Token masking for guided generation is done by replaying each candidate
token's characters from the current state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .catalog import FieldCatalog, FieldSpec

NUM_OPS = ("<=", "<", ">=", ">")

_PREFIX = '{"op":"and","content":['


class FsmCompileError(ValueError):
    """Catalog cannot be compiled (state budget exceeded or unsupported strings)."""


class TruncationError(RuntimeError):
    """A random walk hit max_len before reaching an accepting state."""


@dataclass(frozen=True)
class SchemaFsm:
    """Deterministic automaton; immutable and safe to share."""

    transitions: tuple[dict[str, int], ...]
    start: int
    accepting: frozenset[int]

    def __len__(self) -> int:
        return len(self.transitions)

    def step(self, state: int, symbol: str) -> int | None:
        return self.transitions[state].get(symbol)

    def accepts(self, text: str) -> bool:
        state = self.start
        for ch in text:
            nxt = self.transitions[state].get(ch)
            if nxt is None:
                return False
            state = nxt
        return state in self.accepting


@dataclass
class DecodeSession:
    """Single-owner stepping cursor; ``consumed`` is always a live prefix."""

    fsm: SchemaFsm
    state: int
    consumed: list[str] = field(default_factory=list)

    @property
    def in_accepting_state(self) -> bool:
        return self.state in self.fsm.accepting

    @property
    def text(self) -> str:
        return "".join(self.consumed)


def new_session(fsm: SchemaFsm) -> DecodeSession:
    return DecodeSession(fsm=fsm, state=fsm.start)


def advance(session: DecodeSession, symbol: str) -> bool:
    """Atomically consume one symbol (or several characters).

    Returns True when consumed; on rejection the session is left unchanged
    and False is returned.
    """
    state = session.state
    for ch in symbol:
        nxt = session.fsm.transitions[state].get(ch)
        if nxt is None:
            return False
        state = nxt
    session.state = state
    session.consumed.append(symbol)
    return True


def allowed_continuations(session: DecodeSession, vocabulary: list[str]) -> list[bool]:
    """Boolean mask over token strings.

    mask[i] is True iff every character of vocabulary[i] transitions from
    the current state. The empty string stands for end-of-sequence and is
    allowed exactly in accepting states.
    """
    fsm = session.fsm
    mask: list[bool] = []
    for token in vocabulary:
        if token == "":
            mask.append(session.state in fsm.accepting)
            continue
        state = session.state
        ok = True
        for ch in token:
            nxt = fsm.transitions[state].get(ch)
            if nxt is None:
                ok = False
                break
            state = nxt
        mask.append(ok)
    return mask


def random_walk(fsm: SchemaFsm, rng: np.random.Generator, max_len: int) -> str:
    """Uniform walk over outgoing transitions; stops at accepting states with
    probability 0.5 (always, when nothing follows them). The returned text is
    accepted by construction, so it parses and validates downstream."""
    state = fsm.start
    out: list[str] = []
    while True:
        options = fsm.transitions[state]
        if state in fsm.accepting and (not options or rng.random() < 0.5):
            return "".join(out)
        if len(out) >= max_len:
            raise TruncationError(f"no acceptance within {max_len} symbols")
        items = sorted(options.items())
        ch, nxt = items[int(rng.integers(len(items)))]
        out.append(ch)
        state = nxt


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self, budget: int):
        self.transitions: list[dict[str, int]] = []
        self.budget = budget

    def new(self) -> int:
        if len(self.transitions) >= self.budget:
            raise FsmCompileError(
                f"state budget of {self.budget} exceeded; raise state_budget or shrink the catalog"
            )
        self.transitions.append({})
        return len(self.transitions) - 1

    def link(self, src: int, ch: str, dst: int) -> None:
        existing = self.transitions[src].get(ch)
        if existing is None:
            self.transitions[src][ch] = dst
        elif existing != dst:
            raise FsmCompileError(f"internal: conflicting transition on {ch!r}")

    def walk(self, src: int, text: str) -> int:
        """Follow/extend a chain, sharing existing prefixes (trie behavior)."""
        state = src
        for ch in text:
            nxt = self.transitions[state].get(ch)
            if nxt is None:
                nxt = self.new()
                self.transitions[state][ch] = nxt
            state = nxt
        return state

    def route(self, src: int, text: str, dst: int) -> None:
        """Chain for text whose final character lands exactly on dst."""
        state = self.walk(src, text[:-1])
        self.link(state, text[-1], dst)


def _literal(s: str) -> str:
    """JSON string body for s; escapes are unsupported (they would break the
    raw-string sort order shared with the canonical serializer)."""
    body = json.dumps(s, ensure_ascii=False)[1:-1]
    if body != s:
        raise FsmCompileError(f"string {s!r} needs JSON escaping, which the automaton does not support")
    return body


def _build_fraction(b: _Builder, after_brace: int, digits: str, max_digits: int = 10) -> int:
    """Decimal-point continuation: 1..max_digits digits then '}'. Entry is the
    state just after the '.'."""
    entry = b.new()
    states = [b.new() for _ in range(max_digits)]
    for d in digits:
        b.link(entry, d, states[0])
    for m, st in enumerate(states):
        if m + 1 < max_digits:
            for d in digits:
                b.link(st, d, states[m + 1])
        b.link(st, "}", after_brace)
    return entry


def _build_number(b: _Builder, lo: int, hi: int, continuation: int) -> int:
    """Range-constrained unsigned JSON number machine, closed by '}}'.

    Accepts exactly the no-leading-zero decimal spellings of integers in
    [lo, hi], each optionally followed by a fraction part: free digits when
    the integer part sits strictly below hi, zeros only when it equals hi.
    Built by memoized interval splitting over the remaining-digit suffixes,
    so tight-bound prefixes get dedicated states while loose prefixes
    collapse into full-interval states.
    """
    after_brace = b.new()
    b.link(after_brace, "}", continuation)
    free_frac = _build_fraction(b, after_brace, "0123456789")
    zero_frac = _build_fraction(b, after_brace, "0")

    # Interval (r, a, c): r digits still to read, completed suffix must lie
    # in [a, c]. r == 0 entries are normalized to slack 0 (== hi) or 1 (< hi).
    memo: dict[tuple, int] = {}

    def state_for(intervals: tuple) -> int:
        cached = memo.get(intervals)
        if cached is not None:
            return cached
        st = b.new()
        memo[intervals] = st
        for r, _a, c in intervals:
            if r == 0:
                b.link(st, "}", after_brace)
                b.link(st, ".", zero_frac if c == 0 else free_frac)
        for digit in range(10):
            succ = []
            for r, a, c in intervals:
                if r == 0:
                    continue
                p10 = 10 ** (r - 1)
                shifted_lo = a - digit * p10
                shifted_hi = c - digit * p10
                if r == 1:
                    if shifted_lo <= 0 <= shifted_hi:
                        succ.append((0, 0, min(shifted_hi, 1)))
                else:
                    na, nc = max(0, shifted_lo), min(p10 - 1, shifted_hi)
                    if na <= nc:
                        succ.append((r - 1, na, nc))
            if succ:
                b.link(st, str(digit), state_for(tuple(succ)))
        return st

    initial = []
    for d in range(1, len(str(hi)) + 1):
        lo_d = 0 if d == 1 else 10 ** (d - 1)
        hi_d = 10**d - 1
        a, c = max(lo, lo_d), min(hi, hi_d)
        if a <= c:
            initial.append((d, a, c))
    return state_for(tuple(initial))


def _build_values(b: _Builder, spec: FieldSpec, continuation: int) -> int:
    """Value-list machine for one categorical field.

    Values must appear in strictly increasing lexicographic order, which
    both rules out duplicates and matches the canonical serializer.
    Entry state expects the opening '\"' of the first value.
    """
    values = sorted(spec.values or ())
    closed = b.new()  # after ']'
    b.route(closed, "}}", continuation)
    after_value = [b.new() for _ in values]  # after each value's closing quote
    entry = b.new()
    for p, w in enumerate(values):
        b.route(entry, '"' + _literal(w) + '"', after_value[p])
    for p in range(len(values)):
        b.link(after_value[p], "]", closed)
        if p + 1 < len(values):
            rest = b.new()
            b.link(after_value[p], ",", rest)
            for q in range(p + 1, len(values)):
                b.route(rest, '"' + _literal(values[q]) + '"', after_value[q])
    return entry


def compile_fsm(catalog: FieldCatalog, state_budget: int = 1_000_000) -> SchemaFsm:
    """Compile the catalog into the canonical-grammar acceptor.

    Raises FsmCompileError when the configured state budget is exceeded or
    a catalog string would need JSON escaping.
    """
    specs: list[FieldSpec] = sorted(catalog.fields, key=lambda s: s.name)
    for spec in specs:
        _literal(spec.name)
        for w in spec.values or ():
            _literal(w)
        if spec.range is not None:
            lo, hi = spec.range.min, spec.range.max
            if lo != int(lo) or hi != int(hi) or lo < 0:
                raise FsmCompileError(
                    f"field {spec.name!r}: numeric automata need non-negative integer bounds, got [{lo}, {hi}]"
                )

    n = len(specs)
    b = _Builder(state_budget)
    start = b.new()
    accept = b.new()
    open_list = b.walk(start, _PREFIX)
    end_list = b.new()  # after ']'
    b.link(end_list, "}", accept)
    b.link(open_list, "]", end_list)

    # continuation[k]: a leaf with sorted index k-1 just closed; the next
    # leaf (if any) must use a field with sorted index >= k.
    continuation = [b.new() for _ in range(n + 1)]  # index 0 unused
    for k in range(1, n + 1):
        b.link(continuation[k], "]", end_list)

    value_entry: dict[int, int] = {}
    number_entry: dict[int, int] = {}
    for j, spec in enumerate(specs):
        if spec.is_categorical:
            value_entry[j] = _build_values(b, spec, continuation[j + 1])
        else:
            rng = spec.range
            assert rng is not None
            number_entry[j] = _build_number(b, int(rng.min), int(rng.max), continuation[j + 1])

    # leaf_entry[k]: state just after a leaf's '{', fields restricted to >= k.
    leaf_entry: list[int] = []
    for k in range(n):
        entry = b.new()
        op_state = b.walk(entry, '"op":"')
        cat = [(j, s) for j, s in enumerate(specs) if j >= k and s.is_categorical]
        num = [(j, s) for j, s in enumerate(specs) if j >= k and not s.is_categorical]
        if cat:
            field_state = b.walk(op_state, 'in","content":{"field":"')
            for j, s in cat:
                b.route(field_state, _literal(s.name) + '","value":[', value_entry[j])
        if num:
            field_state = b.new()
            for op in NUM_OPS:
                b.route(op_state, op + '","content":{"field":"', field_state)
            for j, s in num:
                b.route(field_state, _literal(s.name) + '","value":', number_entry[j])
        leaf_entry.append(entry)

    b.link(open_list, "{", leaf_entry[0])
    for k in range(1, n + 1):
        if k < n:
            comma = b.new()
            b.link(continuation[k], ",", comma)
            b.link(comma, "{", leaf_entry[k])

    return _prune(b, start, accept)


def _prune(b: _Builder, start: int, accept: int) -> SchemaFsm:
    """Keep only states reachable from start AND co-reachable to accept.

    The construction should produce none to drop; pruning enforces the
    prefix-consistency invariant regardless.
    """
    n = len(b.transitions)
    fwd = [False] * n
    stack = [start]
    fwd[start] = True
    while stack:
        s = stack.pop()
        for nxt in b.transitions[s].values():
            if not fwd[nxt]:
                fwd[nxt] = True
                stack.append(nxt)

    reverse: list[list[int]] = [[] for _ in range(n)]
    for s, outs in enumerate(b.transitions):
        for nxt in outs.values():
            reverse[nxt].append(s)
    back = [False] * n
    stack = [accept]
    back[accept] = True
    while stack:
        s = stack.pop()
        for prev in reverse[s]:
            if not back[prev]:
                back[prev] = True
                stack.append(prev)

    keep = [i for i in range(n) if fwd[i] and back[i]]
    remap = {old: new for new, old in enumerate(keep)}
    transitions = tuple(
        {ch: remap[dst] for ch, dst in b.transitions[old].items() if fwd[dst] and back[dst]}
        for old in keep
    )
    return SchemaFsm(transitions=transitions, start=remap[start], accepting=frozenset({remap[accept]}))
