"""Cohort filter engine: filter language, synthetic corpora, NL translation,
constrained-decoding automaton, local case execution, and evaluation."""

from .caseindex import (
    CaseIndex,
    CaseLoadError,
    CaseRecord,
    execute,
    export_cases,
    export_text,
    generate_cases,
    load_cases,
    load_cases_file,
    write_cases,
)
from .catalog import (
    CatalogError,
    FieldCatalog,
    FieldSpec,
    NumericRange,
    desk_catalog,
    load_catalog,
    load_catalog_file,
)
from .evaluation import (
    EvalSummary,
    SampleMetrics,
    bonferroni,
    compare_systems,
    evaluate_corpus,
    evaluate_pair,
    mcnemar,
    mcnemar_statistic,
    paired_t_test,
    set_metrics,
    summarize,
    token_f1,
)
from .filters import (
    CategoricalLeaf,
    Conjunction,
    FilterNode,
    FilterParseError,
    Issue,
    NumericLeaf,
    ValidationReport,
    canonicalize,
    empty_filter,
    filter_to_wire,
    lint_null,
    parse_filter,
    serialize_canonical,
    validate,
)
from .fsm import (
    DecodeSession,
    FsmCompileError,
    SchemaFsm,
    TruncationError,
    advance,
    allowed_continuations,
    compile_fsm,
    new_session,
    random_walk,
)
from .nlparse import (
    EndpointConfig,
    InvalidGenerationError,
    Lexicon,
    MatchedSpan,
    ParseDiagnostics,
    TransportError,
    build_lexicon,
    filter_json_schema,
    llm_generate,
    parse_query,
    render_field_listing,
)
from .synth import (
    GenerationExhausted,
    PairedSample,
    SynthConfig,
    canonical_hash,
    generate_corpus,
    read_corpus,
    sample_field_count,
    sample_filter,
    write_corpus,
)
from .verbalize import verbalize_canonical, verbalize_fluent

__version__ = "0.1.0"
