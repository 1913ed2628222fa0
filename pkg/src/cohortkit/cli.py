"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error. Every randomized
subcommand requires --seed so runs are reproducible. --catalog defaults to
the packaged desk manifest everywhere.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .caseindex import (
    CaseLoadError,
    execute,
    export_cases,
    generate_cases,
    load_cases_file,
    write_cases,
)
from .catalog import CatalogError, FieldCatalog, desk_catalog, load_catalog_file
from .evaluation import compare_systems, eligible_samples, evaluate_corpus
from .filters import FilterParseError, parse_filter, serialize_canonical, validate
from .fsm import TruncationError, compile_fsm, random_walk
from .nlparse import EndpointConfig, InvalidGenerationError, build_lexicon, parse_query
from .synth import (
    GenerationExhausted,
    PairedSample,
    SynthConfig,
    canonical_hash,
    generate_corpus,
    read_corpus,
    write_corpus,
)
from .verbalize import verbalize_canonical, verbalize_fluent

DATA_ERRORS = (
    CatalogError,
    FilterParseError,
    CaseLoadError,
    GenerationExhausted,
    TruncationError,
    ValueError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the CLI contract wants 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_catalog(path: str | None) -> FieldCatalog:
    return load_catalog_file(path) if path else desk_catalog()


def _read_filter(path: str | None) -> bytes:
    if path and path != "-":
        with open(path, "rb") as fh:
            return fh.read()
    return sys.stdin.buffer.read()


def _build_argparser() -> _Parser:
    parser = _Parser(prog="cohortkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic filter corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--catalog")
    p.add_argument("--out", required=True)
    p.add_argument("--query-mode", choices=["none", "canonical", "fluent"], default="none")

    p = sub.add_parser("verbalize", help="render a filter (or corpus) as natural language")
    p.add_argument("--catalog")
    p.add_argument("--filter", help="filter JSON file ('-' for stdin)")
    p.add_argument("--corpus", help="corpus JSONL whose queries should be filled")
    p.add_argument("--out", help="output corpus path (corpus mode)")
    p.add_argument("--mode", choices=["canonical", "fluent"], default="canonical")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("parse", help="translate a natural-language query into a filter")
    p.add_argument("--catalog")
    p.add_argument("--text", help="query text (default: read stdin)")
    p.add_argument("--diagnostics", action="store_true", help="also print match diagnostics")

    p = sub.add_parser("exec", help="execute a filter against a case file and export IDs")
    p.add_argument("--filter", required=True, help="filter JSON file ('-' for stdin)")
    p.add_argument("--cases", required=True)
    p.add_argument("--catalog")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate a translation backend over a paired corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--catalog")
    p.add_argument("--backend", choices=["lexicon", "identity", "empty"], default="lexicon")
    p.add_argument("--baseline", choices=["lexicon", "identity", "empty"])
    p.add_argument("--max-chars", type=int, help="drop samples whose query+filter exceed this length")
    p.add_argument("--out", help="write the report JSON here as well as stdout")

    p = sub.add_parser("fsm-fuzz", help="random-walk the schema automaton and revalidate")
    p.add_argument("--catalog")
    p.add_argument("--walks", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-len", type=int, default=4096)

    p = sub.add_parser("cases", help="generate a synthetic case file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--catalog")
    p.add_argument("--out", required=True)
    p.add_argument("--from-corpus", help="seed cases so this corpus's filters are non-empty")

    p = sub.add_parser("serve", help="run the HTTP curation service")
    p.add_argument("--catalog")
    p.add_argument("--cases")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--page-size", type=int, default=100)
    p.add_argument("--static-dir", help="serve this directory at / (the web UI build)")

    return parser


def _make_system(name: str, samples: list[PairedSample], catalog: FieldCatalog):
    if name == "lexicon":
        lexicon = build_lexicon(catalog)

        def lexicon_system(query: str):
            return parse_query(query, lexicon, catalog)[0]

        return lexicon_system
    if name == "identity":
        by_query = {s.query: s.filter for s in samples}

        def identity_system(query: str):
            return by_query[query]

        return identity_system

    def empty_system(query: str):
        raise InvalidGenerationError("empty backend never generates", raw_text="")

    return empty_system


def _cmd_gen(args) -> int:
    catalog = _load_catalog(args.catalog)
    config = SynthConfig(seed=args.seed, target_count=args.count)
    filters = generate_corpus(config, catalog)
    samples = []
    for i, filt in enumerate(filters):
        if args.query_mode == "canonical":
            query = verbalize_canonical(filt, catalog)
        elif args.query_mode == "fluent":
            query = verbalize_fluent(filt, catalog, seed=args.seed + i)
        else:
            query = None
        samples.append(
            PairedSample(query=query, filter=filt, provenance="synthetic", hash=canonical_hash(filt))
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        count = write_corpus(samples, fh)
    print(f"wrote {count} filters to {args.out}")
    return 0


def _cmd_verbalize(args, parser: _Parser) -> int:
    catalog = _load_catalog(args.catalog)
    if args.mode == "fluent" and args.seed is None:
        parser.error("--mode fluent requires --seed")
    if args.corpus:
        if not args.out:
            parser.error("--corpus mode requires --out")
        with open(args.corpus, "r", encoding="utf-8") as fh:
            samples = read_corpus(fh)
        filled = []
        for i, sample in enumerate(samples):
            if args.mode == "canonical":
                query = verbalize_canonical(sample.filter, catalog)
            else:
                query = verbalize_fluent(sample.filter, catalog, seed=args.seed + i)
            filled.append(
                PairedSample(query=query, filter=sample.filter, provenance=sample.provenance, hash=sample.hash)
            )
        with open(args.out, "w", encoding="utf-8") as fh:
            write_corpus(filled, fh)
        print(f"filled queries for {len(filled)} samples into {args.out}")
        return 0
    filt = parse_filter(_read_filter(args.filter))
    if args.mode == "canonical":
        print(verbalize_canonical(filt, catalog))
    else:
        print(verbalize_fluent(filt, catalog, seed=args.seed))
    return 0


def _cmd_parse(args) -> int:
    catalog = _load_catalog(args.catalog)
    text = args.text if args.text is not None else sys.stdin.read()
    lexicon = build_lexicon(catalog)
    filt, diagnostics = parse_query(text, lexicon, catalog)
    print(serialize_canonical(filt))
    if args.diagnostics:
        print(json.dumps(diagnostics.to_dict(text), ensure_ascii=False), file=sys.stderr)
    return 0


def _cmd_exec(args) -> int:
    catalog = _load_catalog(args.catalog)
    filt = parse_filter(_read_filter(args.filter))
    report = validate(filt, catalog)
    if not report.valid:
        for issue in report.errors():
            print(f"error: {issue.path}: {issue.message}", file=sys.stderr)
        return 2
    index = load_cases_file(args.cases, catalog)
    ids = execute(filt, index)
    export_cases(ids, args.out)
    print(f"{len(ids)} cases -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    catalog = _load_catalog(args.catalog)
    with open(args.corpus, "r", encoding="utf-8") as fh:
        samples = read_corpus(fh)
    missing = [s for s in samples if s.query is None]
    if missing:
        print(f"error: {len(missing)} samples have no query; run verbalize first", file=sys.stderr)
        return 2
    index = load_cases_file(args.cases, catalog)
    kept = eligible_samples(samples, index, args.max_chars)
    if len(kept) < len(samples):
        print(f"note: kept {len(kept)}/{len(samples)} samples (empty-cohort/length split rules)", file=sys.stderr)
    if not kept:
        print("error: no evaluable samples after split filtering", file=sys.stderr)
        return 2
    samples = kept
    system = _make_system(args.backend, samples, catalog)
    if args.baseline:
        baseline = _make_system(args.baseline, samples, catalog)
        summary, _ = compare_systems(samples, system, baseline, index, catalog)
    else:
        _, summary = evaluate_corpus(samples, system, index, catalog)
    report = json.dumps(summary.to_dict(), indent=2)
    print(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report + "\n")
    return 0


def _cmd_fsm_fuzz(args) -> int:
    catalog = _load_catalog(args.catalog)
    fsm = compile_fsm(catalog)
    rng = np.random.default_rng(args.seed)
    valid = 0
    failures = []
    for i in range(args.walks):
        text = random_walk(fsm, rng, args.max_len)
        try:
            filt = parse_filter(text)
            if validate(filt, catalog).valid:
                valid += 1
            else:
                failures.append(i)
        except FilterParseError:
            failures.append(i)
    print(
        json.dumps(
            {"walks": args.walks, "valid": valid, "states": len(fsm), "all_valid": not failures}
        )
    )
    return 0 if not failures else 2


def _cmd_cases(args) -> int:
    catalog = _load_catalog(args.catalog)
    seed_filters = []
    if args.from_corpus:
        with open(args.from_corpus, "r", encoding="utf-8") as fh:
            seed_filters = [s.filter for s in read_corpus(fh)]
    records = generate_cases(catalog, args.count, args.seed, seed_filters=seed_filters)
    with open(args.out, "w", encoding="utf-8") as fh:
        count = write_cases(records, fh)
    print(f"wrote {count} cases to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import create_app

    catalog_path = args.catalog or os.environ.get("COHORT_CATALOG")
    cases_path = args.cases or os.environ.get("COHORT_CASES")
    port = args.port or int(os.environ.get("COHORT_PORT", "8000"))
    if not cases_path:
        print("error: provide --cases or set COHORT_CASES", file=sys.stderr)
        return 2
    catalog = _load_catalog(catalog_path)
    index = load_cases_file(cases_path, catalog)
    llm_config = EndpointConfig.from_env()
    app = create_app(
        catalog,
        index,
        page_size=args.page_size,
        llm_config=llm_config,
        static_dir=args.static_dir,
    )
    uvicorn.run(app, host=args.host, port=port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_argparser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "verbalize":
            return _cmd_verbalize(args, parser)
        if args.command == "parse":
            return _cmd_parse(args)
        if args.command == "exec":
            return _cmd_exec(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "fsm-fuzz":
            return _cmd_fsm_fuzz(args)
        if args.command == "cases":
            return _cmd_cases(args)
        if args.command == "serve":
            return _cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
