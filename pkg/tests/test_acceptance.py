"""Acceptance criteria, one test per criterion, each printing a PASS line
with its measured numbers once every assertion in it has held.

Run: pytest tests/test_acceptance.py -v
"""

import json
import string
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cohortkit import (
    CaseIndex,
    CategoricalLeaf,
    Conjunction,
    InvalidGenerationError,
    PairedSample,
    SynthConfig,
    bonferroni,
    build_lexicon,
    canonical_hash,
    compile_fsm,
    desk_catalog,
    evaluate_corpus,
    execute,
    filter_to_wire,
    generate_cases,
    generate_corpus,
    mcnemar,
    mcnemar_statistic,
    paired_t_test,
    parse_filter,
    parse_query,
    random_walk,
    sample_filter,
    serialize_canonical,
    set_metrics,
    token_f1,
    validate,
    verbalize_canonical,
)
from cohortkit.service import create_app
from oracles import (
    chi2_1_sf_quadrature,
    naive_execute,
    rounded_chi2_conditional_mean,
    t_two_sided_p_quadrature,
)

SEED = 42
CORPUS_SIZE = 10_000
INDEX_SIZE = 10_000


def report(capsys, criterion: str, detail: str) -> None:
    # suspend capture so the per-criterion line always lands in the log
    with capsys.disabled():
        print(f"\n[{criterion}] PASS — {detail}")


@pytest.fixture(scope="module")
def catalog():
    return desk_catalog()


@pytest.fixture(scope="module")
def corpus10k(catalog):
    return generate_corpus(SynthConfig(seed=SEED, target_count=CORPUS_SIZE), catalog)


@pytest.fixture(scope="module")
def index10k(catalog, corpus10k):
    # seed slices used by A3 (first 500) and A7 (2,300 starting at 3,000)
    seeds = list(corpus10k[:500]) + list(corpus10k[3000:5300])
    records = generate_cases(catalog, INDEX_SIZE, seed=99, seed_filters=seeds)
    return CaseIndex(records, catalog)


@pytest.fixture(scope="module")
def fsm(catalog):
    return compile_fsm(catalog)


def test_a1_generator_suite(catalog, capsys):
    t0 = time.monotonic()
    filters = generate_corpus(SynthConfig(seed=SEED, target_count=CORPUS_SIZE), catalog)
    digests = {canonical_hash(f) for f in filters}
    elapsed = time.monotonic() - t0

    assert len(filters) == CORPUS_SIZE
    assert all(validate(f, catalog).valid for f in filters), "every filter validates"
    assert len(digests) == CORPUS_SIZE, "all MD5 digests unique"
    for filt in filters:
        assert len(filt.leaves) >= 1
        names = [leaf.field for leaf in filt.leaves]
        assert len(set(names)) == len(names), "no repeated field"
        for leaf in filt.leaves:
            if isinstance(leaf, CategoricalLeaf):
                assert 1 <= len(leaf.values) <= 5

    mean_n = float(np.mean([len(f.leaves) for f in filters]))
    oracle = rounded_chi2_conditional_mean(6, len(catalog))
    assert abs(mean_n - oracle) <= 0.15, f"sample mean {mean_n} vs enumerated {oracle}"
    assert elapsed < 60.0
    report(capsys, "A1",
        f"{CORPUS_SIZE} filters valid+unique, leaf bounds hold, "
        f"mean n {mean_n:.4f} vs oracle {oracle:.4f} (|Δ|={abs(mean_n - oracle):.4f} ≤ 0.15), "
        f"{elapsed:.1f}s < 60s",
    )


def test_a2_fsm_suite(catalog, fsm, corpus10k, capsys):
    t0 = time.monotonic()
    rng = np.random.default_rng(7)
    for _ in range(1_000):
        text = random_walk(fsm, rng, 4096)
        assert validate(parse_filter(text), catalog).valid, "walk output parses + validates"

    for filt in corpus10k[:1_000]:
        assert fsm.accepts(serialize_canonical(filt)), "canonical serialization accepted"

    alphabet = string.printable[:95]
    rejected = 0
    trials = 1_000
    for i in range(trials):
        text = serialize_canonical(corpus10k[i])
        pos = int(rng.integers(len(text)))
        replacement = alphabet[int(rng.integers(len(alphabet)))]
        while replacement == text[pos]:
            replacement = alphabet[int(rng.integers(len(alphabet)))]
        if not fsm.accepts(text[:pos] + replacement + text[pos + 1 :]):
            rejected += 1
    elapsed = time.monotonic() - t0
    assert rejected >= 0.99 * trials, f"{rejected}/{trials} corruptions rejected"
    assert elapsed < 60.0
    report(capsys, "A2",
        f"1000/1000 walks validate, 1000/1000 canonical accepted, "
        f"{rejected}/1000 corruptions rejected (≥990), {elapsed:.1f}s < 60s",
    )


def test_a3_round_trip(catalog, corpus10k, index10k, capsys):
    lexicon = build_lexicon(catalog)
    exact = 0
    for filt in corpus10k[:1_000]:
        text = verbalize_canonical(filt, catalog)
        parsed, _ = parse_query(text, lexicon, catalog)
        assert execute(parsed, index10k) == execute(filt, index10k)
        exact += 1
    report(capsys, "A3", f"{exact}/1000 verbalize→parse round-trips execute to identical case sets")


def test_a4_executor_oracle(catalog, corpus10k, index10k, rng, capsys):
    for filt in corpus10k[:1_000]:
        assert execute(filt, index10k) == naive_execute(filt, index10k.records)

    trials = 0
    config = SynthConfig(seed=0, target_count=1)
    while trials < 1_000:
        filt = sample_filter(rng, catalog, config)
        if len(filt.leaves) < 2:
            continue
        grown = execute(filt, index10k)
        without_last = execute(Conjunction(filt.leaves[:-1]), index10k)
        assert grown <= without_last, "adding a leaf never enlarges the result"
        trials += 1
    report(capsys, "A4", "1000/1000 filters match the full-scan oracle; 1000/1000 leaf-addition trials monotone")


def test_a5_metrics(rng, capsys):
    universe = [f"c{i}" for i in range(50)]
    for _ in range(10_000):
        pred = {universe[i] for i in rng.choice(50, size=int(rng.integers(0, 50)), replace=False)}
        actual = {universe[i] for i in rng.choice(50, size=int(rng.integers(1, 50)), replace=False)}
        tpr, iou, exact = set_metrics(pred, actual)
        inter = len(pred & actual)
        assert tpr == inter / len(actual), "tpr equals direct set arithmetic"
        assert iou == inter / len(pred | actual), "iou equals direct set arithmetic"
        assert exact == (pred == actual)
        assert iou <= tpr
        assert exact == (iou == 1.0)
    f1 = token_f1("cases with lung cancer", "lung adenocarcinoma cases")
    assert abs(f1 - 4 / 7) <= 1e-12
    report(capsys, "A5", f"10000/10000 set pairs exact, invariants hold, token_f1 = {f1:.12f} = 4/7 ± 1e-12")


def test_a6_statistics(capsys):
    stat = mcnemar_statistic(5, 15)
    assert stat == 5.0
    p = mcnemar(5, 15)
    reference = chi2_1_sf_quadrature(5.0)
    assert abs(p - reference) <= 1e-4

    diffs = [0.2, -0.1, 0.3, 0.1, 0.0]
    n = len(diffs)
    mean = float(np.mean(diffs))
    sd = float(np.std(diffs, ddof=1))
    t = mean / (sd / np.sqrt(n))
    p_t = paired_t_test(diffs)
    reference_t = t_two_sided_p_quadrature(t, n - 1)
    assert abs(p_t - reference_t) <= 1e-6

    assert bonferroni(0.5, 4) == 1.0
    assert bonferroni(0.9, 2) == 1.0
    report(capsys, "A6",
        f"mcnemar stat 5.0 exact, p={p:.6f} within 1e-4 of quadrature {reference:.6f}; "
        f"t-test p={p_t:.8f} within 1e-6 of quadrature; bonferroni clamps at 1",
    )


def test_a7_identity_and_empty_system_bounds(catalog, corpus10k, index10k, capsys):
    pool = corpus10k[3000:5300]
    samples = []
    for filt in pool:
        if not execute(filt, index10k):
            continue  # evaluation splits exclude empty cohorts
        samples.append(
            PairedSample(
                query=verbalize_canonical(filt, catalog),
                filter=filt,
                provenance="synthetic",
                hash=canonical_hash(filt),
            )
        )
        if len(samples) == 2_000:
            break
    assert len(samples) == 2_000, "2,000 non-empty synthetic pairs available"

    by_query = {s.query: s.filter for s in samples}
    assert len(by_query) == 2_000

    _, identity_summary = evaluate_corpus(samples, lambda q: by_query[q], index10k, catalog)
    assert identity_summary.tpr == 1.0
    assert identity_summary.iou == 1.0
    assert identity_summary.exact == 1.0

    def empty_system(query):
        raise InvalidGenerationError("always empty", raw_text="")

    _, empty_summary = evaluate_corpus(samples, empty_system, index10k, catalog)
    assert empty_summary.tpr == 0.0
    assert empty_summary.iou == 0.0
    assert empty_summary.exact == 0.0
    assert empty_summary.qsim == 0.0
    report(capsys, "A7",
        "identity system: mean tpr=iou=exact=1.0 exactly over 2000 pairs; "
        "empty-prediction system: all zeros",
    )


def test_a8_service_contract(catalog, corpus10k, index10k, capsys):
    client = TestClient(create_app(catalog, index10k, page_size=50))

    response = client.post(
        "/api/generate",
        json={"query": "cases with gene expression data derived from RNA sequencing for lung adenocarcinoma"},
    )
    assert response.status_code == 200
    generated = parse_filter(json.dumps(response.json()["filter"]))
    assert validate(generated, catalog).valid

    body = client.post("/api/execute", json={"filter": {"op": "and", "content": []}}).json()
    assert body["count"] == len(index10k)

    bad = {"op": "and", "content": [{"op": "in", "content": {"field": "cases.bogus", "value": ["x"]}}]}
    response = client.post("/api/validate", json={"filter": bad})
    assert response.status_code == 200
    assert response.json()["valid"] is False
    assert any("unknown field" in i["message"] for i in response.json()["issues"])

    export = client.post("/api/export", json={"filter": {"op": "and", "content": []}})
    lines = export.text.splitlines()
    assert export.text.endswith("\n") and lines == sorted(lines)

    checked = 0
    for filt in corpus10k[200:300]:
        wire = filter_to_wire(filt)
        count = client.post("/api/execute", json={"filter": wire}).json()["count"]
        exported = client.post("/api/export", json={"filter": wire}).text
        assert count == len(exported.splitlines())
        checked += 1
    assert checked == 100
    report(capsys, "A8",
        "endpoint examples pass; export sorted+newline-terminated; "
        "execute count == export lines on 100/100 random filters",
    )
