import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cohortkit import (
    CaseIndex,
    SynthConfig,
    filter_to_wire,
    generate_cases,
    generate_corpus,
    parse_filter,
    sample_filter,
    validate,
)
from cohortkit.service import create_app

OVERVIEW_QUERY = "cases with gene expression data derived from RNA sequencing for lung adenocarcinoma"


@pytest.fixture(scope="module")
def fixture_index(catalog):
    filters = generate_corpus(SynthConfig(seed=13, target_count=60), catalog)
    records = generate_cases(catalog, 400, seed=17, seed_filters=filters)
    return CaseIndex(records, catalog)


@pytest.fixture(scope="module")
def catalog():
    from cohortkit import desk_catalog

    return desk_catalog()


@pytest.fixture(scope="module")
def client(catalog, fixture_index):
    app = create_app(catalog, fixture_index, page_size=25)
    return TestClient(app)


class TestEndpoints:
    def test_healthz(self, client):
        assert client.get("/healthz").status_code == 200

    def test_fields_returns_manifest(self, client, catalog):
        doc = client.get("/api/fields").json()
        assert [f["name"] for f in doc["fields"]] == catalog.field_names()
        assert all({"name", "kind", "values", "range", "group"} <= set(f) for f in doc["fields"])

    def test_generate_overview_example_validates(self, client, catalog):
        response = client.post("/api/generate", json={"query": OVERVIEW_QUERY})
        assert response.status_code == 200
        body = response.json()
        filt = parse_filter(json.dumps(body["filter"]))
        assert validate(filt, catalog).valid
        assert body["diagnostics"]["confidence"] in ("exact", "partial")
        assert body["diagnostics"]["backend"] == "lexicon"

    def test_generate_empty_query_gives_null_filter(self, client):
        body = client.post("/api/generate", json={"query": ""}).json()
        assert body["filter"] == {"op": "and", "content": []}

    def test_validate_unknown_field_reports(self, client):
        bad = {"op": "and", "content": [{"op": "in", "content": {"field": "cases.bogus", "value": ["x"]}}]}
        response = client.post("/api/validate", json={"filter": bad})
        assert response.status_code == 200
        body = response.json()
        assert body["valid"] is False
        assert any("unknown field" in i["message"] for i in body["issues"])

    def test_validate_structure_error_reported_not_500(self, client):
        response = client.post("/api/validate", json={"filter": {"op": "or", "content": []}})
        assert response.status_code == 200
        assert response.json()["valid"] is False

    def test_execute_null_filter_counts_index(self, client, fixture_index):
        body = client.post("/api/execute", json={"filter": {"op": "and", "content": []}}).json()
        assert body["count"] == len(fixture_index)
        assert len(body["case_ids"]) == 25  # page cap

    def test_execute_invalid_filter_400(self, client):
        bad = {"op": "and", "content": [{"op": "in", "content": {"field": "cases.bogus", "value": ["x"]}}]}
        response = client.post("/api/execute", json={"filter": bad})
        assert response.status_code == 400
        assert response.json()["issues"]

    def test_execute_malformed_body_400(self, client):
        assert client.post("/api/execute", json={"no_filter": True}).status_code == 400
        assert client.post("/api/generate", json={}).status_code == 400

    def test_export_format(self, client):
        response = client.post("/api/export", json={"filter": {"op": "and", "content": []}})
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/plain")
        text = response.text
        lines = text.splitlines()
        assert text.endswith("\n")
        assert lines == sorted(lines)

    def test_execute_count_equals_export_lines_on_random_filters(self, client, catalog):
        rng = np.random.default_rng(3)
        config = SynthConfig(seed=0, target_count=1)
        for _ in range(100):
            filt = sample_filter(rng, catalog, config)
            wire = filter_to_wire(filt)
            count = client.post("/api/execute", json={"filter": wire}).json()["count"]
            export = client.post("/api/export", json={"filter": wire}).text
            assert count == len(export.splitlines())

    def test_responses_stateless_and_repeatable(self, client):
        wire = {"op": "and", "content": [{"op": "in", "content": {"field": "cases.samples.tissue_type", "value": ["tumor"]}}]}
        first = client.post("/api/execute", json={"filter": wire}).json()
        second = client.post("/api/execute", json={"filter": wire}).json()
        assert first == second

    def test_every_generated_filter_validates(self, client, catalog):
        queries = [
            OVERVIEW_QUERY,
            "ffpe samples for hematopoietic system, nos in the cgci-blgsp project",
            "random words without any catalog meaning",
            "age at diagnosis under 7300 days with stage iv tumors",
        ]
        for query in queries:
            body = client.post("/api/generate", json={"query": query}).json()
            filt = parse_filter(json.dumps(body["filter"]))
            assert validate(filt, catalog).valid


class TestLlmBackend:
    @pytest.fixture()
    def llm_client(self, catalog, fixture_index, monkeypatch):
        import threading
        from http.server import BaseHTTPRequestHandler, HTTPServer

        from cohortkit import EndpointConfig

        class Handler(BaseHTTPRequestHandler):
            reply = '{"op":"and","content":[]}'

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                self.rfile.read(length)
                body = json.dumps(
                    {"choices": [{"message": {"content": type(self).reply}}]}
                ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = HTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        config = EndpointConfig(base_url=f"http://127.0.0.1:{server.server_port}", model="stub")
        app = create_app(catalog, fixture_index, llm_config=config)
        yield TestClient(app), Handler
        server.shutdown()

    def test_accepted_reply_served_with_llm_diagnostics(self, llm_client):
        client, handler = llm_client
        handler.reply = (
            '{"op":"and","content":[{"op":"in","content":'
            '{"field":"cases.samples.preservation_method","value":["ffpe"]}}]}'
        )
        body = client.post("/api/generate", json={"query": "ffpe cases"}).json()
        assert body["diagnostics"]["backend"] == "llm"
        assert body["filter"]["content"][0]["content"]["value"] == ["ffpe"]

    def test_rejected_reply_falls_back_to_lexicon(self, llm_client):
        client, handler = llm_client
        handler.reply = "not a filter at all"
        body = client.post("/api/generate", json={"query": "ffpe cases"}).json()
        assert body["diagnostics"]["backend"] == "lexicon"
        assert body["filter"]["content"][0]["content"]["value"] == ["ffpe"]
