import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";
import { CATALOG, SAMPLE_FILTER, jsonResponse, textResponse } from "./fixtures.js";

interface Recorded {
  input: string;
  init?: RequestInit;
}

function recordingFetch(route: (input: string) => Response): { calls: Recorded[]; fetchFn: FetchLike } {
  const calls: Recorded[] = [];
  const fetchFn: FetchLike = async (input, init) => {
    calls.push({ input, init });
    return route(input);
  };
  return { calls, fetchFn };
}

describe("ApiClient", () => {
  it("fetches the catalog", async () => {
    const { calls, fetchFn } = recordingFetch(() => jsonResponse(CATALOG));
    const client = new ApiClient(fetchFn);
    expect(await client.fields()).toEqual(CATALOG);
    expect(calls[0]?.input).toBe("/api/fields");
  });

  it("posts generate with the documented body", async () => {
    const { calls, fetchFn } = recordingFetch(() =>
      jsonResponse({ filter: SAMPLE_FILTER, diagnostics: { matched: [], unmatched: [], confidence: "exact" } }),
    );
    const client = new ApiClient(fetchFn);
    const result = await client.generate("ffpe things");
    expect(result.filter).toEqual(SAMPLE_FILTER);
    expect(calls[0]?.input).toBe("/api/generate");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ query: "ffpe things" });
    expect(calls[0]?.init?.method).toBe("POST");
  });

  it("executes filters and returns counts", async () => {
    const { calls, fetchFn } = recordingFetch(() => jsonResponse({ count: 3, case_ids: ["a", "b", "c"] }));
    const client = new ApiClient(fetchFn);
    const result = await client.execute(SAMPLE_FILTER);
    expect(result.count).toBe(3);
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ filter: SAMPLE_FILTER });
  });

  it("returns the raw export body", async () => {
    const { fetchFn } = recordingFetch(() => textResponse("c1\nc2\n"));
    const client = new ApiClient(fetchFn);
    expect(await client.exportCohort(SAMPLE_FILTER)).toBe("c1\nc2\n");
  });

  it("surfaces issue lists from 400 replies", async () => {
    const issues = [{ severity: "error", path: "$", message: "unknown field 'x'" }];
    const { fetchFn } = recordingFetch(() => jsonResponse({ valid: false, issues }, 400));
    const client = new ApiClient(fetchFn);
    const err = await client.execute(SAMPLE_FILTER).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).issues).toEqual(issues);
    expect((err as ApiError).message).toContain("unknown field");
  });

  it("tolerates non-JSON error bodies", async () => {
    const { fetchFn } = recordingFetch(() => textResponse("boom", 500));
    const client = new ApiClient(fetchFn);
    const err = await client.fields().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(500);
  });
});
