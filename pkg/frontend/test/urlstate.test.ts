import { describe, expect, it } from "vitest";

import { filterFromHash, filterToHash } from "../src/urlstate.js";
import { SAMPLE_FILTER } from "./fixtures.js";

describe("url state", () => {
  it("round-trips a filter through the fragment", () => {
    const hash = filterToHash(SAMPLE_FILTER);
    expect(hash.startsWith("#f=")).toBe(true);
    expect(filterFromHash(hash)).toEqual(SAMPLE_FILTER);
  });

  it("empty filters produce an empty hash", () => {
    expect(filterToHash({ op: "and", content: [] })).toBe("");
  });

  it("ignores malformed fragments", () => {
    expect(filterFromHash("")).toBeNull();
    expect(filterFromHash("#something-else")).toBeNull();
    expect(filterFromHash("#f=%7Bnope")).toBeNull();
    expect(filterFromHash("#f=" + encodeURIComponent('{"op":"or"}'))).toBeNull();
  });
});
