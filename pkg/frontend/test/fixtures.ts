import type { Catalog, CohortFilter } from "../src/types.js";

export const CATALOG: Catalog = {
  version: "test-1",
  fields: [
    {
      name: "cases.project.program.name",
      kind: "categorical",
      values: ["target", "cgci", "tcga"],
      range: null,
      group: "project",
      display: "program name",
    },
    {
      name: "cases.samples.tissue_type",
      kind: "categorical",
      values: ["tumor", "normal"],
      range: null,
      group: "samples",
      display: "tissue type",
    },
    {
      name: "cases.diagnoses.age_at_diagnosis",
      kind: "numeric",
      values: null,
      range: { min: 0, max: 100, unit: "days" },
      group: "diagnosis",
      display: "age at diagnosis",
    },
  ],
};

export const SAMPLE_FILTER: CohortFilter = {
  op: "and",
  content: [
    { op: ">=", content: { field: "cases.diagnoses.age_at_diagnosis", value: 18 } },
    { op: "in", content: { field: "cases.project.program.name", value: ["cgci", "target"] } },
    { op: "in", content: { field: "cases.samples.tissue_type", value: ["tumor"] } },
  ],
};

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function textResponse(body: string, status = 200): Response {
  return new Response(body, { status, headers: { "content-type": "text/plain" } });
}
