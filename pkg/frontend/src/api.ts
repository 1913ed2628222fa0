/** Thin typed client over the cohort service JSON API. */

import type {
  Catalog,
  CohortFilter,
  ExecuteResult,
  GenerateResult,
  ValidationIssue,
  ValidationReport,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly issues: ValidationIssue[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function throwFrom(response: Response, path: string): Promise<never> {
  let issues: ValidationIssue[] = [];
  try {
    const body = await response.json();
    if (Array.isArray(body?.issues)) {
      issues = body.issues;
    }
  } catch {
    // non-JSON error body; status alone will have to do
  }
  const detail = issues.map((i) => i.message).join("; ");
  throw new ApiError(
    `${path} failed (${response.status})${detail ? `: ${detail}` : ""}`,
    response.status,
    issues,
  );
}

export class ApiClient {
  constructor(
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private base = "",
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) {
      await throwFrom(response, path);
    }
    return (await response.json()) as T;
  }

  private async post(path: string, body: unknown): Promise<Response> {
    const response = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      await throwFrom(response, path);
    }
    return response;
  }

  async fields(): Promise<Catalog> {
    return this.getJson<Catalog>("/api/fields");
  }

  async generate(query: string): Promise<GenerateResult> {
    const response = await this.post("/api/generate", { query });
    return (await response.json()) as GenerateResult;
  }

  async validate(filter: CohortFilter): Promise<ValidationReport> {
    const response = await this.post("/api/validate", { filter });
    return (await response.json()) as ValidationReport;
  }

  async execute(filter: CohortFilter): Promise<ExecuteResult> {
    const response = await this.post("/api/execute", { filter });
    return (await response.json()) as ExecuteResult;
  }

  /** Full export body; resolves only after the complete file arrived. */
  async exportCohort(filter: CohortFilter): Promise<string> {
    const response = await this.post("/api/export", { filter });
    return await response.text();
  }
}
