/** Wire types shared with the cohort service API. */

export type NumericOp = "<=" | "<" | ">=" | ">";

export interface NumericRange {
  min: number;
  max: number;
  unit: string;
}

export interface CatalogField {
  name: string;
  kind: "categorical" | "numeric";
  values: string[] | null;
  range: NumericRange | null;
  group: string;
  display?: string;
}

export interface Catalog {
  version: string;
  fields: CatalogField[];
}

export interface CategoricalLeaf {
  op: "in";
  content: { field: string; value: string[] };
}

export interface NumericLeaf {
  op: NumericOp;
  content: { field: string; value: number };
}

export type FilterLeaf = CategoricalLeaf | NumericLeaf;

export interface CohortFilter {
  op: "and";
  content: FilterLeaf[];
}

export interface MatchedSpan {
  start: number;
  end: number;
  field: string;
  value: string | null;
}

export interface UnmatchedSpan {
  start: number;
  end: number;
  text?: string;
}

export interface Diagnostics {
  matched: MatchedSpan[];
  unmatched: UnmatchedSpan[];
  confidence: "exact" | "partial";
  backend?: string;
}

export interface ValidationIssue {
  severity: "error" | "warning";
  path: string;
  message: string;
}

export interface ValidationReport {
  valid: boolean;
  issues: ValidationIssue[];
}

export interface ExecuteResult {
  count: number;
  case_ids: string[];
}

export interface GenerateResult {
  filter: CohortFilter;
  diagnostics: Diagnostics;
}

export function isNumericOp(op: string): op is NumericOp {
  return op === "<=" || op === "<" || op === ">=" || op === ">";
}
