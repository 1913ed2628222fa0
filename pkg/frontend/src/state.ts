/** Draft-filter model: the single source of truth behind the checkbox grid.
 *
 * Grid state and filter JSON are a bijection (up to canonical ordering):
 * serializing the grid and re-loading the serialization is a fixed point,
 * and only catalog-legal fields/values/ranges can enter, so the server
 * never rejects a submitted draft.
 */

import type {
  Catalog,
  CatalogField,
  CohortFilter,
  FilterLeaf,
  NumericOp,
} from "./types.js";

export interface NumericChoice {
  op: NumericOp;
  value: number;
}

export class DraftFilter {
  private selected = new Map<string, Set<string>>();
  private numeric = new Map<string, NumericChoice>();
  private fields = new Map<string, CatalogField>();

  constructor(readonly catalog: Catalog) {
    for (const field of catalog.fields) {
      this.fields.set(field.name, field);
    }
  }

  field(name: string): CatalogField | undefined {
    return this.fields.get(name);
  }

  isSelected(field: string, value: string): boolean {
    return this.selected.get(field)?.has(value) ?? false;
  }

  numericChoice(field: string): NumericChoice | undefined {
    return this.numeric.get(field);
  }

  /** Toggle one categorical checkbox; unknown fields/values are ignored. */
  toggleValue(field: string, value: string): void {
    const spec = this.fields.get(field);
    if (!spec || spec.kind !== "categorical" || !spec.values?.includes(value)) {
      return;
    }
    const current = this.selected.get(field) ?? new Set<string>();
    if (current.has(value)) {
      current.delete(value);
    } else {
      current.add(value);
    }
    if (current.size === 0) {
      this.selected.delete(field);
    } else {
      this.selected.set(field, current);
    }
  }

  /** Set or clear a numeric constraint; the value is clamped into range. */
  setNumeric(field: string, op: NumericOp | null, value?: number): void {
    const spec = this.fields.get(field);
    if (!spec || spec.kind !== "numeric" || !spec.range) {
      return;
    }
    if (op === null || value === undefined || Number.isNaN(value)) {
      this.numeric.delete(field);
      return;
    }
    const clamped = Math.min(Math.max(value, spec.range.min), spec.range.max);
    this.numeric.set(field, { op, value: clamped });
  }

  clear(): void {
    this.selected.clear();
    this.numeric.clear();
  }

  leafCount(): number {
    return this.selected.size + this.numeric.size;
  }

  /** Canonical wire form: leaves sorted by field name, values sorted. */
  toFilter(): CohortFilter {
    const leaves: FilterLeaf[] = [];
    for (const [field, values] of this.selected) {
      leaves.push({ op: "in", content: { field, value: [...values].sort() } });
    }
    for (const [field, choice] of this.numeric) {
      leaves.push({ op: choice.op, content: { field, value: choice.value } });
    }
    leaves.sort((a, b) => (a.content.field < b.content.field ? -1 : 1));
    return { op: "and", content: leaves };
  }

  /** Load a server-produced filter into grid state, dropping anything the
   * catalog does not know (mirrors the server's own validation). */
  static fromFilter(catalog: Catalog, filter: CohortFilter): DraftFilter {
    const draft = new DraftFilter(catalog);
    for (const leaf of filter.content) {
      if (leaf.op === "in") {
        for (const value of leaf.content.value) {
          draft.toggleValue(leaf.content.field, value);
        }
      } else {
        draft.setNumeric(leaf.content.field, leaf.op, leaf.content.value);
      }
    }
    return draft;
  }
}

export function filtersEqual(a: CohortFilter, b: CohortFilter): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}
