/** Interactive cohort builder.
 *
 * A natural-language query generates a draft filter that populates the
 * checkbox grid; every grid change re-counts the cohort live (coalesced,
 * last write wins); the current cohort exports as a sorted case-ID file.
 * The draft lives client-side only (the service is stateless) and is
 * mirrored into the URL fragment for shareable reloads.
 */

import { ApiClient, ApiError } from "./api.js";
import { coalesce, LatestOnly } from "./coalesce.js";
import { DraftFilter } from "./state.js";
import { filterFromHash, filterToHash } from "./urlstate.js";
import type { Catalog, CatalogField, CohortFilter, Diagnostics, NumericOp } from "./types.js";
import { isNumericOp } from "./types.js";

export interface AppEnv {
  confirm(message: string): boolean;
  download(filename: string, text: string): void;
  getHash(): string;
  setHash(hash: string): void;
}

const NUMERIC_OPS: { op: NumericOp | ""; label: string }[] = [
  { op: "", label: "any" },
  { op: ">=", label: "at least" },
  { op: "<=", label: "at most" },
  { op: ">", label: "more than" },
  { op: "<", label: "less than" },
];

export class App {
  private doc: Document;
  private catalog: Catalog | null = null;
  private draft: DraftFilter | null = null;
  private lastCount: number | null = null;
  private latest = new LatestOnly();
  private scheduleCount: (filter: CohortFilter) => void;

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private env: AppEnv,
    countDelayMs = 150,
  ) {
    this.doc = root.ownerDocument;
    this.scheduleCount = coalesce(countDelayMs, (filter: CohortFilter) => {
      void this.runCount(filter);
    });
  }

  async start(): Promise<void> {
    this.renderSkeleton();
    try {
      this.catalog = await this.client.fields();
    } catch (err) {
      this.showBanner(`Could not reach the cohort service: ${describe(err)}`);
      return;
    }
    this.hideBanner();
    this.draft = new DraftFilter(this.catalog);
    const restored = filterFromHash(this.env.getHash());
    if (restored) {
      this.draft = DraftFilter.fromFilter(this.catalog, restored);
    }
    this.renderBuilder();
    this.syncGridFromDraft();
    this.scheduleCount(this.draft.toFilter());
  }

  // -- rendering ----------------------------------------------------------

  private renderSkeleton(): void {
    this.root.innerHTML = `
      <header>
        <h1>Cohort Builder</h1>
        <form id="query-form">
          <input id="query-input" type="text" autocomplete="off"
                 placeholder="Describe a cohort, e.g. ffpe samples with stage iv tumors" />
          <button type="submit" id="query-submit">Generate</button>
        </form>
        <p id="diagnostics" class="diagnostics"></p>
        <div id="banner" class="banner" hidden></div>
      </header>
      <section class="toolbar">
        <span id="count" class="count">counting…</span>
        <button id="export-btn">Export case IDs</button>
        <button id="clear-btn">Clear selections</button>
      </section>
      <main id="builder"></main>
      <div id="toast" class="toast" hidden></div>
    `;
    this.byId<HTMLFormElement>("query-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.onSubmitQuery();
    });
    this.byId<HTMLButtonElement>("export-btn").addEventListener("click", () => {
      void this.onExport();
    });
    this.byId<HTMLButtonElement>("clear-btn").addEventListener("click", () => {
      if (this.draft) {
        this.draft.clear();
        this.syncGridFromDraft();
        this.onDraftChanged();
      }
    });
  }

  private renderBuilder(): void {
    const catalog = this.catalog;
    if (!catalog) {
      return;
    }
    const builder = this.byId<HTMLElement>("builder");
    builder.innerHTML = "";
    const groups = new Map<string, CatalogField[]>();
    for (const field of catalog.fields) {
      const bucket = groups.get(field.group) ?? [];
      bucket.push(field);
      groups.set(field.group, bucket);
    }
    for (const [group, fields] of groups) {
      const section = this.doc.createElement("section");
      section.className = "group";
      const heading = this.doc.createElement("h2");
      heading.textContent = group;
      section.appendChild(heading);
      for (const field of fields) {
        section.appendChild(
          field.kind === "categorical" ? this.renderCategorical(field) : this.renderNumeric(field),
        );
      }
      builder.appendChild(section);
    }
  }

  private renderCategorical(field: CatalogField): HTMLElement {
    const fieldset = this.doc.createElement("fieldset");
    fieldset.dataset.field = field.name;
    const legend = this.doc.createElement("legend");
    legend.textContent = field.display ?? field.name;
    fieldset.appendChild(legend);
    for (const value of field.values ?? []) {
      const label = this.doc.createElement("label");
      const box = this.doc.createElement("input");
      box.type = "checkbox";
      box.dataset.field = field.name;
      box.dataset.value = value;
      box.addEventListener("change", () => {
        this.draft?.toggleValue(field.name, value);
        this.onDraftChanged();
      });
      label.appendChild(box);
      label.appendChild(this.doc.createTextNode(` ${value}`));
      fieldset.appendChild(label);
    }
    return fieldset;
  }

  private renderNumeric(field: CatalogField): HTMLElement {
    const fieldset = this.doc.createElement("fieldset");
    fieldset.dataset.field = field.name;
    const legend = this.doc.createElement("legend");
    legend.textContent = field.display ?? field.name;
    fieldset.appendChild(legend);

    const select = this.doc.createElement("select");
    select.dataset.field = field.name;
    select.dataset.role = "op";
    for (const { op, label } of NUMERIC_OPS) {
      const option = this.doc.createElement("option");
      option.value = op;
      option.textContent = label;
      select.appendChild(option);
    }
    const input = this.doc.createElement("input");
    input.type = "number";
    input.dataset.field = field.name;
    input.dataset.role = "value";
    if (field.range) {
      input.min = String(field.range.min);
      input.max = String(field.range.max);
      input.step = "1";
    }
    const unit = this.doc.createElement("span");
    unit.className = "unit";
    unit.textContent = field.range?.unit ?? "";

    const update = () => this.onNumericChanged(field, select, input);
    select.addEventListener("change", update);
    input.addEventListener("change", update);

    fieldset.appendChild(select);
    fieldset.appendChild(input);
    fieldset.appendChild(unit);
    return fieldset;
  }

  private renderDiagnostics(query: string, diagnostics: Diagnostics): void {
    const target = this.byId<HTMLElement>("diagnostics");
    target.innerHTML = "";
    if (!query) {
      return;
    }
    const spans = [...diagnostics.unmatched].sort((a, b) => a.start - b.start);
    let cursor = 0;
    for (const span of spans) {
      if (span.start > cursor) {
        target.appendChild(this.doc.createTextNode(query.slice(cursor, span.start)));
      }
      const mark = this.doc.createElement("mark");
      mark.textContent = query.slice(span.start, span.end);
      target.appendChild(mark);
      cursor = span.end;
    }
    if (cursor < query.length) {
      target.appendChild(this.doc.createTextNode(query.slice(cursor)));
    }
    const note = this.doc.createElement("em");
    note.textContent =
      diagnostics.confidence === "exact"
        ? " — fully understood"
        : " — highlighted words were not matched";
    target.appendChild(note);
  }

  // -- state propagation ---------------------------------------------------

  private syncGridFromDraft(): void {
    const draft = this.draft;
    if (!draft) {
      return;
    }
    const builder = this.byId<HTMLElement>("builder");
    for (const box of Array.from(builder.querySelectorAll<HTMLInputElement>("input[type=checkbox]"))) {
      const { field, value } = box.dataset;
      box.checked = field !== undefined && value !== undefined && draft.isSelected(field, value);
    }
    for (const select of Array.from(builder.querySelectorAll<HTMLSelectElement>("select[data-role=op]"))) {
      const field = select.dataset.field ?? "";
      const choice = draft.numericChoice(field);
      select.value = choice?.op ?? "";
      const input = builder.querySelector<HTMLInputElement>(
        `input[data-role=value][data-field="${field}"]`,
      );
      if (input) {
        input.value = choice ? String(choice.value) : "";
      }
    }
  }

  private onNumericChanged(
    field: CatalogField,
    select: HTMLSelectElement,
    input: HTMLInputElement,
  ): void {
    const draft = this.draft;
    if (!draft || !field.range) {
      return;
    }
    const op = select.value;
    if (!isNumericOp(op)) {
      draft.setNumeric(field.name, null);
      input.value = "";
      this.onDraftChanged();
      return;
    }
    let value = Number.parseFloat(input.value);
    if (Number.isNaN(value)) {
      value = field.range.min;
    }
    draft.setNumeric(field.name, op, value);
    const applied = draft.numericChoice(field.name);
    if (applied) {
      input.value = String(applied.value); // reflect clamping
    }
    this.onDraftChanged();
  }

  private onDraftChanged(): void {
    const draft = this.draft;
    if (!draft) {
      return;
    }
    const filter = draft.toFilter();
    this.env.setHash(filterToHash(filter));
    this.setCountPending();
    this.scheduleCount(filter);
  }

  private async runCount(filter: CohortFilter): Promise<void> {
    const token = this.latest.begin();
    try {
      const result = await this.client.execute(filter);
      if (this.latest.isCurrent(token)) {
        this.lastCount = result.count;
        this.byId<HTMLElement>("count").textContent = `${result.count} cases`;
      }
    } catch (err) {
      if (this.latest.isCurrent(token)) {
        this.lastCount = null;
        this.byId<HTMLElement>("count").textContent = "count unavailable";
        this.toast(`Count failed: ${describe(err)}`);
      }
    }
  }

  private setCountPending(): void {
    this.byId<HTMLElement>("count").textContent = "counting…";
  }

  // -- actions -------------------------------------------------------------

  private async onSubmitQuery(): Promise<void> {
    const catalog = this.catalog;
    if (!catalog) {
      return;
    }
    const query = this.byId<HTMLInputElement>("query-input").value;
    try {
      const result = await this.client.generate(query);
      this.draft = DraftFilter.fromFilter(catalog, result.filter);
      this.syncGridFromDraft();
      this.renderDiagnostics(query, result.diagnostics);
      this.onDraftChanged();
    } catch (err) {
      this.toast(`Generation failed: ${describe(err)}`);
    }
  }

  private async onExport(): Promise<void> {
    const draft = this.draft;
    if (!draft) {
      return;
    }
    if (this.lastCount === 0) {
      const proceed = this.env.confirm(
        "The current cohort is empty; export an empty case-ID file?",
      );
      if (!proceed) {
        return;
      }
    }
    try {
      const text = await this.client.exportCohort(draft.toFilter());
      this.env.download("case_ids.txt", text);
    } catch (err) {
      this.toast(`Export failed, no file was saved: ${describe(err)}`);
    }
  }

  // -- chrome --------------------------------------------------------------

  private showBanner(message: string): void {
    const banner = this.byId<HTMLElement>("banner");
    banner.hidden = false;
    banner.innerHTML = "";
    banner.appendChild(this.doc.createTextNode(message + " "));
    const retry = this.doc.createElement("button");
    retry.id = "retry-btn";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      void this.start();
    });
    banner.appendChild(retry);
  }

  private hideBanner(): void {
    this.byId<HTMLElement>("banner").hidden = true;
  }

  private toast(message: string): void {
    const toast = this.byId<HTMLElement>("toast");
    toast.textContent = message;
    toast.hidden = false;
    setTimeout(() => {
      toast.hidden = true;
    }, 4000);
  }

  private byId<T extends HTMLElement>(id: string): T {
    const node = this.root.querySelector<T>(`#${id}`);
    if (!node) {
      throw new Error(`missing #${id}`);
    }
    return node;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError && err.issues.length > 0) {
    return err.issues.map((i) => i.message).join("; ");
  }
  return err instanceof Error ? err.message : String(err);
}
