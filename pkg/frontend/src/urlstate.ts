/** Shareable drafts: the canonical filter JSON rides URL-encoded in the
 * fragment, so reloading (or pasting a link) restores the grid. */

import type { CohortFilter } from "./types.js";

const PREFIX = "#f=";

export function filterToHash(filter: CohortFilter): string {
  if (filter.content.length === 0) {
    return "";
  }
  return PREFIX + encodeURIComponent(JSON.stringify(filter));
}

export function filterFromHash(hash: string): CohortFilter | null {
  if (!hash.startsWith(PREFIX)) {
    return null;
  }
  try {
    const doc = JSON.parse(decodeURIComponent(hash.slice(PREFIX.length)));
    if (doc && doc.op === "and" && Array.isArray(doc.content)) {
      return doc as CohortFilter;
    }
  } catch {
    // malformed fragments are ignored rather than breaking the page
  }
  return null;
}
