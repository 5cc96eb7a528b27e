/** Min/max R0 per location for a chosen disease: one stack per country
 * spanning [min_r0, max_r0], tooltip carries both bounds. */

import type { Rq3Row } from "../api.js";

export interface Rq3Stack {
  country: string;
  minR0: number;
  maxR0: number;
  basePct: number;
  spanPct: number;
  tooltip: string;
  onClick: () => void;
}

export interface Rq3ViewModel {
  kind: "rq3";
  disease: string | null;
  stacks: Rq3Stack[];
  emptyPrompt: string | null;
}

export interface Rq3Handlers {
  onStackClick: (disease: string, country: string) => void;
}

export function renderRq3Chart(
  disease: string | null,
  rows: Rq3Row[],
  handlers: Rq3Handlers,
): Rq3ViewModel {
  if (!disease) {
    return {
      kind: "rq3",
      disease: null,
      stacks: [],
      emptyPrompt: "choose a disease to see per-location R0 ranges",
    };
  }
  const top = rows.length ? Math.max(...rows.map((r) => r.max_r0)) : 0;
  const stacks = rows.map((row) => ({
    country: row.country,
    minR0: row.min_r0,
    maxR0: row.max_r0,
    basePct: top > 0 ? (row.min_r0 / top) * 100 : 0,
    spanPct: top > 0 ? ((row.max_r0 - row.min_r0) / top) * 100 : 0,
    tooltip: `${row.country}: R0 ${row.min_r0} to ${row.max_r0}`,
    onClick: () => handlers.onStackClick(disease, row.country),
  }));
  return {
    kind: "rq3",
    disease,
    stacks,
    emptyPrompt: stacks.length ? null : `no located studies for "${disease}"`,
  };
}
