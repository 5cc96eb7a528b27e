/** Studies-per-location chart for a chosen disease: horizontal bars,
 * locations on the y-axis, click opens the disease+country drilldown. */

import type { Rq2Row } from "../api.js";

export interface Rq2Bar {
  country: string;
  studyCount: number;
  widthPct: number;
  onClick: () => void;
}

export interface Rq2ViewModel {
  kind: "rq2";
  disease: string | null;
  bars: Rq2Bar[];
  emptyPrompt: string | null;
}

export interface Rq2Handlers {
  onBarClick: (disease: string, country: string) => void;
}

export function renderRq2Chart(
  disease: string | null,
  rows: Rq2Row[],
  handlers: Rq2Handlers,
): Rq2ViewModel {
  if (!disease) {
    return {
      kind: "rq2",
      disease: null,
      bars: [],
      emptyPrompt: "choose a disease to see its study locations",
    };
  }
  const top = rows.length ? Math.max(...rows.map((r) => r.study_count)) : 0;
  const bars = rows.map((row) => ({
    country: row.country,
    studyCount: row.study_count,
    widthPct: top > 0 ? (row.study_count / top) * 100 : 0,
    onClick: () => handlers.onBarClick(disease, row.country),
  }));
  return {
    kind: "rq2",
    disease,
    bars,
    emptyPrompt: bars.length ? null : `no located studies for "${disease}"`,
  };
}
