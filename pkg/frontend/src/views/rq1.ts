/** Max-R0-per-disease bar chart: diseases on the x-axis, bars clickable for
 * drilldown, hover tooltip with the disease and its max value. */

import type { Rq1Row } from "../api.js";
import type { R0Range } from "../state.js";

export interface Rq1Bar {
  disease: string;
  maxR0: number;
  meanR0: number;
  medianR0: number;
  studyCount: number;
  heightPct: number;
  tooltip: string;
  onClick: () => void;
}

export interface Rq1ViewModel {
  kind: "rq1";
  range: R0Range;
  bars: Rq1Bar[];
  placeholder: string | null;
}

export interface Rq1Handlers {
  onBarClick: (disease: string) => void;
}

export function renderRq1Chart(
  rows: Rq1Row[],
  r0Range: R0Range,
  handlers: Rq1Handlers,
): Rq1ViewModel {
  const top = rows.length ? Math.max(...rows.map((r) => r.max_r0)) : 0;
  const bars = rows.map((row) => ({
    disease: row.disease,
    maxR0: row.max_r0,
    meanR0: row.mean_r0,
    medianR0: row.median_r0,
    studyCount: row.study_count,
    heightPct: top > 0 ? (row.max_r0 / top) * 100 : 0,
    tooltip:
      `${row.disease}: max R0 ${row.max_r0}` +
      ` (mean ${round2(row.mean_r0)}, median ${round2(row.median_r0)},` +
      ` ${row.study_count} ${row.study_count === 1 ? "study" : "studies"})`,
    onClick: () => handlers.onBarClick(row.disease),
  }));
  return {
    kind: "rq1",
    range: r0Range,
    bars,
    placeholder: bars.length ? null : "no diseases in range",
  };
}

function round2(x: number): number {
  return Math.round(x * 100) / 100;
}
