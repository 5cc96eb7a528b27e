/** Stats snapshot header: four totals tiles; zeros render as "0", never blank. */

import type { StatsSnapshot } from "../api.js";

export interface StatsTile {
  label: string;
  value: string;
}

export interface StatsViewModel {
  kind: "stats";
  tiles: StatsTile[];
}

export function renderStatsHeader(stats: StatsSnapshot): StatsViewModel {
  return {
    kind: "stats",
    tiles: [
      { label: "Papers", value: String(stats.total_papers) },
      { label: "Structured summaries", value: String(stats.total_summaries) },
      { label: "Diseases", value: String(stats.distinct_diseases) },
      { label: "Locations", value: String(stats.distinct_locations) },
    ],
  };
}
