/** Side panel listing the publications behind the last clicked bar or
 * marker, with clickable PubMed links. */

import type { DrilldownPanel } from "../state.js";

export interface DrilldownLink {
  pmid: string;
  title: string;
  pubmedUrl: string;
}

export interface DrilldownViewModel {
  kind: "drilldown";
  heading: string;
  links: DrilldownLink[];
  empty: boolean;
}

export function renderDrilldownPanel(panel: DrilldownPanel): DrilldownViewModel {
  const { selector, rows } = panel;
  const where = selector.country ? ` in ${selector.country}` : "";
  return {
    kind: "drilldown",
    heading: `Publications for ${selector.disease}${where}`,
    links: rows.map((row) => ({
      pmid: row.pmid,
      title: row.title,
      pubmedUrl: row.pubmed_url,
    })),
    empty: rows.length === 0,
  };
}
