/** Paged paper table with keyword filter; every row links to PubMed. */

import type { PapersResponse } from "../api.js";

export interface PaperTableRow {
  pmid: string;
  title: string;
  pubYear: number | null;
  pubmedUrl: string;
}

export interface PapersViewModel {
  kind: "papers";
  rows: PaperTableRow[];
  total: number;
  page: number;
  pageCount: number;
  query: string;
}

export function renderPapersTable(response: PapersResponse, query: string): PapersViewModel {
  return {
    kind: "papers",
    rows: response.rows.map((row) => ({
      pmid: row.pmid,
      title: row.title,
      pubYear: row.pub_year,
      pubmedUrl: row.pubmed_url,
    })),
    total: response.total,
    page: response.page,
    pageCount: Math.max(1, Math.ceil(response.total / response.size)),
    query,
  };
}
