/** Page controller: owns the view state, talks to the API, and rebuilds the
 * page view model after every change. Concurrent fetches are allowed; stale
 * responses are discarded by per-slot request sequence numbers. */

import {
  ApiClient,
  ApiRequestError,
  type PapersResponse,
  type Rq1Row,
  type Rq2Response,
  type Rq3Response,
  type Rq4Response,
  type StatsSnapshot,
} from "./api.js";
import {
  addMapDisease,
  initialState,
  removeMapDisease,
  setR0Range,
  type DrilldownSelector,
  type ViewState,
} from "./state.js";
import { renderDrilldownPanel, type DrilldownViewModel } from "./views/drilldown.js";
import { renderPapersTable, type PapersViewModel } from "./views/papers.js";
import { renderRq1Chart, type Rq1ViewModel } from "./views/rq1.js";
import { renderRq2Chart, type Rq2ViewModel } from "./views/rq2.js";
import { renderRq3Chart, type Rq3ViewModel } from "./views/rq3.js";
import { renderRq4Map, type Rq4ViewModel } from "./views/rq4.js";
import { renderStatsHeader, type StatsViewModel } from "./views/stats.js";

const PAGE_SIZE = 25;

export interface PageViewModel {
  stats: StatsViewModel | null;
  rq1: Rq1ViewModel;
  rq2: Rq2ViewModel;
  rq3: Rq3ViewModel;
  rq4: Rq4ViewModel;
  papers: PapersViewModel | null;
  drilldown: DrilldownViewModel | null;
  diseaseOptions: string[];
  error: string | null;
}

export type RenderFn = (page: PageViewModel) => void;

export class Dashboard {
  state: ViewState = initialState();

  private stats: StatsSnapshot | null = null;
  private rq1Rows: Rq1Row[] = [];
  private rq2: Rq2Response | null = null;
  private rq3: Rq3Response | null = null;
  private rq4: Rq4Response | null = null;
  private papers: PapersResponse | null = null;
  private mapMessage: string | null = null;
  private errors: Record<string, string> = {};
  private seq: Record<string, number> = {};

  constructor(
    private readonly api: ApiClient,
    private readonly render: RenderFn,
  ) {}

  /** Next sequence number for a slot; a response is applied only when no
   * newer request for the same slot has started since. */
  private nextSeq(slot: string): number {
    this.seq[slot] = (this.seq[slot] ?? 0) + 1;
    return this.seq[slot];
  }

  private isCurrent(slot: string, ticket: number): boolean {
    return this.seq[slot] === ticket;
  }

  async init(): Promise<void> {
    await Promise.all([this.refreshStats(), this.refreshRq1(), this.refreshPapers()]);
  }

  private async guard<T>(slot: string, request: Promise<T>, apply: (value: T) => void): Promise<void> {
    const ticket = this.nextSeq(slot);
    try {
      const value = await request;
      if (!this.isCurrent(slot, ticket)) return; // stale: newest wins
      delete this.errors[slot];
      apply(value);
    } catch (err) {
      if (!this.isCurrent(slot, ticket)) return;
      this.errors[slot] =
        err instanceof ApiRequestError ? `${err.code}: ${err.message}` : String(err);
    }
    this.paint();
  }

  private refreshStats(): Promise<void> {
    return this.guard("stats", this.api.stats(), (value) => {
      this.stats = value;
    });
  }

  private refreshRq1(): Promise<void> {
    const { lo, hi } = this.state.r0Range;
    return this.guard("rq1", this.api.rq1(lo, hi), (value) => {
      this.rq1Rows = value.rows;
    });
  }

  private refreshPapers(): Promise<void> {
    return this.guard(
      "papers",
      this.api.papers(this.state.papersPage, PAGE_SIZE, this.state.papersQuery || undefined),
      (value) => {
        this.papers = value;
      },
    );
  }

  async setR0Range(lo: number, hi: number): Promise<void> {
    this.state = setR0Range(this.state, lo, hi);
    await this.refreshRq1();
  }

  async chooseDisease(disease: string): Promise<void> {
    const key = disease.trim().toLowerCase();
    this.state = { ...this.state, selectedDisease: key || null };
    if (!key) {
      this.rq2 = null;
      this.rq3 = null;
      this.paint();
      return;
    }
    await Promise.all([
      this.guard("rq2", this.api.rq2(key), (value) => {
        this.rq2 = value;
      }),
      this.guard("rq3", this.api.rq3(key), (value) => {
        this.rq3 = value;
      }),
    ]);
  }

  /** Client-side cap: a fourth disease is rejected with a visible message
   * and no request is sent. */
  async addMapDisease(disease: string): Promise<boolean> {
    const result = addMapDisease(this.state, disease);
    if (!result.ok) {
      this.mapMessage = result.reason;
      this.paint();
      return false;
    }
    if (result.state === this.state) {
      return true; // already selected
    }
    this.state = result.state;
    this.mapMessage = null;
    await this.refreshRq4();
    return true;
  }

  async removeMapDisease(disease: string): Promise<void> {
    this.state = removeMapDisease(this.state, disease);
    this.mapMessage = null;
    if (this.state.mapDiseases.length === 0) {
      this.rq4 = null;
      this.paint();
      return;
    }
    await this.refreshRq4();
  }

  private refreshRq4(): Promise<void> {
    return this.guard("rq4", this.api.rq4(this.state.mapDiseases), (value) => {
      this.rq4 = value;
    });
  }

  async openDrilldown(selector: DrilldownSelector): Promise<void> {
    await this.guard(
      "drilldown",
      this.api.drilldown(selector.disease, selector.country, selector.rq),
      (value) => {
        this.state = { ...this.state, drilldown: { selector, rows: value.rows } };
      },
    );
  }

  closeDrilldown(): void {
    this.state = { ...this.state, drilldown: null };
    this.paint();
  }

  async setPapersPage(page: number): Promise<void> {
    this.state = { ...this.state, papersPage: Math.max(1, page) };
    await this.refreshPapers();
  }

  async setPapersQuery(query: string): Promise<void> {
    this.state = { ...this.state, papersQuery: query, papersPage: 1 };
    await this.refreshPapers();
  }

  buildPage(): PageViewModel {
    const drill = {
      onBarClick: (disease: string) => void this.openDrilldown({ disease, rq: "rq1" }),
      onBarClickWithCountry: (disease: string, country: string, rq: string) =>
        void this.openDrilldown({ disease, country, rq }),
    };
    return {
      stats: this.stats ? renderStatsHeader(this.stats) : null,
      rq1: renderRq1Chart(this.rq1Rows, this.state.r0Range, {
        onBarClick: drill.onBarClick,
      }),
      rq2: renderRq2Chart(this.state.selectedDisease, this.rq2?.rows ?? [], {
        onBarClick: (disease, country) => drill.onBarClickWithCountry(disease, country, "rq2"),
      }),
      rq3: renderRq3Chart(this.state.selectedDisease, this.rq3?.rows ?? [], {
        onStackClick: (disease, country) => drill.onBarClickWithCountry(disease, country, "rq3"),
      }),
      rq4: renderRq4Map(
        this.state.mapDiseases,
        this.rq4?.points ?? [],
        {
          onMarkerClick: (disease, country) => drill.onBarClickWithCountry(disease, country, "rq4"),
          onRemoveDisease: (disease) => void this.removeMapDisease(disease),
        },
        this.mapMessage,
      ),
      papers: this.papers ? renderPapersTable(this.papers, this.state.papersQuery) : null,
      drilldown: this.state.drilldown ? renderDrilldownPanel(this.state.drilldown) : null,
      diseaseOptions: this.rq1Rows.map((row) => row.disease),
      error: Object.values(this.errors)[0] ?? null,
    };
  }

  private paint(): void {
    this.render(this.buildPage());
  }
}
