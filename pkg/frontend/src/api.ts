/** Typed client for the analytics API. All requests are GET; the fetch
 * implementation is injectable for tests. */

export interface StatsSnapshot {
  total_papers: number;
  total_summaries: number;
  distinct_diseases: number;
  distinct_locations: number;
}

export interface Rq1Row {
  disease: string;
  max_r0: number;
  mean_r0: number;
  median_r0: number;
  study_count: number;
  pmids: string[];
}

export interface Rq1Response {
  rows: Rq1Row[];
}

export interface Rq2Row {
  country: string;
  study_count: number;
  pmids: string[];
}

export interface Rq2Response {
  disease: string;
  rows: Rq2Row[];
}

export interface Rq3Row {
  country: string;
  min_r0: number;
  max_r0: number;
  pmids: string[];
}

export interface Rq3Response {
  disease: string;
  rows: Rq3Row[];
}

export interface MapPointRow {
  disease: string;
  country: string;
  latitude: number;
  longitude: number;
  study_count: number;
  pmids: string[];
}

export interface Rq4Response {
  diseases: string[];
  points: MapPointRow[];
}

export interface DrilldownRow {
  pmid: string;
  title: string;
  pubmed_url: string;
}

export interface DrilldownResponse {
  disease: string;
  country: string | null;
  rows: DrilldownRow[];
}

export interface PaperRow {
  pmid: string;
  title: string;
  abstract: string;
  pub_year: number | null;
  pubmed_url: string;
}

export interface PapersResponse {
  rows: PaperRow[];
  total: number;
  page: number;
  size: number;
}

export class ApiRequestError extends Error {
  constructor(
    public readonly code: string,
    public readonly status: number,
    detail?: string,
  ) {
    super(detail ?? code);
  }
}

export type FetchLike = (url: string) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "/api",
    private readonly fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(path: string, params: Record<string, string> = {}): Promise<T> {
    const query = new URLSearchParams(params).toString();
    const url = `${this.baseUrl}${path}${query ? `?${query}` : ""}`;
    let response: Response;
    try {
      response = await this.fetchFn(url);
    } catch (err) {
      throw new ApiRequestError("Unreachable", 0, String(err));
    }
    if (!response.ok) {
      let code = `HTTP${response.status}`;
      let detail: string | undefined;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        if (body.error) code = body.error;
        detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiRequestError(code, response.status, detail);
    }
    return (await response.json()) as T;
  }

  stats(): Promise<StatsSnapshot> {
    return this.get<StatsSnapshot>("/stats");
  }

  rq1(r0Min?: number, r0Max?: number): Promise<Rq1Response> {
    const params: Record<string, string> = {};
    if (r0Min !== undefined) params.r0_min = String(r0Min);
    if (r0Max !== undefined) params.r0_max = String(r0Max);
    return this.get<Rq1Response>("/rq1", params);
  }

  rq2(disease: string): Promise<Rq2Response> {
    return this.get<Rq2Response>("/rq2", { disease });
  }

  rq3(disease: string): Promise<Rq3Response> {
    return this.get<Rq3Response>("/rq3", { disease });
  }

  rq4(diseases: string[]): Promise<Rq4Response> {
    return this.get<Rq4Response>("/rq4", { diseases: diseases.join(",") });
  }

  drilldown(disease: string, country?: string, rq?: string): Promise<DrilldownResponse> {
    const params: Record<string, string> = { disease };
    if (country !== undefined) params.country = country;
    if (rq !== undefined) params.rq = rq;
    return this.get<DrilldownResponse>("/drilldown", params);
  }

  papers(page: number, size: number, q?: string): Promise<PapersResponse> {
    const params: Record<string, string> = { page: String(page), size: String(size) };
    if (q) params.q = q;
    return this.get<PapersResponse>("/papers", params);
  }
}
