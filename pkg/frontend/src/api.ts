/** Typed client for the review service. The UI renders exclusively from
 * these responses — no score or feature math happens client-side. */

export interface RecordSummary {
  record_id: string;
  estate: string;
  elevator: string;
  floor: number;
  r1_score: number;
  r2_score: number;
  window_end: string;
  status: "open" | "reviewed";
}

export interface FlowPoint {
  date: string;
  in: number;
  out: number;
}

export interface StopExcerpt {
  estate: string;
  elevator: string;
  floor: number;
  ts: string;
  boarded: number;
  alighted: number;
}

export interface Label {
  verdict: string;
  reason: string;
  note: string;
  reviewer_id: string;
  reviewed_at: string;
}

export interface RecordDetail extends RecordSummary {
  label: Label | null;
  flow_series: FlowPoint[];
  headcount: number;
  hour_histogram: number[];
  attribute_class_means: number[];
  attribute_score_means: number[];
  stop_excerpts: StopExcerpt[];
}

export interface AnomalyPage {
  total: number;
  page: number;
  page_size: number;
  records: RecordSummary[];
}

export interface ExclusionEntry {
  entry_id: string;
  estate: string;
  elevator: string | null;
  floor: number | null;
  reason: string;
  created_at: string;
  deleted: boolean;
}

export interface ReviewSubmission {
  verdict: string;
  reason: string;
  note?: string;
  reviewer_id?: string;
  exclusion_scope?: "floor" | "estate";
}

export interface ReviewAck {
  record_id: string;
  status: string;
  exclusion: ExclusionEntry | null;
}

/** Thrown for any non-2xx response; `status` drives conflict handling. */
export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      /* non-JSON error body; keep statusText */
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  listAnomalies(page = 1, pageSize = 200): Promise<AnomalyPage> {
    const q = `page=${page}&page_size=${pageSize}`;
    return fetch(`${this.baseUrl}/anomalies?${q}`).then((r) => asJson<AnomalyPage>(r));
  }

  getDetail(recordId: string): Promise<RecordDetail> {
    return fetch(`${this.baseUrl}/anomalies/${encodeURIComponent(recordId)}`).then(
      (r) => asJson<RecordDetail>(r),
    );
  }

  submitReview(recordId: string, body: ReviewSubmission): Promise<ReviewAck> {
    return fetch(`${this.baseUrl}/anomalies/${encodeURIComponent(recordId)}/review`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<ReviewAck>(r));
  }

  listExclusions(): Promise<{ exclusions: ExclusionEntry[] }> {
    return fetch(`${this.baseUrl}/exclusions`).then(
      (r) => asJson<{ exclusions: ExclusionEntry[] }>(r),
    );
  }

  deleteExclusion(entryId: string): Promise<{ entry_id: string; deleted: boolean }> {
    return fetch(`${this.baseUrl}/exclusions/${encodeURIComponent(entryId)}`, {
      method: "DELETE",
    }).then((r) => asJson<{ entry_id: string; deleted: boolean }>(r));
  }
}
