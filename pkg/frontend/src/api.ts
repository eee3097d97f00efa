import type {
  ApiError,
  CriteriaTreePayload,
  CriterionStatus,
  EngagementDetail,
  EngagementStateName,
  EngagementSummary,
  EvidenceItemPayload,
  SectionRollup,
} from "./model.js";

const API = "/api/v1";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: ApiError,
  ) {
    super(detail.message ?? detail.error);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: ApiError = { error: `HTTP ${response.status}` };
  try {
    const body = await response.json();
    if (body && typeof body === "object" && "detail" in body) {
      detail = body.detail as ApiError;
    }
  } catch {
    // non-JSON error body; keep the HTTP status
  }
  throw new ApiRequestError(response.status, detail);
}

export class WorkbenchClient {
  constructor(private token: string) {}

  setToken(token: string): void {
    this.token = token;
  }

  private headers(mutating: boolean): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (mutating && this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    return headers;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${API}${path}`);
    if (!response.ok) {
      return parseError(response);
    }
    return (await response.json()) as T;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(`${API}${path}`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      return parseError(response);
    }
    return (await response.json()) as T;
  }

  listEngagements(): Promise<{ engagements: EngagementSummary[] }> {
    return this.get("/engagements");
  }

  engagementDetail(id: string): Promise<EngagementDetail> {
    return this.get(`/engagements/${id}`);
  }

  // Conditional fetch: resolves to null when the tree is unchanged (304).
  async criteriaTree(id: string, etag: string | null): Promise<CriteriaTreePayload | null> {
    const headers: Record<string, string> = {};
    if (etag) {
      headers["If-None-Match"] = etag;
    }
    const response = await fetch(`${API}/engagements/${id}/criteria`, { headers });
    if (response.status === 304) {
      return null;
    }
    if (!response.ok) {
      return parseError(response);
    }
    return (await response.json()) as CriteriaTreePayload;
  }

  listEvidence(id: string): Promise<{ items: EvidenceItemPayload[] }> {
    return this.get(`/engagements/${id}/evidence`);
  }

  postOpinion(
    id: string,
    body: {
      criterion_id: string;
      status: CriterionStatus;
      rationale: string;
      evidence_refs: string[];
    },
  ): Promise<{ record: unknown; rollup: SectionRollup }> {
    return this.post(`/engagements/${id}/opinions`, body);
  }

  postEvidence(
    id: string,
    body: { kind: string; title: string; content_base64: string },
  ): Promise<{ item: EvidenceItemPayload }> {
    return this.post(`/engagements/${id}/evidence`, body);
  }

  postVerification(
    id: string,
    body: { item_id: string; verdict: string; method: string; finding: string },
  ): Promise<{ item: EvidenceItemPayload }> {
    return this.post(`/engagements/${id}/verifications`, body);
  }

  postTransition(
    id: string,
    target: EngagementStateName,
    note = "",
  ): Promise<{ state: EngagementStateName; verification_loops: number }> {
    return this.post(`/engagements/${id}/transitions`, { target, note });
  }

  runChecks(id: string): Promise<{ recorded: number; statuses: Record<string, CriterionStatus> }> {
    return this.post(`/engagements/${id}/checks`, {});
  }

  reportPreview(id: string): Promise<{ report: Record<string, unknown>; markdown: string }> {
    return this.get(`/engagements/${id}/report-preview`);
  }
}
