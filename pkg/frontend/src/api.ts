/**
 * Thin typed client over the /v1 HTTP API. The fetch implementation is
 * injectable so tests can drive the client with canned responses.
 */

import type {
  AgreementReport,
  ConfusionPayload,
  DecisionKind,
  DecisionResponse,
  QueuePage,
  RunInfo,
  Stage,
  TaxonomyEnvelope,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export interface DecisionRequestBody {
  decision: DecisionKind;
  reviewer_id: string;
  comment?: string;
  challenge?: string;
}

export class Api {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async health(): Promise<{ status: string; version: string }> {
    return asJson(await this.fetchFn(this.url("/v1/health")));
  }

  async reviewQueue(stage?: Stage, page = 1, limit = 100): Promise<QueuePage> {
    const params = new URLSearchParams({ page: String(page), limit: String(limit) });
    if (stage) params.set("stage", stage);
    return asJson(await this.fetchFn(this.url(`/v1/review/queue?${params}`)));
  }

  async postDecision(itemId: string, body: DecisionRequestBody): Promise<DecisionResponse> {
    return asJson(
      await this.fetchFn(this.url(`/v1/review/items/${encodeURIComponent(itemId)}/decision`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  async taxonomy(draftId: string): Promise<TaxonomyEnvelope> {
    return asJson(
      await this.fetchFn(this.url(`/v1/taxonomies/${encodeURIComponent(draftId)}`)),
    );
  }

  async report(runId: string): Promise<AgreementReport> {
    return asJson(await this.fetchFn(this.url(`/v1/reports/${encodeURIComponent(runId)}`)));
  }

  async confusion(runId: string): Promise<ConfusionPayload & { n: number }> {
    return asJson(
      await this.fetchFn(this.url(`/v1/metrics/${encodeURIComponent(runId)}/confusion`)),
    );
  }

  async runs(limit = 50): Promise<{ runs: RunInfo[]; total: number }> {
    return asJson(await this.fetchFn(this.url(`/v1/runs?limit=${limit}`)));
  }
}
