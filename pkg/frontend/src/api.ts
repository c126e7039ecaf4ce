// Typed client for the annotation pipeline's HTTP API. All requests go to the
// same origin that served the page unless a base URL is given (tests, e2e).

export interface Vote {
  backend_id: string;
  label: string;
  confidence: number;
}

export interface QueueItem {
  sample_id: string;
  text: string;
  votes: Vote[];
  uncertainty: number;
  suggestion: string | null;
}

export interface SchemaInfo {
  task_name: string;
  labels: string[];
}

export interface Counters {
  direct: number;
  reviewed_llm: number;
  reviewed_human: number;
  unresolved: number;
  ties: number;
  backend_failures: number;
}

export interface CycleBackend {
  backend_id: string;
  version_before: number;
  version_after: number;
  train_loss_before: number;
  train_loss_after: number;
}

export interface CycleInfo {
  cycle_index: number;
  snapshot_size: number;
  backends: CycleBackend[];
  wall_time_s: number;
}

export interface LedgerCell {
  input_tokens: number;
  output_tokens: number;
  calls: number;
}

export interface StatusPayload {
  run_id: string;
  cursor: number;
  finished: boolean;
  counters: Counters;
  scheduler_state: string;
  pool_size: number;
  pool_threshold: number;
  cycles: CycleInfo[];
  backend_versions: Record<string, number>;
  ledger: Record<string, LedgerCell>;
}

export type SubmitResult =
  | { ok: true; sampleId: string; label: string }
  | { ok: false; status: number; message: string; labels?: string[] };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class PipelineApi {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async getStatus(): Promise<StatusPayload> {
    return this.getJson<StatusPayload>("/api/status");
  }

  async getSchema(): Promise<SchemaInfo> {
    return this.getJson<SchemaInfo>("/api/schema");
  }

  /** Next sample awaiting a decision, or null when the queue is empty (204). */
  async fetchNext(): Promise<QueueItem | null> {
    const res = await this.fetchFn(`${this.baseUrl}/api/review/next`);
    if (res.status === 204) {
      return null;
    }
    if (!res.ok) {
      throw new Error(`GET /api/review/next failed with ${res.status}`);
    }
    return (await res.json()) as QueueItem;
  }

  /**
   * Post a human decision. Rejections (400/422/404) come back as a value, not
   * an exception, so the caller can show them inline; only transport failures
   * throw.
   */
  async submitLabel(sampleId: string, label: string): Promise<SubmitResult> {
    const res = await this.fetchFn(
      `${this.baseUrl}/api/review/${encodeURIComponent(sampleId)}`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ label }),
      },
    );
    const body = await res.json().catch(() => ({}));
    if (res.ok) {
      return { ok: true, sampleId: body.sample_id ?? sampleId, label: body.label ?? label };
    }
    return {
      ok: false,
      status: res.status,
      message: typeof body.error === "string" ? body.error : `server returned ${res.status}`,
      labels: Array.isArray(body.labels) ? body.labels : undefined,
    };
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!res.ok) {
      throw new Error(`GET ${path} failed with ${res.status}`);
    }
    return (await res.json()) as T;
  }
}
