// Queue state machine for the review console. Owns polling, backoff,
// submission guarding and keyboard mapping; rendering is somebody else's job
// (the onChange callback receives every state transition).

import type { PipelineApi, QueueItem, SchemaInfo, StatusPayload } from "./api.js";

export type Phase = "connecting" | "waiting" | "reviewing" | "submitting" | "offline";

export interface ControllerState {
  phase: Phase;
  schema: SchemaInfo | null;
  status: StatusPayload | null;
  item: QueueItem | null;
  /** Inline submit error (422 and friends); cleared on advance. */
  error: string | null;
  /** Delay before the next poll; grows while the server is unreachable. */
  pollDelayMs: number;
}

export type Api = Pick<PipelineApi, "getSchema" | "getStatus" | "fetchNext" | "submitLabel">;

export interface ControllerOptions {
  pollMs?: number;
  maxBackoffMs?: number;
}

export class ReviewController {
  readonly state: ControllerState;
  private readonly pollMs: number;
  private readonly maxBackoffMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly api: Api,
    private readonly onChange: (state: ControllerState) => void,
    options: ControllerOptions = {},
  ) {
    this.pollMs = options.pollMs ?? 1000;
    this.maxBackoffMs = options.maxBackoffMs ?? 8000;
    this.state = {
      phase: "connecting",
      schema: null,
      status: null,
      item: null,
      error: null,
      pollDelayMs: this.pollMs,
    };
  }

  start(): Promise<void> {
    return this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** One poll: refresh status and the pending item, then schedule the next. */
  async tick(): Promise<void> {
    if (this.stopped) {
      return;
    }
    if (this.state.phase === "submitting") {
      this.schedule();
      return;
    }
    try {
      if (!this.state.schema) {
        this.state.schema = await this.api.getSchema();
      }
      const [status, item] = await Promise.all([this.api.getStatus(), this.api.fetchNext()]);
      if (this.stopped || this.isSubmitting()) {
        // a submit started while this poll was in flight; its answer wins
        this.schedule();
        return;
      }
      this.state.status = status;
      if (item === null) {
        this.state.item = null;
        this.state.error = null;
        this.state.phase = "waiting";
      } else {
        if (this.state.item?.sample_id !== item.sample_id) {
          this.state.error = null;
        }
        this.state.item = item;
        this.state.phase = "reviewing";
      }
      this.state.pollDelayMs = this.pollMs;
    } catch {
      if (this.stopped || this.isSubmitting()) {
        this.schedule();
        return;
      }
      this.state.phase = "offline";
      this.state.pollDelayMs = Math.min(this.state.pollDelayMs * 2, this.maxBackoffMs);
    }
    this.emit();
    this.schedule();
  }

  /**
   * Post a decision for the rendered item. No-op unless something is actually
   * under review; while a post is in flight further submits are ignored, so a
   * double-click cannot label two samples.
   */
  async submit(label: string): Promise<boolean> {
    const item = this.state.item;
    if (this.state.phase !== "reviewing" || item === null) {
      return false;
    }
    this.state.phase = "submitting";
    this.emit();
    let result;
    try {
      result = await this.api.submitLabel(item.sample_id, label);
    } catch (err) {
      this.state.phase = "reviewing";
      this.state.error = err instanceof Error ? err.message : String(err);
      this.emit();
      return false;
    }
    if (!result.ok) {
      // stay on the same item; the person corrects and resubmits
      this.state.phase = "reviewing";
      this.state.error = result.message;
      this.emit();
      return false;
    }
    this.state.item = null;
    this.state.error = null;
    this.state.phase = "waiting";
    this.emit();
    await this.tick();
    return true;
  }

  /** Digit keys 1..n choose the nth schema label. Returns true when handled. */
  handleKey(key: string): boolean {
    const schema = this.state.schema;
    if (!schema || this.state.phase !== "reviewing") {
      return false;
    }
    if (!/^[1-9]$/.test(key)) {
      return false;
    }
    const index = Number(key) - 1;
    if (index >= schema.labels.length) {
      return false;
    }
    void this.submit(schema.labels[index]);
    return true;
  }

  private isSubmitting(): boolean {
    return this.state.phase === "submitting";
  }

  private schedule(): void {
    if (this.stopped) {
      return;
    }
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.tick();
    }, this.state.pollDelayMs);
  }

  private emit(): void {
    this.onChange(this.state);
  }
}
