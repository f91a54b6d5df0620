/** Annotator session state machine: fetch task, submit label, advance on ack. */

import { AnnotationApi, ApiError } from "./api.js";
import type { Label, Task, TaskResponse } from "./types.js";

/** Keyboard bindings for the three validity labels. */
export const KEY_TO_LABEL: Readonly<Record<string, Label>> = {
  "1": "Valid",
  "2": "Invalid",
  "3": "Ambiguous",
};

export const UNDO_KEY = "u";

export type SessionPhase = "idle" | "loading" | "ready" | "submitting" | "done" | "error";

export interface SessionSnapshot {
  phase: SessionPhase;
  task: Task | null;
  error: string | null;
  submitted: number;
  canUndo: boolean;
  /** True while the current task is being shown again after an undo. */
  resubmitting: boolean;
  totalItems: number;
}

function toTask(response: TaskResponse): Task {
  return {
    tripleId: response.triple_id ?? "",
    statement: response.statement ?? "",
    position: response.position ?? 0,
    total: response.total,
  };
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.kind}: ${err.detail}`;
  if (err instanceof Error) return `service unreachable: ${err.message}`;
  return String(err);
}

export class AnnotationSession {
  private phase: SessionPhase = "idle";
  private task: Task | null = null;
  private previous: Task | null = null;
  private pending: { task: Task; label: Label } | null = null;
  private error: string | null = null;
  private resubmitting = false;
  private totalItems = 0;
  private submitted = 0;
  private listeners: Array<(snapshot: SessionSnapshot) => void> = [];

  constructor(
    private readonly api: AnnotationApi,
    readonly annotatorId: string,
  ) {}

  onChange(listener: (snapshot: SessionSnapshot) => void): void {
    this.listeners.push(listener);
  }

  snapshot(): SessionSnapshot {
    return {
      phase: this.phase,
      task: this.task,
      error: this.error,
      submitted: this.submitted,
      canUndo: this.previous !== null && this.phase !== "submitting",
      resubmitting: this.resubmitting,
      totalItems: this.totalItems,
    };
  }

  private emit(): void {
    const snapshot = this.snapshot();
    for (const listener of this.listeners) listener(snapshot);
  }

  /** Fetch the first open task. Resuming a refreshed page lands on the server's
   * cursor without resubmitting anything. */
  async start(): Promise<void> {
    this.phase = "loading";
    this.emit();
    await this.advance();
  }

  private async advance(): Promise<void> {
    try {
      const next = await this.api.nextTask(this.annotatorId);
      this.totalItems = next.total;
      if (next.done) {
        this.task = null;
        this.phase = "done";
      } else {
        this.task = toTask(next);
        this.phase = "ready";
      }
      this.error = null;
    } catch (err) {
      this.phase = "error";
      this.error = describeError(err);
    }
    this.emit();
  }

  /** Submit a label for the current task. Advances only after the server acks;
   * on failure the task stays put and retry() resends the same submission. */
  async label(label: Label): Promise<void> {
    if (this.phase !== "ready" || this.task === null) return;
    const task = this.task;
    this.phase = "submitting";
    this.emit();
    try {
      await this.api.submitLabel(this.annotatorId, task.tripleId, label);
    } catch (err) {
      this.phase = "error";
      this.error = describeError(err);
      this.pending = { task, label };
      this.emit();
      return;
    }
    this.submitted += 1;
    this.previous = task;
    this.resubmitting = false;
    await this.advance();
  }

  /** Bring the previously submitted task back; the next label keypress
   * resubmits it and the server keeps the last write. */
  undo(): void {
    if (this.previous === null) return;
    if (this.phase !== "ready" && this.phase !== "done") return;
    this.task = this.previous;
    this.previous = null;
    this.resubmitting = true;
    this.phase = "ready";
    this.emit();
  }

  /** Resend a failed submission, or re-fetch if the failure was on fetch. */
  async retry(): Promise<void> {
    if (this.phase !== "error") return;
    if (this.pending !== null) {
      const { task, label } = this.pending;
      this.pending = null;
      this.task = task;
      this.phase = "ready";
      this.emit();
      await this.label(label);
    } else {
      this.phase = "loading";
      this.emit();
      await this.advance();
    }
  }

  async handleKey(key: string): Promise<void> {
    const label = KEY_TO_LABEL[key];
    if (label !== undefined) {
      await this.label(label);
    } else if (key === UNDO_KEY) {
      this.undo();
    }
  }
}
