/** Thin fetch client for the annotation service. */

import type {
  AdjudicationResponse,
  AgreementResponse,
  Label,
  ProgressResponse,
  SubmitResponse,
  TaskResponse,
} from "./types.js";

/** Non-2xx response, carrying the service's error envelope when present. */
export class ApiError extends Error {
  readonly status: number;
  readonly kind: string;
  readonly detail: string;

  constructor(status: number, kind: string, detail: string) {
    super(`${kind}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.kind = kind;
    this.detail = detail;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let kind = `HTTP ${response.status}`;
    let detail = response.statusText;
    try {
      const body = (await response.json()) as Record<string, unknown>;
      if (typeof body.error === "string") {
        kind = body.error;
        detail = String(body.detail ?? "");
      } else if (body.detail !== undefined) {
        // FastAPI's own 422 envelope when the JSON body fails validation
        detail = JSON.stringify(body.detail);
      }
    } catch {
      // non-JSON body, keep the status text
    }
    throw new ApiError(response.status, kind, detail);
  }
  return (await response.json()) as T;
}

export class AnnotationApi {
  constructor(readonly base: string = "") {}

  nextTask(annotator: string): Promise<TaskResponse> {
    return request(`${this.base}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`);
  }

  submitLabel(annotatorId: string, tripleId: string, label: Label): Promise<SubmitResponse> {
    return request(`${this.base}/api/labels`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId, triple_id: tripleId, label }),
    });
  }

  progress(): Promise<ProgressResponse> {
    return request(`${this.base}/api/progress`);
  }

  agreement(a: string, b: string): Promise<AgreementResponse> {
    const qs = `a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`;
    return request(`${this.base}/api/agreement?${qs}`);
  }

  adjudicate(policy: string): Promise<AdjudicationResponse> {
    return request(`${this.base}/api/benchmark/export?adjudicate=${encodeURIComponent(policy)}`);
  }
}
