/** Wire types for the annotation service endpoints. */

export type Label = "Valid" | "Invalid" | "Ambiguous";

export const LABELS: readonly Label[] = ["Valid", "Invalid", "Ambiguous"];

/** GET /api/tasks/next — either the next unlabeled item or a done marker. */
export interface TaskResponse {
  done: boolean;
  triple_id?: string;
  statement?: string;
  position?: number;
  total: number;
}

/** Client-side view of an open task; position is 1-based. */
export interface Task {
  tripleId: string;
  statement: string;
  position: number;
  total: number;
}

/** POST /api/labels */
export interface SubmitResponse {
  ok: boolean;
  overwritten: boolean;
}

/** GET /api/progress */
export interface ProgressResponse {
  total_items: number;
  labeled: Record<string, number>;
  complete: string[];
}

/** GET /api/agreement?a=..&b=.. — rendered verbatim, never recomputed here. */
export interface AgreementResponse {
  n_items: number;
  observed_agreement: number;
  expected_agreement: number;
  kappa: number;
  confusion: number[][];
  labels: string[];
}

/** One gold record from an adjudicated export. */
export interface GoldRecord {
  id: string;
  source: string;
  split: string;
  variant: string;
  parent_id: string | null;
  relation: string;
  head: string;
  tail: string;
  head_negated: boolean;
  tail_negated: boolean;
  label: Label;
  label_source: string;
}

/** GET /api/benchmark/export?adjudicate=POLICY */
export interface AdjudicationResponse {
  policy: string;
  gold: GoldRecord[];
  disagreements: string[];
  pending: string[];
}

/** Error envelope the service attaches to non-2xx responses. */
export interface ErrorBody {
  error: string;
  detail: string;
}
