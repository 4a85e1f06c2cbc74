export type Rate = "A" | "B" | "C" | "D";

export const RATES: readonly Rate[] = ["A", "B", "C", "D"];

export interface EvalItem {
  item_id: string;
  source: string;
  rationale: string;
  transferred: string;
  task_label: string;
  model_label: string;
}

export interface NextResponse {
  done: boolean;
  item: EvalItem | null;
  rated: number;
  total: number;
}

export interface SessionState {
  session_id: string;
  annotator_id: string;
  rubric_version: string;
  complete: boolean;
  rated: number;
  total: number;
}

export interface RatingAck {
  ok: boolean;
  rated: number;
  total: number;
}

export interface RubricLevel {
  label: string;
  criteria: string;
}

export interface Rubric {
  version: string;
  levels: RubricLevel[];
}

export type RateCounts = Record<Rate, number>;

export interface GroupSummary {
  model_label: string;
  task_label: string;
  counts: RateCounts;
  total: number;
  acceptable_rate: number;
}

export interface Summary {
  counts: RateCounts;
  total: number;
  acceptable_rate: number;
  groups: GroupSummary[];
}

/** A service-reported failure, surfaced verbatim in the UI. */
export class ServiceError extends Error {
  constructor(
    public readonly code: string,
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }
}

/** Transport-level failure: the service was unreachable. */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "NetworkError";
  }
}
