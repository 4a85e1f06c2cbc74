import {
  NetworkError,
  NextResponse,
  Rate,
  RatingAck,
  Rubric,
  ServiceError,
  SessionState,
  Summary,
} from "./types.js";

export interface Api {
  session(sessionId: string): Promise<SessionState>;
  next(sessionId: string): Promise<NextResponse>;
  rate(sessionId: string, itemId: string, rate: Rate): Promise<RatingAck>;
  summary(): Promise<Summary>;
  rubric(): Promise<Rubric>;
}

type FetchLike = typeof fetch;

async function request<T>(fetchFn: FetchLike, url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetchFn(url, init);
  } catch (cause) {
    throw new NetworkError(cause);
  }
  if (!response.ok) {
    let code = `HTTP ${response.status}`;
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { error?: string; detail?: string };
      if (body.error) code = body.error;
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the HTTP status
    }
    throw new ServiceError(code, response.status, detail);
  }
  return (await response.json()) as T;
}

/** Typed client for the annotation service; the only network surface the UI uses. */
export function createApi(baseUrl = "", fetchFn: FetchLike = fetch): Api {
  const url = (path: string) => `${baseUrl}${path}`;
  return {
    session: (sessionId) => request<SessionState>(fetchFn, url(`/sessions/${sessionId}`)),
    next: (sessionId) => request<NextResponse>(fetchFn, url(`/sessions/${sessionId}/next`)),
    rate: (sessionId, itemId, rate) =>
      request<RatingAck>(fetchFn, url(`/sessions/${sessionId}/ratings`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ item_id: itemId, rate }),
      }),
    summary: () => request<Summary>(fetchFn, url("/summary")),
    rubric: () => request<Rubric>(fetchFn, url("/rubric")),
  };
}
