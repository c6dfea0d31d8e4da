// REST client for the recommendation service. This is the only module
// that talks to the network; everything else works on plain values.

export interface RecommendationEntry {
  token: string;
  members: string[];
  score: number;
  pSuc: number;
  sim: number;
  rank: number;
}

export interface SessionToken {
  token: string;
  members: string[];
  known: boolean;
}

export interface SessionView {
  id: string;
  selected: SessionToken[];
  createdAt: number;
  updatedAt: number;
}

export interface CatalogEntry {
  token: string;
  members: string[];
  frequency: number;
}

export interface HealthView {
  status: string;
  vocabSize?: number;
  dim?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "error" in body
        ? String((body as { error: unknown }).error)
        : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class ServiceApi {
  constructor(private baseUrl: string) {}

  health(): Promise<HealthView> {
    return fetch(`${this.baseUrl}/health`).then((r) => asJson<HealthView>(r));
  }

  catalog(): Promise<CatalogEntry[]> {
    return fetch(`${this.baseUrl}/catalog`).then((r) => asJson<CatalogEntry[]>(r));
  }

  createSession(): Promise<{ id: string }> {
    return fetch(`${this.baseUrl}/sessions`, { method: "POST" }).then((r) =>
      asJson<{ id: string }>(r),
    );
  }

  getSession(sessionId: string): Promise<SessionView> {
    return fetch(`${this.baseUrl}/sessions/${sessionId}`).then((r) =>
      asJson<SessionView>(r),
    );
  }

  // Body is sent without a Content-Type header on purpose: that keeps the
  // request CORS-simple, and the server parses the JSON regardless.
  select(sessionId: string, token: string): Promise<SessionView> {
    return fetch(`${this.baseUrl}/sessions/${sessionId}/select`, {
      method: "POST",
      body: JSON.stringify({ token }),
    }).then((r) => asJson<SessionView>(r));
  }

  recommend(sessionId: string, k: number): Promise<RecommendationEntry[]> {
    return fetch(`${this.baseUrl}/sessions/${sessionId}/recommend?k=${k}`).then(
      (r) => asJson<RecommendationEntry[]>(r),
    );
  }
}
