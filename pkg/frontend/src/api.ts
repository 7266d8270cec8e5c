import type {
  ExplanationPayload,
  KbSchema,
  OptimizeResult,
  SessionResponse,
  StateView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the consultant HTTP API. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchFn = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.base + path, init);
    const payload = await res.json();
    if (!res.ok) {
      throw new ApiError(
        res.status,
        typeof payload?.code === "string" ? payload.code : "error",
        typeof payload?.message === "string" ? payload.message : res.statusText,
      );
    }
    return payload as T;
  }

  createSession(): Promise<SessionResponse> {
    return this.request("POST", "/sessions");
  }

  getSession(id: string): Promise<SessionResponse> {
    return this.request("GET", `/sessions/${id}`);
  }

  setValue(id: string, symbol: string, value: string): Promise<{ view: StateView }> {
    return this.request("POST", `/sessions/${id}/assignments`, { symbol, value });
  }

  retractValue(id: string, symbol: string): Promise<{ view: StateView }> {
    return this.request("DELETE", `/sessions/${id}/assignments/${encodeURIComponent(symbol)}`);
  }

  explanation(id: string, symbol: string): Promise<ExplanationPayload> {
    return this.request("GET", `/sessions/${id}/explanation?symbol=${encodeURIComponent(symbol)}`);
  }

  inconsistency(id: string): Promise<ExplanationPayload> {
    return this.request("GET", `/sessions/${id}/inconsistency`);
  }

  optimize(
    id: string,
    symbol: string,
    direction: "minimize" | "maximize",
  ): Promise<OptimizeResult> {
    return this.request("POST", `/sessions/${id}/optimize`, { symbol, direction });
  }

  schema(): Promise<KbSchema> {
    return this.request("GET", "/kb/schema");
  }
}
