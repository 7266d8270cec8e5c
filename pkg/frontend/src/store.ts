import { ApiError } from "./api.js";
import type {
  ExplanationPayload,
  OptimizeResult,
  SessionResponse,
  StateView,
} from "./types.js";

/** The slice of the HTTP client the store depends on; `ApiClient`
 * implements it, tests substitute a scripted fake. */
export interface Api {
  createSession(): Promise<SessionResponse>;
  setValue(id: string, symbol: string, value: string): Promise<{ view: StateView }>;
  retractValue(id: string, symbol: string): Promise<{ view: StateView }>;
  explanation(id: string, symbol: string): Promise<ExplanationPayload>;
  optimize(
    id: string,
    symbol: string,
    direction: "minimize" | "maximize",
  ): Promise<OptimizeResult>;
}

export interface StoreState {
  sessionId: string | null;
  view: StateView | null;
  /** transient, user-dismissable error banner text */
  error: string | null;
  busy: boolean;
}

type Listener = (state: StoreState) => void;

/** Session state container: every mutation round-trips through the API and
 * replaces the whole view, so the UI can never drift from the engine. */
export class SessionStore {
  private state: StoreState = { sessionId: null, view: null, error: null, busy: false };
  private listeners: Listener[] = [];

  constructor(private readonly api: Api) {}

  getState(): StoreState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private update(patch: Partial<StoreState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  async init(): Promise<void> {
    this.update({ busy: true });
    try {
      const { id, view } = await this.api.createSession();
      this.update({ sessionId: id, view, error: null, busy: false });
    } catch (e) {
      this.update({ error: describe(e), busy: false });
    }
  }

  async setValue(symbol: string, value: string): Promise<void> {
    if (!this.state.sessionId) return;
    this.update({ busy: true });
    try {
      const { view } = await this.api.setValue(this.state.sessionId, symbol, value);
      this.update({ view, error: null, busy: false });
    } catch (e) {
      this.update({ error: describe(e), busy: false });
    }
  }

  async retractValue(symbol: string): Promise<void> {
    if (!this.state.sessionId) return;
    this.update({ busy: true });
    try {
      const { view } = await this.api.retractValue(this.state.sessionId, symbol);
      this.update({ view, error: null, busy: false });
    } catch (e) {
      this.update({ error: describe(e), busy: false });
    }
  }

  async explain(symbol: string): Promise<ExplanationPayload | null> {
    if (!this.state.sessionId) return null;
    try {
      return await this.api.explanation(this.state.sessionId, symbol);
    } catch (e) {
      this.update({ error: describe(e) });
      return null;
    }
  }

  async optimize(
    symbol: string,
    direction: "minimize" | "maximize",
  ): Promise<OptimizeResult | null> {
    if (!this.state.sessionId) return null;
    try {
      return await this.api.optimize(this.state.sessionId, symbol, direction);
    } catch (e) {
      this.update({ error: describe(e) });
      return null;
    }
  }

  dismissError(): void {
    this.update({ error: null });
  }
}

function describe(e: unknown): string {
  if (e instanceof ApiError) return e.message;
  return e instanceof Error ? e.message : String(e);
}
