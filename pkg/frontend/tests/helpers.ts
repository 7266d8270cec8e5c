import type { Api } from "../src/store.js";
import type {
  Choice,
  ExplanationPayload,
  SessionResponse,
  StateView,
  Tile,
} from "../src/types.js";

export function enumTile(symbol: string, candidates: string[], over: Partial<Tile> = {}): Tile {
  return {
    symbol,
    label: symbol,
    category: "Performance",
    kind: "enum",
    type: "T" + symbol,
    value: null,
    origin: null,
    candidates,
    bounds: null,
    relevant: true,
    ...over,
  };
}

export function ratTile(symbol: string, lo: string, hi: string, over: Partial<Tile> = {}): Tile {
  return {
    symbol,
    label: symbol,
    category: "Performance",
    kind: "rat",
    type: "T" + symbol,
    value: null,
    origin: null,
    candidates: null,
    bounds: { lo, hi },
    relevant: true,
    range: { lo, hi },
    ...over,
  };
}

export function makeView(tiles: Tile[], over: Partial<StateView> = {}): StateView {
  return {
    status: "consistent",
    tiles,
    choices: [],
    remaining: { count: 55, ids: [] },
    inconsistency: null,
    ...over,
  };
}

/** Scripted API double: a session whose `setValue`/`retractValue` recompute
 * the view with a caller-provided reducer, mimicking the pure service. */
export class FakeApi implements Api {
  calls: string[] = [];
  private choices: Choice[] = [];

  constructor(
    private readonly reduce: (choices: Choice[]) => StateView,
    private explanations: Record<string, ExplanationPayload> = {},
  ) {}

  private view(): StateView {
    return this.reduce([...this.choices]);
  }

  async createSession(): Promise<SessionResponse> {
    this.calls.push("create");
    return { id: "s1", view: this.view() };
  }

  async setValue(_id: string, symbol: string, value: string): Promise<{ view: StateView }> {
    this.calls.push(`set ${symbol}=${value}`);
    this.choices = this.choices.filter((c) => c.symbol !== symbol).concat({ symbol, value });
    return { view: this.view() };
  }

  async retractValue(_id: string, symbol: string): Promise<{ view: StateView }> {
    this.calls.push(`retract ${symbol}`);
    this.choices = this.choices.filter((c) => c.symbol !== symbol);
    return { view: this.view() };
  }

  async explanation(_id: string, symbol: string): Promise<ExplanationPayload> {
    this.calls.push(`explain ${symbol}`);
    const payload = this.explanations[symbol];
    if (!payload) throw new Error(`no scripted explanation for ${symbol}`);
    return payload;
  }

  async optimize(): Promise<never> {
    throw new Error("not scripted");
  }
}

/** Drain the microtask queue so store updates settle. */
export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
