/** Wire types mirroring the consultant service's StateView JSON. */

export type Origin = "user" | "propagated";

export interface Bounds {
  lo: string;
  hi: string;
}

export interface Tile {
  symbol: string;
  label: string;
  category: string;
  kind: "enum" | "int" | "rat";
  type: string;
  /** current value as sent on the wire, or null when undetermined */
  value: string | null;
  origin: Origin | null;
  /** surviving values for enumerated tiles; null for numeric tiles */
  candidates: string[] | null;
  /** feasible hull for numeric tiles; null for enumerated tiles */
  bounds: Bounds | null;
  relevant: boolean;
  /** declared range, present on numeric tiles */
  range?: Bounds;
}

export interface Choice {
  symbol: string;
  value: string;
}

export interface ExplanationPayload {
  /** "inconsistency", or the explained assignment */
  target: string | Choice;
  assignments: Choice[];
  laws: { id: string; label: string }[];
  /** display-ready core: one entry per assignment, then one per law */
  items: string[];
}

export interface StateView {
  status: "consistent" | "inconsistent";
  tiles: Tile[];
  choices: Choice[];
  remaining: { count: number; ids: string[] };
  inconsistency: ExplanationPayload | null;
}

export interface SessionResponse {
  id: string;
  view: StateView;
}

export interface OptimizeResult {
  symbol: string;
  direction: "minimize" | "maximize";
  value: string;
  adhesive?: string;
}

export interface KbSchema {
  tiles: Tile[];
  criteria: { symbol: string; label: string }[];
  categories: string[];
}
