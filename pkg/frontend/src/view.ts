import { animateCount } from "./counter.js";
import type { ExplanationPayload, StateView, Tile } from "./types.js";

export interface Handlers {
  onSet(symbol: string, value: string): void;
  onRetract(symbol: string): void;
  onExplain(symbol: string): void;
  onSearch(text: string): void;
  onToggleCategory(category: string): void;
  onDismissModal(): void;
}

export interface UiState {
  search: string;
  /** categories currently folded shut */
  folded: Set<string>;
  /** user closed the inconsistency modal for the current view */
  modalDismissed: boolean;
  /** value-explanation payload to show, if any */
  explanation: ExplanationPayload | null;
}

export function initialUiState(): UiState {
  return { search: "", folded: new Set(), modalDismissed: false, explanation: null };
}

const NO_PREFERENCE = "";

/** Full re-render of the application into `root`.  The view is the single
 * source of truth: candidates lists arrive already pruned by propagation,
 * so a dropdown can only ever offer values that keep the state feasible. */
export function render(
  root: HTMLElement,
  view: StateView | null,
  ui: UiState,
  handlers: Handlers,
  error: string | null = null,
): void {
  const previousCount = root.querySelector<HTMLElement>(".remaining-count")?.textContent ?? null;
  root.textContent = "";
  if (!view) {
    root.appendChild(el("p", "loading", "Loading session…"));
    return;
  }

  root.appendChild(renderHeader(view, ui, handlers, previousCount));
  if (error) {
    const banner = el("div", "error-banner", error);
    banner.setAttribute("role", "alert");
    root.appendChild(banner);
  }

  const layout = el("div", "layout");
  layout.appendChild(renderSidebar(view, handlers));
  layout.appendChild(renderTiles(view, ui, handlers));
  root.appendChild(layout);

  if (view.status === "inconsistent" && view.inconsistency && !ui.modalDismissed) {
    root.appendChild(renderCoreModal("Conflicting choices", view.inconsistency, handlers));
  } else if (ui.explanation) {
    root.appendChild(renderCoreModal("Why this value", ui.explanation, handlers));
  }
}

function renderHeader(
  view: StateView,
  ui: UiState,
  handlers: Handlers,
  previousCount: string | null,
): HTMLElement {
  const header = el("header", "header");
  header.appendChild(el("h1", "title", "Adhesive selector"));

  const counter = el("div", "remaining");
  const num = el("span", "remaining-count", previousCount ?? String(view.remaining.count));
  counter.appendChild(num);
  counter.appendChild(el("span", "remaining-label", " adhesives remaining"));
  header.appendChild(counter);
  animateCount(num, view.remaining.count);

  const search = document.createElement("input");
  search.type = "search";
  search.className = "search";
  search.placeholder = "Filter parameters…";
  search.value = ui.search;
  search.addEventListener("input", () => handlers.onSearch(search.value));
  header.appendChild(search);
  return header;
}

function renderSidebar(view: StateView, handlers: Handlers): HTMLElement {
  const aside = el("aside", "choices");
  aside.appendChild(el("h2", "choices-title", "Your choices"));
  const ul = document.createElement("ul");
  ul.className = "choices-list";
  const labels = new Map(view.tiles.map((t) => [t.symbol, t.label]));
  for (const choice of view.choices) {
    const li = document.createElement("li");
    li.dataset.symbol = choice.symbol;
    li.appendChild(
      el("span", "choice-text", `${labels.get(choice.symbol) ?? choice.symbol} = ${choice.value}`),
    );
    const btn = document.createElement("button");
    btn.className = "retract";
    btn.textContent = "×";
    btn.title = "Retract this choice";
    btn.addEventListener("click", () => handlers.onRetract(choice.symbol));
    li.appendChild(btn);
    ul.appendChild(li);
  }
  if (view.choices.length === 0) {
    ul.appendChild(el("li", "choices-empty", "No choices yet"));
  }
  aside.appendChild(ul);
  return aside;
}

function renderTiles(view: StateView, ui: UiState, handlers: Handlers): HTMLElement {
  const main = el("main", "tiles");
  const needle = ui.search.trim().toLowerCase();
  const categories: string[] = [];
  for (const t of view.tiles) {
    if (!categories.includes(t.category)) categories.push(t.category);
  }
  for (const category of categories) {
    const tiles = view.tiles.filter(
      (t) =>
        t.category === category &&
        (needle === "" ||
          t.label.toLowerCase().includes(needle) ||
          t.symbol.toLowerCase().includes(needle)),
    );
    if (tiles.length === 0) continue;
    const details = document.createElement("details");
    details.className = "category";
    details.dataset.category = category;
    details.open = !ui.folded.has(category);
    const summary = document.createElement("summary");
    summary.textContent = category;
    summary.addEventListener("click", (ev) => {
      ev.preventDefault();
      handlers.onToggleCategory(category);
    });
    details.appendChild(summary);
    for (const tile of tiles) details.appendChild(renderTile(tile, handlers));
    main.appendChild(details);
  }
  return main;
}

function renderTile(tile: Tile, handlers: Handlers): HTMLElement {
  const div = el("div", tile.relevant ? "tile" : "tile irrelevant");
  div.dataset.symbol = tile.symbol;
  const label = document.createElement("label");
  label.className = "tile-label";
  label.textContent = tile.label;
  label.htmlFor = `tile-${tile.symbol}`;
  div.appendChild(label);

  if (tile.kind === "enum") {
    div.appendChild(renderEnumInput(tile, handlers));
  } else {
    div.appendChild(renderNumericInput(tile, handlers));
  }

  if (tile.origin === "propagated") {
    const why = document.createElement("button");
    why.className = "explain";
    why.textContent = "why?";
    why.addEventListener("click", () => handlers.onExplain(tile.symbol));
    div.appendChild(why);
  }
  return div;
}

function renderEnumInput(tile: Tile, handlers: Handlers): HTMLElement {
  const select = document.createElement("select");
  select.className = "tile-input";
  select.id = `tile-${tile.symbol}`;
  const blank = document.createElement("option");
  blank.value = NO_PREFERENCE;
  blank.textContent = "(no preference)";
  select.appendChild(blank);
  // exactly the surviving candidates — an eliminated value is never offered
  for (const value of tile.candidates ?? []) {
    const opt = document.createElement("option");
    opt.value = value;
    opt.textContent = value;
    select.appendChild(opt);
  }
  if (tile.value !== null) select.value = tile.value;
  select.disabled = tile.origin === "propagated" && tile.value !== null;
  select.addEventListener("change", () => {
    if (select.value === NO_PREFERENCE) handlers.onRetract(tile.symbol);
    else handlers.onSet(tile.symbol, select.value);
  });
  return select;
}

function renderNumericInput(tile: Tile, handlers: Handlers): HTMLElement {
  const wrap = el("span", "numeric");
  const input = document.createElement("input");
  input.type = "text";
  input.className = "tile-input";
  input.id = `tile-${tile.symbol}`;
  if (tile.value !== null && tile.origin === "user") input.value = tile.value;
  if (tile.bounds) input.placeholder = `${tile.bounds.lo} … ${tile.bounds.hi}`;
  input.addEventListener("change", () => {
    const text = input.value.trim();
    if (text === "") handlers.onRetract(tile.symbol);
    else handlers.onSet(tile.symbol, text);
  });
  wrap.appendChild(input);
  if (tile.bounds && tile.value === null) {
    wrap.appendChild(el("span", "bounds", ` feasible: ${tile.bounds.lo} to ${tile.bounds.hi}`));
  }
  if (tile.value !== null && tile.origin === "propagated") {
    wrap.appendChild(el("span", "forced-value", ` = ${tile.value}`));
  }
  return wrap;
}

/** Modal listing a minimal core: exactly one list item per assignment in
 * the core, then one per violated law. */
function renderCoreModal(
  title: string,
  payload: ExplanationPayload,
  handlers: Handlers,
): HTMLElement {
  const overlay = el("div", "modal-overlay");
  const modal = el("div", "modal");
  modal.setAttribute("role", "dialog");
  modal.appendChild(el("h2", "modal-title", title));
  const ul = document.createElement("ul");
  ul.className = "core-items";
  for (const item of payload.items) {
    ul.appendChild(el("li", "core-item", item));
  }
  modal.appendChild(ul);
  const close = document.createElement("button");
  close.className = "modal-close";
  close.textContent = "Close";
  close.addEventListener("click", () => handlers.onDismissModal());
  modal.appendChild(close);
  overlay.appendChild(modal);
  return overlay;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}
