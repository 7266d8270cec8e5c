import { ApiClient } from "./api.js";
import { Api, SessionStore } from "./store.js";
import { Handlers, UiState, initialUiState, render } from "./view.js";

/** Wire the store and renderer to a DOM element and start a session. */
export function mountApp(root: HTMLElement, api: Api = new ApiClient()): SessionStore {
  const store = new SessionStore(api);
  const ui: UiState = initialUiState();

  const handlers: Handlers = {
    onSet: (symbol, value) => void store.setValue(symbol, value),
    onRetract: (symbol) => void store.retractValue(symbol),
    onExplain: (symbol) =>
      void store.explain(symbol).then((payload) => {
        ui.explanation = payload;
        redraw();
      }),
    onSearch: (text) => {
      ui.search = text;
      redraw();
      root.querySelector<HTMLInputElement>("input.search")?.focus();
    },
    onToggleCategory: (category) => {
      if (ui.folded.has(category)) ui.folded.delete(category);
      else ui.folded.add(category);
      redraw();
    },
    onDismissModal: () => {
      ui.modalDismissed = true;
      ui.explanation = null;
      redraw();
    },
  };

  const redraw = () => {
    const { view, error } = store.getState();
    render(root, view, ui, handlers, error);
  };

  store.subscribe(() => {
    // a fresh view supersedes any open modal state
    ui.modalDismissed = false;
    ui.explanation = null;
    redraw();
  });

  redraw();
  void store.init();
  return store;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) mountApp(root);
}
