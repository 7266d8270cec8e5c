import { beforeEach, describe, expect, it } from "vitest";

import { mountApp } from "../src/main.js";
import { Handlers, initialUiState, render } from "../src/view.js";
import type { Choice, StateView } from "../src/types.js";
import { FakeApi, enumTile, flush, makeView, ratTile } from "./helpers.js";

function noopHandlers(over: Partial<Handlers> = {}): Handlers {
  return {
    onSet: () => {},
    onRetract: () => {},
    onExplain: () => {},
    onSearch: () => {},
    onToggleCategory: () => {},
    onDismissModal: () => {},
    ...over,
  };
}

let root: HTMLElement;
beforeEach(() => {
  document.body.innerHTML = "<div id='app'></div>";
  root = document.getElementById("app")!;
});

function optionValues(symbol: string): string[] {
  const select = root.querySelector<HTMLSelectElement>(`#tile-${symbol}`)!;
  return Array.from(select.options).map((o) => o.value);
}

describe("dropdowns", () => {
  it("offer exactly the surviving candidates, never an eliminated value", () => {
    const full = makeView([
      enumTile("ReqCureMethod", ["cure_room_temp", "cure_heat", "cure_uv", "cure_two_part"]),
    ]);
    render(root, full, initialUiState(), noopHandlers());
    expect(optionValues("ReqCureMethod")).toEqual([
      "",
      "cure_room_temp",
      "cure_heat",
      "cure_uv",
      "cure_two_part",
    ]);

    // after propagation eliminates two values, they disappear from the menu
    const pruned = makeView([enumTile("ReqCureMethod", ["cure_heat", "cure_uv"])]);
    render(root, pruned, initialUiState(), noopHandlers());
    const values = optionValues("ReqCureMethod");
    expect(values).toEqual(["", "cure_heat", "cure_uv"]);
    expect(values).not.toContain("cure_room_temp");
    expect(values).not.toContain("cure_two_part");
  });

  it("select a user-chosen value and report changes through onSet", () => {
    let set: [string, string] | null = null;
    const view = makeView([
      enumTile("ReqForm", ["form_liquid", "form_paste"], {
        value: "form_paste",
        origin: "user",
      }),
    ]);
    render(root, view, initialUiState(), noopHandlers({ onSet: (s, v) => (set = [s, v]) }));
    const select = root.querySelector<HTMLSelectElement>("#tile-ReqForm")!;
    expect(select.value).toBe("form_paste");
    select.value = "form_liquid";
    select.dispatchEvent(new Event("change"));
    expect(set).toEqual(["ReqForm", "form_liquid"]);
  });

  it("disable a propagated (forced) value and offer a why? button", () => {
    const view = makeView([
      enumTile("EffCureMethod", ["cure_heat"], { value: "cure_heat", origin: "propagated" }),
    ]);
    let explained: string | null = null;
    render(root, view, initialUiState(), noopHandlers({ onExplain: (s) => (explained = s) }));
    expect(root.querySelector<HTMLSelectElement>("#tile-EffCureMethod")!.disabled).toBe(true);
    root.querySelector<HTMLButtonElement>(".tile .explain")!.click();
    expect(explained).toBe("EffCureMethod");
  });
});

describe("numeric tiles", () => {
  it("show the feasible hull and commit typed values", () => {
    let set: [string, string] | null = null;
    const view = makeView([ratTile("MaxPrice", "0", "33.1")]);
    render(root, view, initialUiState(), noopHandlers({ onSet: (s, v) => (set = [s, v]) }));
    const input = root.querySelector<HTMLInputElement>("#tile-MaxPrice")!;
    expect(input.placeholder).toBe("0 … 33.1");
    input.value = "25";
    input.dispatchEvent(new Event("change"));
    expect(set).toEqual(["MaxPrice", "25"]);
  });
});

describe("inconsistency modal", () => {
  const inconsistent: StateView = makeView([ratTile("MinOperatingTemperature", "-100", "150")], {
    status: "inconsistent",
    remaining: { count: 0, ids: [] },
    inconsistency: {
      target: "inconsistency",
      assignments: [
        { symbol: "MinOperatingTemperature", value: "20" },
        { symbol: "MaxOperatingTemperature", value: "10" },
      ],
      laws: [
        { id: "op_temp_order", label: "minimum operating temperature may not exceed the maximum" },
      ],
      items: [
        "MinOperatingTemperature = 20",
        "MaxOperatingTemperature = 10",
        "minimum operating temperature may not exceed the maximum",
      ],
    },
  });

  it("lists exactly one item per assignment and per law in the core", () => {
    render(root, inconsistent, initialUiState(), noopHandlers());
    const items = Array.from(root.querySelectorAll(".modal .core-item"));
    const core = inconsistent.inconsistency!;
    expect(items.length).toBe(core.assignments.length + core.laws.length);
    expect(items.map((li) => li.textContent)).toEqual(core.items);
  });

  it("stays hidden for consistent views and after dismissal", () => {
    render(root, makeView([]), initialUiState(), noopHandlers());
    expect(root.querySelector(".modal")).toBeNull();
    const ui = initialUiState();
    ui.modalDismissed = true;
    render(root, inconsistent, ui, noopHandlers());
    expect(root.querySelector(".modal")).toBeNull();
  });
});

describe("choices sidebar (full app)", () => {
  const reduce = (choices: Choice[]) => {
    const chosen = new Map(choices.map((c) => [c.symbol, c.value]));
    return makeView(
      [
        enumTile("ReqForm", chosen.has("ReqForm") ? [chosen.get("ReqForm")!] : ["form_liquid", "form_paste"], {
          value: chosen.get("ReqForm") ?? null,
          origin: chosen.has("ReqForm") ? "user" : null,
        }),
        ratTile("MaxPrice", "0", "100", {
          value: chosen.get("MaxPrice") ?? null,
          origin: chosen.has("MaxPrice") ? "user" : null,
        }),
      ],
      { choices, remaining: { count: 55 - 20 * choices.length, ids: [] } },
    );
  };

  it("reflects user assignments after set and retract", async () => {
    const api = new FakeApi(reduce);
    mountApp(root, api);
    await flush();
    expect(root.querySelector(".choices-empty")).not.toBeNull();

    const select = root.querySelector<HTMLSelectElement>("#tile-ReqForm")!;
    select.value = "form_paste";
    select.dispatchEvent(new Event("change"));
    await flush();
    let entries = Array.from(root.querySelectorAll(".choices-list li[data-symbol]"));
    expect(entries.map((li) => li.getAttribute("data-symbol"))).toEqual(["ReqForm"]);
    expect(entries[0].textContent).toContain("ReqForm = form_paste");

    const input = root.querySelector<HTMLInputElement>("#tile-MaxPrice")!;
    input.value = "85";
    input.dispatchEvent(new Event("change"));
    await flush();
    entries = Array.from(root.querySelectorAll(".choices-list li[data-symbol]"));
    expect(entries.map((li) => li.getAttribute("data-symbol"))).toEqual(["ReqForm", "MaxPrice"]);

    root
      .querySelector<HTMLButtonElement>(".choices-list li[data-symbol='ReqForm'] .retract")!
      .click();
    await flush();
    entries = Array.from(root.querySelectorAll(".choices-list li[data-symbol]"));
    expect(entries.map((li) => li.getAttribute("data-symbol"))).toEqual(["MaxPrice"]);
    expect(api.calls).toContain("retract ReqForm");
  });
});

describe("search and category folding", () => {
  const twoCategories = makeView([
    enumTile("ReqForm", ["form_liquid"], { category: "Performance" }),
    ratTile("MaxCureTime", "0", "96", { category: "Production" }),
  ]);

  it("filters tiles by label and hides empty categories", () => {
    const ui = initialUiState();
    ui.search = "cure";
    render(root, twoCategories, ui, noopHandlers());
    expect(root.querySelector("[data-symbol='MaxCureTime']")).not.toBeNull();
    expect(root.querySelector("[data-symbol='ReqForm']")).toBeNull();
    expect(root.querySelector("details[data-category='Performance']")).toBeNull();
  });

  it("folds and unfolds categories through the ui state", () => {
    const ui = initialUiState();
    ui.folded.add("Production");
    render(root, twoCategories, ui, noopHandlers());
    expect(
      root.querySelector<HTMLDetailsElement>("details[data-category='Performance']")!.open,
    ).toBe(true);
    expect(
      root.querySelector<HTMLDetailsElement>("details[data-category='Production']")!.open,
    ).toBe(false);
  });
});
