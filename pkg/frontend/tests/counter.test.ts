import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { animateCount } from "../src/counter.js";

describe("animateCount", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("steps through intermediate values before settling on the target", () => {
    const el = document.createElement("span");
    el.textContent = "55";
    animateCount(el, 14);
    vi.advanceTimersByTime(150);
    const midway = parseInt(el.textContent!, 10);
    expect(midway).toBeLessThan(55);
    expect(midway).toBeGreaterThan(14);
    vi.runAllTimers();
    expect(el.textContent).toBe("14");
  });

  it("jumps immediately when there is nothing to animate", () => {
    const el = document.createElement("span");
    el.textContent = "";
    animateCount(el, 42);
    expect(el.textContent).toBe("42");
    animateCount(el, 41); // distance 1: no animation needed
    expect(el.textContent).toBe("41");
  });
});
