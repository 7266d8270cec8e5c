/** Animate an integer counter from its displayed value to `target`.
 * Steps through intermediate values on a timer so the remaining-adhesives
 * figure visibly counts down; jumps straight to the target when the
 * distance is trivial. */
export function animateCount(el: HTMLElement, target: number, durationMs = 300): void {
  const from = parseInt(el.textContent ?? "", 10);
  if (!Number.isFinite(from) || from === target || Math.abs(from - target) <= 1) {
    el.textContent = String(target);
    return;
  }
  const steps = Math.min(Math.abs(from - target), 20);
  const interval = Math.max(Math.floor(durationMs / steps), 1);
  let i = 0;
  const timer = setInterval(() => {
    i += 1;
    if (i >= steps) {
      clearInterval(timer);
      el.textContent = String(target);
      return;
    }
    el.textContent = String(Math.round(from + ((target - from) * i) / steps));
  }, interval);
}
