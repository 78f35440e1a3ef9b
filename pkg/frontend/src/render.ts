// DOM rendering: the document reflects the view model exactly.
//
// Rendering is deterministic in the view model alone (no wall-clock
// reads), which is what makes reconnect-and-rerender reproduce the view
// and lets tests compare consoles by DOM equality.

import type { ConsoleViewModel } from "./viewmodel.js";
import { displayName, progressFraction, stalenessFraction } from "./viewmodel.js";

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBanner(vm: ConsoleViewModel, root: HTMLElement): void {
  root.textContent = "";
  const banner = el("div", `banner banner-${vm.connection}`);
  if (vm.connection === "open") {
    banner.textContent = vm.meta ? `live: session ${vm.meta.session}` : "live";
  } else if (vm.connection === "connecting") {
    banner.textContent = "connecting…";
  } else {
    banner.textContent = "disconnected — retrying…";
  }
  if (vm.lastError) {
    banner.appendChild(el("span", "banner-error", ` last error: ${vm.lastError}`));
  }
  root.appendChild(banner);
}

export function renderBoard(vm: ConsoleViewModel, root: HTMLElement): void {
  root.textContent = "";
  if (!vm.snapshot) return;
  const nUses = vm.meta?.policy.n_uses ?? 2;
  const tDisplay = vm.meta?.policy.t_display_ms ?? 120_000;
  const grid = el("div", "card-grid");
  for (const entry of vm.snapshot.board) {
    // Board render order is slot order from the snapshot.
    const card = el("div", "card");
    card.dataset.slot = String(entry.slot);
    card.dataset.object = entry.object;
    card.dataset.candidate = String(entry.candidate_index);

    const art = el("div", "card-art", displayName(vm, entry.object));
    art.setAttribute("role", "img");
    card.appendChild(art);

    card.appendChild(el("div", "card-phrase", entry.phrase));

    const pips = el("div", "card-pips");
    for (let i = 0; i < nUses; i++) {
      pips.appendChild(el("span", i < entry.uses ? "pip pip-filled" : "pip"));
    }
    pips.setAttribute("aria-label", `used ${entry.uses} of ${nUses}`);
    card.appendChild(pips);

    const fraction = stalenessFraction(entry.shown_since, vm.snapshot.clock_ms, tDisplay);
    const percent = Math.round(fraction * 100);
    const ring = el("div", "card-ring");
    ring.dataset.percent = String(percent);
    ring.style.setProperty("--staleness", `${percent}%`);
    ring.setAttribute("aria-label", `on display ${percent}% of timeout`);
    card.appendChild(ring);

    const speak = el("button", "card-speak", "▶") as HTMLButtonElement;
    speak.title = "read aloud (placeholder)";
    speak.type = "button";
    card.appendChild(speak);

    grid.appendChild(card);
  }
  root.appendChild(grid);
}

export function renderDistribution(vm: ConsoleViewModel, root: HTMLElement): void {
  root.textContent = "";
  if (!vm.snapshot) return;
  const list = el("div", "bars");
  for (const entry of vm.snapshot.distribution) {
    const row = el("div", "bar-row");
    row.dataset.object = entry.object;
    row.appendChild(el("span", "bar-label", displayName(vm, entry.object)));
    const track = el("div", "bar-track");
    const fill = el("div", "bar-fill");
    fill.style.width = `${(entry.weight * 100).toFixed(3)}%`;
    fill.dataset.weight = entry.weight.toPrecision(12);
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(el("span", "bar-value", `${(entry.weight * 100).toFixed(1)}%`));
    list.appendChild(row);
  }
  root.appendChild(list);
}

export function renderProgress(vm: ConsoleViewModel, root: HTMLElement): void {
  root.textContent = "";
  if (!vm.snapshot) return;
  const { achieved, goal } = vm.snapshot.progress;
  const wrap = el("div", "progress");
  const track = el("div", "progress-track");
  const fill = el("div", "progress-fill");
  fill.style.width = `${(progressFraction(achieved, goal) * 100).toFixed(1)}%`;
  track.appendChild(fill);
  wrap.appendChild(track);
  wrap.appendChild(
    el("span", "progress-label", `${Math.min(achieved, goal)} / ${goal} target words`),
  );
  wrap.dataset.achieved = String(achieved);
  root.appendChild(wrap);
}

export interface ConsoleSections {
  banner: HTMLElement;
  board: HTMLElement;
  distribution: HTMLElement;
  progress: HTMLElement;
}

export function renderAll(vm: ConsoleViewModel, sections: ConsoleSections): void {
  renderBanner(vm, sections.banner);
  renderBoard(vm, sections.board);
  renderDistribution(vm, sections.distribution);
  renderProgress(vm, sections.progress);
}
