import { beforeEach, describe, expect, it } from "vitest";

import { renderAll, renderBoard, renderDistribution, renderProgress, type ConsoleSections } from "../src/render.js";
import { applyServerMessage, initialViewModel, type ConsoleViewModel } from "../src/viewmodel.js";
import { meta, snapshot } from "./viewmodel.test.js";

function sections(): ConsoleSections {
  return {
    banner: document.createElement("div"),
    board: document.createElement("div"),
    distribution: document.createElement("div"),
    progress: document.createElement("div"),
  };
}

function viewModel(): ConsoleViewModel {
  let vm = initialViewModel();
  vm = applyServerMessage(vm, meta());
  return vm;
}

describe("board rendering", () => {
  let root: HTMLElement;
  beforeEach(() => {
    root = document.createElement("div");
  });

  it("renders cards in slot order with phrases", () => {
    const vm = applyServerMessage(
      viewModel(),
      snapshot(4, {
        board: [
          { slot: 0, object: "ball", candidate_index: 0, phrase: "Throw the ball!", shown_since: 0, uses: 0 },
          { slot: 1, object: "ball", candidate_index: 1, phrase: "Roll the ball!", shown_since: 0, uses: 0 },
          { slot: 2, object: "dog", candidate_index: 0, phrase: "The dog runs!", shown_since: 0, uses: 0 },
        ],
      }),
    );
    renderBoard(vm, root);
    const cards = [...root.querySelectorAll(".card")];
    expect(cards.map((c) => (c as HTMLElement).dataset.object)).toEqual(["ball", "ball", "dog"]);
    expect(root.querySelectorAll(".card-phrase")[2].textContent).toBe("The dog runs!");
    expect(root.querySelectorAll(".card-art")[0].textContent).toBe("Ball");
  });

  it("shows one filled pip at uses=1 of N=2", () => {
    const vm = applyServerMessage(
      viewModel(),
      snapshot(4, {
        board: [
          { slot: 0, object: "ball", candidate_index: 0, phrase: "Throw the ball!", shown_since: 0, uses: 1 },
        ],
      }),
    );
    renderBoard(vm, root);
    expect(root.querySelectorAll(".pip").length).toBe(2);
    expect(root.querySelectorAll(".pip-filled").length).toBe(1);
  });

  it("staleness ring reads ~99% for a card 119 s on display", () => {
    const vm = applyServerMessage(
      viewModel(),
      snapshot(4, {
        clock_ms: 119_000,
        board: [
          { slot: 0, object: "ball", candidate_index: 0, phrase: "Throw the ball!", shown_since: 0, uses: 0 },
        ],
      }),
    );
    renderBoard(vm, root);
    const ring = root.querySelector(".card-ring") as HTMLElement;
    expect(ring.dataset.percent).toBe("99");
  });

  it("each card offers a read-aloud placeholder affordance", () => {
    const vm = applyServerMessage(viewModel(), snapshot(4));
    renderBoard(vm, root);
    expect(root.querySelectorAll("button.card-speak").length).toBe(1);
  });
});

describe("distribution and progress rendering", () => {
  it("bars reflect weights", () => {
    const vm = applyServerMessage(
      viewModel(),
      snapshot(4, {
        distribution: [
          { object: "ball", weight: 0.75 },
          { object: "dog", weight: 0.25 },
        ],
      }),
    );
    const root = document.createElement("div");
    renderDistribution(vm, root);
    const fills = [...root.querySelectorAll(".bar-fill")] as HTMLElement[];
    expect(fills[0].style.width).toBe("75.000%");
    expect(fills[1].style.width).toBe("25.000%");
    expect(root.querySelectorAll(".bar-label")[0].textContent).toBe("Ball");
  });

  it("progress bar clamps at the goal", () => {
    const vm = applyServerMessage(
      viewModel(),
      snapshot(4, { progress: { achieved: 14, goal: 10 } }),
    );
    const root = document.createElement("div");
    renderProgress(vm, root);
    const fill = root.querySelector(".progress-fill") as HTMLElement;
    expect(fill.style.width).toBe("100.0%");
    expect(root.textContent).toContain("10 / 10");
  });
});

describe("snapshot sufficiency", () => {
  it("rendering the same view model twice gives identical DOM", () => {
    const vm = applyServerMessage(viewModel(), snapshot(7, { clock_ms: 45_000 }));
    const a = sections();
    const b = sections();
    renderAll(vm, a);
    renderAll(vm, b);
    expect(a.board.innerHTML).toBe(b.board.innerHTML);
    expect(a.distribution.innerHTML).toBe(b.distribution.innerHTML);
    expect(a.progress.innerHTML).toBe(b.progress.innerHTML);
    expect(a.banner.innerHTML).toBe(b.banner.innerHTML);
  });

  it("a rebuilt view model from the same snapshot renders identically", () => {
    // Simulates disconnect/reconnect: fresh state, same subscribe payloads.
    const frame = snapshot(7, { clock_ms: 45_000 });
    const first = applyServerMessage(viewModel(), frame);
    let rejoined = initialViewModel();
    rejoined = applyServerMessage(rejoined, meta());
    rejoined = applyServerMessage(rejoined, frame);
    const a = sections();
    const b = sections();
    renderAll(first, a);
    renderAll(rejoined, b);
    expect(a.board.innerHTML).toBe(b.board.innerHTML);
    expect(a.distribution.innerHTML).toBe(b.distribution.innerHTML);
    expect(a.progress.innerHTML).toBe(b.progress.innerHTML);
  });
});
