// Browser bootstrap: wire the live view and the cue-injection panel.

import { ConsoleClient } from "./client.js";
import type { Person } from "./protocol.js";
import { renderAll, type ConsoleSections } from "./render.js";
import {
  applyConnection,
  applyServerMessage,
  initialViewModel,
  objectCenter,
  type ConsoleViewModel,
} from "./viewmodel.js";

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const server =
    params.get("server") ??
    `${window.location.protocol === "https:" ? "wss" : "ws"}://${window.location.host || "127.0.0.1:8765"}/ws`;
  const session = params.get("session") ?? "s1";

  const sections: ConsoleSections = {
    banner: byId("banner"),
    board: byId("board"),
    distribution: byId("distribution"),
    progress: byId("progress"),
  };

  let vm: ConsoleViewModel = initialViewModel();
  const repaint = () => {
    renderAll(vm, sections);
    syncObjectPicker();
  };

  const client = new ConsoleClient({
    url: server,
    session,
    onMessage: (message) => {
      vm = applyServerMessage(vm, message);
      repaint();
    },
    onConnectionChange: (state) => {
      vm = applyConnection(vm, state);
      repaint();
    },
  });

  // Injection panel: everything round-trips through the server.
  const personSelect = byId("inject-person") as HTMLSelectElement;
  const objectSelect = byId("inject-object") as HTMLSelectElement;
  const pointX = byId("inject-x") as HTMLInputElement;
  const pointY = byId("inject-y") as HTMLInputElement;
  const utteranceText = byId("inject-text") as HTMLInputElement;

  function syncObjectPicker(): void {
    const objects = vm.meta?.objects ?? [];
    if (objectSelect.options.length === objects.length) return;
    objectSelect.textContent = "";
    for (const object of objects) {
      const option = document.createElement("option");
      option.value = object.id;
      option.textContent = object.display_name;
      objectSelect.appendChild(option);
    }
  }

  byId("inject-gaze-object").addEventListener("click", () => {
    const center = objectCenter(vm, objectSelect.value);
    if (center) {
      client.injectGazePoint(personSelect.value as Person, center.x, center.y);
    }
  });

  // Hold-gaze autoclick: keep sending one gaze per second at the selected
  // object, matching the default debounce cadence, until unchecked.
  const holdToggle = byId("inject-hold") as HTMLInputElement;
  let holdTimer: ReturnType<typeof setInterval> | null = null;
  holdToggle.addEventListener("change", () => {
    if (holdTimer !== null) {
      clearInterval(holdTimer);
      holdTimer = null;
    }
    if (holdToggle.checked) {
      holdTimer = setInterval(() => {
        const center = objectCenter(vm, objectSelect.value);
        if (center) {
          client.injectGazePoint(personSelect.value as Person, center.x, center.y);
        }
      }, 1000);
    }
  });

  byId("inject-gaze-point").addEventListener("click", () => {
    const x = Number(pointX.value);
    const y = Number(pointY.value);
    if (Number.isFinite(x) && Number.isFinite(y)) {
      client.injectGazePoint(personSelect.value as Person, x, y);
    }
  });

  byId("inject-say").addEventListener("click", () => {
    const text = utteranceText.value.trim();
    if (text) {
      client.injectUtterance(personSelect.value as Person, text);
      utteranceText.value = "";
    }
  });

  window.addEventListener("beforeunload", () => client.close());
}

main();
