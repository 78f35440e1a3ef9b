// Console view model: a pure fold over server messages.
//
// The console is stateless beyond the latest snapshot: everything on
// screen derives from (meta, snapshot, connection), so a reconnect that
// replays the current snapshot reproduces the identical view.

import type { MetaMessage, ServerMessage, SnapshotMessage } from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "closed";

export interface ConsoleViewModel {
  connection: ConnectionState;
  meta: MetaMessage | null;
  snapshot: SnapshotMessage | null;
  lastError: string | null;
}

export function initialViewModel(): ConsoleViewModel {
  return { connection: "connecting", meta: null, snapshot: null, lastError: null };
}

export function applyConnection(
  vm: ConsoleViewModel,
  connection: ConnectionState,
): ConsoleViewModel {
  return { ...vm, connection };
}

export function applyServerMessage(
  vm: ConsoleViewModel,
  message: ServerMessage,
): ConsoleViewModel {
  switch (message.type) {
    case "meta":
      return { ...vm, meta: message };
    case "snapshot": {
      // Rendered revision is monotone: stale frames (e.g. from a racing
      // resubscribe) never move the view backwards.
      if (vm.snapshot && message.revision < vm.snapshot.revision) {
        return vm;
      }
      return { ...vm, snapshot: message };
    }
    case "error":
      return { ...vm, lastError: `${message.code}: ${message.detail}` };
    default:
      return vm;
  }
}

/** Fraction of the display timeout a card has been up, clamped to [0, 1]. */
export function stalenessFraction(
  shownSinceMs: number,
  clockMs: number,
  tDisplayMs: number,
): number {
  if (tDisplayMs <= 0) return 0;
  const fraction = (clockMs - shownSinceMs) / tDisplayMs;
  return Math.min(1, Math.max(0, fraction));
}

/** Progress bar fill: achieved clamps at the goal for display. */
export function progressFraction(achieved: number, goal: number): number {
  if (goal <= 0) return 0;
  return Math.min(1, achieved / goal);
}

export function displayName(vm: ConsoleViewModel, objectId: string): string {
  const entry = vm.meta?.objects.find((o) => o.id === objectId);
  return entry ? entry.display_name : objectId;
}

/** Center of an object's scene box, for object-picker gaze injection. */
export function objectCenter(
  vm: ConsoleViewModel,
  objectId: string,
): { x: number; y: number } | null {
  const box = vm.meta?.objects.find((o) => o.id === objectId)?.box;
  if (!box) return null;
  return { x: (box[0] + box[2]) / 2, y: (box[1] + box[3]) / 2 };
}
