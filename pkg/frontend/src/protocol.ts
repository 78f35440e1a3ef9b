// Wire types for the session-service WebSocket protocol.

export interface DistributionEntry {
  object: string;
  weight: number;
}

export interface BoardEntry {
  slot: number;
  object: string;
  candidate_index: number;
  phrase: string;
  shown_since: number;
  uses: number;
}

export interface Progress {
  achieved: number;
  goal: number;
}

export interface SnapshotMessage {
  type: "snapshot";
  revision: number;
  clock_ms: number;
  distribution: DistributionEntry[];
  board: BoardEntry[];
  progress: Progress;
}

export interface MetaObject {
  id: string;
  display_name: string;
  box: [number, number, number, number] | null;
}

export interface MetaMessage {
  type: "meta";
  session: string;
  objects: MetaObject[];
  policy: { n_uses: number; t_display_ms: number; board_size: number };
  goal: number;
  clock_mode: "wall" | "logical";
  heartbeat_ms: number;
}

export interface AckMessage {
  type: "ack";
  session: string;
  t_ms: number;
  clock_ms: number;
  revision: number;
}

export interface StartedMessage {
  type: "started";
  session: string;
}

export interface EndedMessage {
  type: "ended";
  session: string;
  log_path: string;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage =
  | SnapshotMessage
  | MetaMessage
  | AckMessage
  | StartedMessage
  | EndedMessage
  | ErrorMessage;

export type Person = "parent" | "child";

export interface GazeInput {
  kind: "gaze";
  t_ms?: number | null;
  person: Person;
  x: number;
  y: number;
}

export interface UtteranceInput {
  kind: "utterance";
  t_ms?: number | null;
  speaker: Person;
  text: string;
}

export type IngestInput = GazeInput | UtteranceInput;

export function parseServerMessage(raw: string): ServerMessage | null {
  try {
    const message = JSON.parse(raw);
    if (message && typeof message.type === "string") {
      return message as ServerMessage;
    }
  } catch {
    // non-JSON frames are ignored
  }
  return null;
}
