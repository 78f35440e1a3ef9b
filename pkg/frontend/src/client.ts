// WebSocket client: subscribe to a session, auto-reconnect, inject cues.
//
// Every user action goes to the server; the view only changes when a
// snapshot comes back. On reconnect the client resubscribes and the
// server's full snapshot rebuilds the view from scratch.

import type { IngestInput, Person, ServerMessage } from "./protocol.js";
import { parseServerMessage } from "./protocol.js";

type WebSocketLike = {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
  readyState: number;
};

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface ConsoleClientOptions {
  url: string;
  session: string;
  onMessage: (message: ServerMessage) => void;
  onConnectionChange: (state: "connecting" | "open" | "closed") => void;
  webSocketFactory?: WebSocketFactory;
  reconnectMs?: number;
  maxReconnectMs?: number;
}

const OPEN = 1;

export class ConsoleClient {
  private ws: WebSocketLike | null = null;
  private closed = false;
  private retryMs: number;
  private readonly options: ConsoleClientOptions;
  private readonly factory: WebSocketFactory;

  constructor(options: ConsoleClientOptions) {
    this.options = options;
    this.retryMs = options.reconnectMs ?? 500;
    this.factory =
      options.webSocketFactory ??
      ((url: string) => new WebSocket(url) as unknown as WebSocketLike);
    this.open();
  }

  private open(): void {
    this.options.onConnectionChange("connecting");
    const ws = this.factory(this.options.url);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = this.options.reconnectMs ?? 500;
      this.options.onConnectionChange("open");
      // Resubscribing fetches meta plus a full snapshot, which is all the
      // state this console keeps.
      ws.send(JSON.stringify({ type: "subscribe", session: this.options.session }));
    };
    ws.onmessage = (event) => {
      const message = parseServerMessage(String(event.data));
      if (message) this.options.onMessage(message);
    };
    ws.onclose = () => {
      if (this.ws !== ws) return;
      this.options.onConnectionChange("closed");
      if (!this.closed) {
        const delay = this.retryMs;
        this.retryMs = Math.min(this.retryMs * 2, this.options.maxReconnectMs ?? 8000);
        setTimeout(() => {
          if (!this.closed) this.open();
        }, delay);
      }
    };
  }

  private sendIngest(input: IngestInput): void {
    if (!this.ws || this.ws.readyState !== OPEN) return;
    this.ws.send(
      JSON.stringify({ type: "ingest", session: this.options.session, input }),
    );
  }

  /** Inject a gaze sample at a scene point (unit-square coordinates). */
  injectGazePoint(person: Person, x: number, y: number, tMs?: number): void {
    this.sendIngest({ kind: "gaze", t_ms: tMs ?? null, person, x, y });
  }

  /** Inject a transcribed utterance. */
  injectUtterance(speaker: Person, text: string, tMs?: number): void {
    this.sendIngest({ kind: "utterance", t_ms: tMs ?? null, speaker, text });
  }

  start(config?: Record<string, unknown>): void {
    if (!this.ws || this.ws.readyState !== OPEN) return;
    this.ws.send(
      JSON.stringify({ type: "start", session: this.options.session, config: config ?? {} }),
    );
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }

  /** Drop the socket without disabling reconnect (used to test recovery). */
  dropConnection(): void {
    this.ws?.close();
  }
}
