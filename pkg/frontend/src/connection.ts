// Websocket connection wrapper: inbound frames land in a newest-wins
// store, outbound messages are validated and rate-limited.  Pose updates
// are coalesced: when over budget, only the newest pose is kept and sent
// as soon as the limiter allows.

import {
  type ClientMessage,
  type ErrorFrame,
  encodeClientMessage,
  parseServerFrame,
} from "./protocol";
import { FrameStore, RateLimiter } from "./store";

export interface ConnectionEvents {
  onError?: (frame: ErrorFrame) => void;
  onStatus?: (connected: boolean) => void;
}

const OUTBOUND_PER_SECOND = 60;

export class SimConnection {
  readonly frames = new FrameStore();
  private ws: WebSocket | null = null;
  private readonly limiter = new RateLimiter(OUTBOUND_PER_SECOND);
  private pendingPose: ClientMessage | null = null;
  private flushTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly events: ConnectionEvents = {},
  ) {}

  connect(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => this.events.onStatus?.(true);
    ws.onclose = () => this.events.onStatus?.(false);
    ws.onmessage = (ev: MessageEvent) => {
      const frame = parseServerFrame(String(ev.data));
      if (frame === null) return; // off-protocol data is ignored, not fatal
      if (frame.type === "error") this.events.onError?.(frame);
      else this.frames.put(frame);
    };
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
  }

  /** Discrete commands (pin, device, config) bypass pose coalescing. */
  send(msg: ClientMessage): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    if (!this.limiter.tryAcquire()) return false;
    this.ws.send(encodeClientMessage(msg));
    return true;
  }

  /** High-rate pose stream: newest pose wins when over the rate budget. */
  sendPose(position: [number, number, number], quaternion: [number, number, number, number]): void {
    const msg: ClientMessage = { type: "set_tool_pose", position, quaternion };
    if (this.send(msg)) {
      this.pendingPose = null;
      return;
    }
    this.pendingPose = msg;
    if (this.flushTimer === null) {
      this.flushTimer = setTimeout(() => {
        this.flushTimer = null;
        if (this.pendingPose !== null) {
          const pending = this.pendingPose;
          this.pendingPose = null;
          if (!this.send(pending)) this.pendingPose = pending;
        }
      }, 1000 / OUTBOUND_PER_SECOND);
    }
  }
}

/** ws://host:port from ?host=&port= query params, with local defaults. */
export function serverUrl(search: string): string {
  const params = new URLSearchParams(search);
  const host = params.get("host") ?? "127.0.0.1";
  const port = params.get("port") ?? "8765";
  return `ws://${host}:${port}`;
}
