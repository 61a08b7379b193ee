// Round trip against the real simulator server: spawn `demosim serve`,
// connect over a raw websocket, and check that commands are reflected in
// the state frames and that violations come back as error frames.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import WebSocket from "ws";
import { encodeClientMessage, parseServerFrame, type StateFrame } from "../src/protocol";

const PORT = 18000 + Math.floor(Math.random() * 2000);
let server: ChildProcess;

function connectClient(): Promise<WebSocket> {
  return new Promise((resolve, reject) => {
    const deadline = Date.now() + 15_000;
    const attempt = () => {
      const ws = new WebSocket(`ws://127.0.0.1:${PORT}`);
      ws.once("open", () => resolve(ws));
      ws.once("error", () => {
        ws.close();
        if (Date.now() > deadline) reject(new Error("server never came up"));
        else setTimeout(attempt, 200);
      });
    };
    attempt();
  });
}

function nextFrame(
  ws: WebSocket,
  pred: (f: StateFrame) => boolean,
  timeoutMs = 10_000,
): Promise<StateFrame> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => {
      ws.off("message", handler);
      reject(new Error("no matching frame"));
    }, timeoutMs);
    const handler = (data: WebSocket.RawData) => {
      const frame = parseServerFrame(data.toString());
      if (frame?.type === "state" && pred(frame)) {
        clearTimeout(timer);
        ws.off("message", handler);
        resolve(frame);
      }
    };
    ws.on("message", handler);
  });
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "demosim.cli", "serve", "fig5a_angled", "--port", String(PORT)],
    { stdio: "ignore" },
  );
});

afterAll(() => {
  server?.kill("SIGKILL");
});

describe("server round trip", () => {
  it("streams schema-valid state frames and reflects commands", async () => {
    const ws = await connectClient();
    try {
      // every inbound frame must validate against the wire schema
      let invalid = 0;
      const audit = (data: WebSocket.RawData) => {
        if (parseServerFrame(data.toString()) === null) invalid++;
      };
      ws.on("message", audit);

      await nextFrame(ws, () => true);

      ws.send(encodeClientMessage({ type: "pull_pin" }));
      const detached = await nextFrame(ws, (f) => !f.attached);
      expect(detached.mode.startsWith("natural")).toBe(true);

      const target: [number, number, number] = [0.06, -0.37, 0.64];
      ws.send(
        encodeClientMessage({ type: "set_tool_pose", position: target, quaternion: [0, 1, 0, 0] }),
      );
      const moved = await nextFrame(
        ws,
        (f) => Math.abs(f.tool_true.position[0] - target[0]) < 1e-9,
      );
      expect(moved.tool_true.position[1]).toBeCloseTo(target[1], 9);

      ws.off("message", audit);
      expect(invalid).toBe(0);
    } finally {
      ws.close();
    }
  }, 30_000);

  it("answers protocol violations with an error frame", async () => {
    const ws = await connectClient();
    try {
      const errored = new Promise<string>((resolve) => {
        ws.on("message", (data) => {
          const frame = parseServerFrame(data.toString());
          if (frame?.type === "error") resolve(frame.message);
        });
      });
      ws.send(JSON.stringify({ type: "warp_drive" }));
      expect(await errored).toContain("warp_drive");
    } finally {
      ws.close();
    }
  }, 30_000);
});
