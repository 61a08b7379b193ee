// Wire protocol for the simulator's websocket endpoint (`demosim serve`).
// The server streams JSON state frames; clients send JSON commands.

import { z } from "zod";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);
const quat = z.tuple([z.number(), z.number(), z.number(), z.number()]); // [w, x, y, z]
const wrench = z.array(z.number()).length(6);

export const poseSchema = z.object({ position: vec3, quat });

export const stateFrameSchema = z.object({
  type: z.literal("state"),
  time: z.number(),
  mode: z.enum([
    "idle",
    "teleoperation",
    "kinesthetic",
    "natural_ready",
    "natural_tracking",
    "natural_lost",
  ]),
  fault: z.boolean(),
  attached: z.boolean(),
  tool_true: poseSchema,
  tool_estimate: poseSchema.extend({ tracking: z.boolean() }).nullable(),
  camera: z.object({ position: vec3, theta_x: z.number(), theta_y: z.number() }),
  objectives: z
    .object({
      phi1: z.number(),
      phi2: z.number(),
      phi3: z.number(),
      phi4: z.number(),
      total: z.number(),
    })
    .nullable(),
  signals: z.object({
    led: z.enum(["off", "solid", "flash_blue", "force_gradient"]),
    beep: z.boolean(),
    force_level: z.number(),
  }),
  forces: z.object({
    contact: wrench,
    robot_force: vec3,
    tool_axial: z.number(),
  }),
  visible_markers: z.array(z.number().int()),
});

export const errorFrameSchema = z.object({
  type: z.literal("error"),
  message: z.string(),
});

export const serverFrameSchema = z.discriminatedUnion("type", [
  stateFrameSchema,
  errorFrameSchema,
]);

export type StateFrame = z.infer<typeof stateFrameSchema>;
export type ErrorFrame = z.infer<typeof errorFrameSchema>;
export type ServerFrame = z.infer<typeof serverFrameSchema>;

export const clientMessageSchema = z.discriminatedUnion("type", [
  z.object({ type: z.literal("set_tool_pose"), position: vec3, quaternion: quat }),
  z.object({ type: z.literal("set_force"), newtons: z.number() }),
  z.object({
    type: z.literal("press_device"),
    pressed: z.boolean(),
    twist: z.array(z.number()).length(6).optional(),
  }),
  z.object({ type: z.literal("pull_pin") }),
  z.object({ type: z.literal("reattach") }),
  z.object({ type: z.literal("set_config"), path: z.string(), value: z.unknown() }),
]);

export type ClientMessage = z.infer<typeof clientMessageSchema>;

/** Parse one inbound message; returns null for anything off-protocol. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  const result = serverFrameSchema.safeParse(data);
  return result.success ? result.data : null;
}

/** Serialize an outbound message, validating it against the schema first. */
export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(clientMessageSchema.parse(msg));
}
