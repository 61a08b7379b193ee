import { SimConnection, serverUrl } from "./connection";
import { SimScene } from "./scene";
import type { StateFrame } from "./protocol";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const scene = new SimScene(canvas);

const el = (id: string) => document.getElementById(id)!;
const statusEl = el("status");
const modeEl = el("mode");
const ledEl = el("led");
const beepEl = el("beep");
const forceBar = el("force-bar") as HTMLDivElement;
const errorsEl = el("errors");
const objectiveBars: Record<string, HTMLDivElement> = {
  phi1: el("phi1") as HTMLDivElement,
  phi2: el("phi2") as HTMLDivElement,
  phi3: el("phi3") as HTMLDivElement,
  phi4: el("phi4") as HTMLDivElement,
};

const conn = new SimConnection(serverUrl(location.search), {
  onStatus: (connected) => {
    statusEl.textContent = connected ? "connected" : "disconnected";
    statusEl.className = connected ? "ok" : "bad";
  },
  onError: (frame) => {
    errorsEl.textContent = frame.message;
  },
});
conn.connect();

el("pull-pin").onclick = () => conn.send({ type: "pull_pin" });
el("reattach").onclick = () => conn.send({ type: "reattach" });

let pressed = false;
el("press").onclick = () => {
  pressed = !pressed;
  el("press").textContent = pressed ? "release device" : "press device";
  conn.send({ type: "press_device", pressed });
};

(el("force") as HTMLInputElement).oninput = (ev) => {
  conn.send({ type: "set_force", newtons: Number((ev.target as HTMLInputElement).value) });
};

// Dragging on the canvas moves the demonstrated tool in the horizontal
// plane through its current height, front face kept toward the camera.
let dragging = false;
let toolZ = 0.66;
canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  canvas.setPointerCapture(ev.pointerId);
});
canvas.addEventListener("pointerup", () => (dragging = false));
canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  const hit = scene.pickOnPlane(ev.clientX, ev.clientY, toolZ);
  if (hit) conn.sendPose(hit, [0, 1, 0, 0]);
});
window.addEventListener("wheel", (ev) => {
  if (!dragging) return;
  toolZ = Math.min(0.9, Math.max(0.1, toolZ - ev.deltaY * 1e-4));
});

function applyHud(frame: StateFrame): void {
  modeEl.textContent = frame.mode + (frame.fault ? " (fault)" : "");
  ledEl.className = `led ${frame.signals.led}`;
  beepEl.className = frame.signals.beep ? "beep on" : "beep";
  forceBar.style.width = `${Math.round(frame.signals.force_level * 100)}%`;
  toolZ = frame.tool_true.position[2];
  const phi = frame.objectives;
  for (const key of ["phi1", "phi2", "phi3", "phi4"] as const) {
    const value = phi ? phi[key] : 0;
    // log-ish scaling keeps both ~1e-6 and ~1 visible
    const pct = phi ? Math.min(100, Math.max(2, 100 + 12 * Math.log10(value + 1e-9))) : 0;
    objectiveBars[key].style.width = `${pct}%`;
    objectiveBars[key].title = `${key} = ${value.toExponential(3)}`;
  }
}

function tick(): void {
  const frame = conn.frames.take();
  if (frame !== null) {
    scene.apply(frame);
    applyHud(frame);
  }
  scene.render();
  requestAnimationFrame(tick);
}
window.addEventListener("resize", () => scene.resize());
requestAnimationFrame(tick);
