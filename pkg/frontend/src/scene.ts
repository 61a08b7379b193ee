// Three.js scene for the live simulator state: true tool, tracked
// estimate, camera frustum, contact plane, and signal widgets.
//
// Simulator frames are z-up; three.js is y-up.  The whole world group is
// rotated so simulator (x, y, z) renders as-is without per-object swizzling.

import * as THREE from "three";
import type { StateFrame } from "./protocol";

const LED_COLORS: Record<string, number> = {
  off: 0x222222,
  solid: 0x2266ff,
  flash_blue: 0x44aaff,
  force_gradient: 0xff8800,
};

function axesGizmo(size: number): THREE.Object3D {
  return new THREE.AxesHelper(size);
}

function toolMesh(color: number, opacity = 1.0): THREE.Group {
  const group = new THREE.Group();
  const material = new THREE.MeshStandardMaterial({
    color,
    transparent: opacity < 1,
    opacity,
  });
  const barrel = new THREE.Mesh(new THREE.CylinderGeometry(0.02, 0.02, 0.08, 24), material);
  barrel.rotation.x = Math.PI / 2; // cylinder axis -> tool z
  barrel.position.z = 0.02;
  group.add(barrel);
  const tip = new THREE.Mesh(new THREE.ConeGeometry(0.012, 0.03, 24), material);
  tip.rotation.x = -Math.PI / 2;
  tip.position.z = -0.035;
  group.add(tip);
  group.add(axesGizmo(0.06));
  return group;
}

/** Simulator quaternion is [w, x, y, z]; three.js wants (x, y, z, w). */
export function toThreeQuat(q: [number, number, number, number]): THREE.Quaternion {
  return new THREE.Quaternion(q[1], q[2], q[3], q[0]);
}

/** Camera decision angles -> orientation, matching the simulator's Rz·Ry·Rx. */
export function cameraQuat(thetaX: number, thetaY: number): THREE.Quaternion {
  return new THREE.Quaternion().setFromEuler(new THREE.Euler(thetaX, thetaY, 0, "ZYX"));
}

export class SimScene {
  readonly renderer: THREE.WebGLRenderer;
  private readonly scene = new THREE.Scene();
  private readonly viewCamera: THREE.PerspectiveCamera;
  private readonly world = new THREE.Group();

  private readonly toolTrue = toolMesh(0xdddddd);
  private readonly toolEstimate = toolMesh(0x33cc66, 0.45);
  private readonly simCamera = new THREE.Group();
  private readonly frustum: THREE.LineSegments;

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.viewCamera = new THREE.PerspectiveCamera(50, 1, 0.01, 10);
    this.viewCamera.position.set(0.9, 0.7, 0.9);
    this.viewCamera.lookAt(0, 0.3, 0);

    // z-up world
    this.world.rotation.x = -Math.PI / 2;
    this.scene.add(this.world);
    this.scene.background = new THREE.Color(0x101418);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(1, 2, 1);
    this.scene.add(sun);

    const plane = new THREE.Mesh(
      new THREE.PlaneGeometry(1.2, 1.2),
      new THREE.MeshStandardMaterial({ color: 0x1d242c, side: THREE.DoubleSide }),
    );
    this.world.add(plane);
    this.world.add(new THREE.GridHelper(1.2, 24, 0x33404d, 0x232c36).rotateX(Math.PI / 2));

    this.world.add(this.toolTrue);
    this.world.add(this.toolEstimate);
    this.toolEstimate.visible = false;

    this.frustum = makeFrustum(0.6, 0.35);
    this.simCamera.add(this.frustum);
    this.simCamera.add(axesGizmo(0.05));
    this.world.add(this.simCamera);

    this.resize();
  }

  resize(): void {
    const w = this.canvas.clientWidth || 800;
    const h = this.canvas.clientHeight || 600;
    this.renderer.setSize(w, h, false);
    this.viewCamera.aspect = w / h;
    this.viewCamera.updateProjectionMatrix();
  }

  apply(frame: StateFrame): void {
    this.toolTrue.position.fromArray(frame.tool_true.position);
    this.toolTrue.quaternion.copy(toThreeQuat(frame.tool_true.quat));

    const est = frame.tool_estimate;
    this.toolEstimate.visible = est !== null && est.tracking;
    if (est !== null) {
      this.toolEstimate.position.fromArray(est.position);
      this.toolEstimate.quaternion.copy(toThreeQuat(est.quat));
    }

    this.simCamera.position.fromArray(frame.camera.position);
    this.simCamera.quaternion.copy(cameraQuat(frame.camera.theta_x, frame.camera.theta_y));

    const ledColor = LED_COLORS[frame.signals.led] ?? LED_COLORS.off;
    (this.frustum.material as THREE.LineBasicMaterial).color.setHex(
      frame.tool_estimate?.tracking ? 0x33cc66 : ledColor,
    );
  }

  render(): void {
    this.renderer.render(this.scene, this.viewCamera);
  }

  /** Project a pointer event onto the horizontal plane at the given height. */
  pickOnPlane(clientX: number, clientY: number, planeZ: number): [number, number, number] | null {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1,
    );
    const ray = new THREE.Raycaster();
    ray.setFromCamera(ndc, this.viewCamera);
    // the world group is rotated, so the simulator's z = planeZ plane is the
    // render-space y = planeZ plane
    const plane = new THREE.Plane(new THREE.Vector3(0, 1, 0), -planeZ);
    const hit = new THREE.Vector3();
    if (ray.ray.intersectPlane(plane, hit) === null) return null;
    // render (x, y, z) -> simulator (x, -z, y)
    return [hit.x, -hit.z, hit.y];
  }
}

function makeFrustum(halfAngle: number, depth: number): THREE.LineSegments {
  const r = Math.tan(halfAngle) * depth;
  const corners = [
    new THREE.Vector3(-r, -r, depth),
    new THREE.Vector3(r, -r, depth),
    new THREE.Vector3(r, r, depth),
    new THREE.Vector3(-r, r, depth),
  ];
  const origin = new THREE.Vector3(0, 0, 0);
  const points: THREE.Vector3[] = [];
  for (let i = 0; i < 4; i++) {
    points.push(origin.clone(), corners[i].clone());
    points.push(corners[i].clone(), corners[(i + 1) % 4].clone());
  }
  const geometry = new THREE.BufferGeometry().setFromPoints(points);
  return new THREE.LineSegments(geometry, new THREE.LineBasicMaterial({ color: 0x888888 }));
}
