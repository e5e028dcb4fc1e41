// three.js scene: the rendered robot skeleton, the editable human-pose
// skeleton with draggable keypoint handles, and pointer plumbing.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { forwardKeypoints, skeletonPolylines } from "./fk";
import { ModelDoc, NUM_KEYPOINTS, Vec3, keypointIndex } from "./protocol";
import { clampToWorkspace } from "./handTemplate";

const ROBOT_COLOR = 0x4fc3f7;
const HUMAN_COLOR = 0xffb74d;
const HANDLE_COLOR = 0xff7043;
const HANDLE_ACTIVE = 0xffffff;

class Skeleton {
  group = new THREE.Group();
  private lines: THREE.Line[] = [];
  private joints: THREE.Mesh[] = [];

  constructor(color: number, jointRadius: number) {
    const jointMaterial = new THREE.MeshBasicMaterial({ color });
    const lineMaterial = new THREE.LineBasicMaterial({ color });
    for (let fi = 0; fi < 5; fi++) {
      const geometry = new THREE.BufferGeometry();
      geometry.setAttribute(
        "position",
        new THREE.BufferAttribute(new Float32Array(5 * 3), 3),
      );
      const line = new THREE.Line(geometry, lineMaterial);
      line.frustumCulled = false;
      this.lines.push(line);
      this.group.add(line);
    }
    for (let i = 0; i < NUM_KEYPOINTS; i++) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(jointRadius, 10, 10),
        jointMaterial.clone(),
      );
      this.joints.push(mesh);
      this.group.add(mesh);
    }
  }

  update(keypoints: number[][]) {
    const polylines = skeletonPolylines(keypoints as Vec3[]);
    polylines.forEach((line, fi) => {
      const attr = this.lines[fi].geometry.getAttribute(
        "position",
      ) as THREE.BufferAttribute;
      line.forEach((p, k) => attr.setXYZ(k, p[0], p[1], p[2]));
      attr.needsUpdate = true;
    });
    keypoints.forEach((p, i) => this.joints[i].position.set(p[0], p[1], p[2]));
  }

  handleMeshes(): THREE.Mesh[] {
    return this.joints;
  }

  setHandleActive(index: number | null) {
    this.joints.forEach((mesh, i) => {
      const mat = mesh.material as THREE.MeshBasicMaterial;
      mat.color.setHex(i === index ? HANDLE_ACTIVE : HANDLE_COLOR);
    });
  }
}

export class ConsoleScene {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private controls: OrbitControls;
  private robot = new Skeleton(ROBOT_COLOR, 0.004);
  private human = new Skeleton(HUMAN_COLOR, 0.006);
  private raycaster = new THREE.Raycaster();
  private dragIndex: number | null = null;
  private dragPlane = new THREE.Plane();
  private humanKeypoints: number[][] = [];
  onKeypointDrag: ((keypoints: number[][]) => void) | null = null;

  constructor(private canvas: HTMLCanvasElement, private model: ModelDoc) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(45, 1, 0.01, 10);
    this.camera.position.set(0.28, -0.25, 0.2);
    this.camera.up.set(0, 0, 1);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(0.08, 0, -0.02);
    this.scene.background = new THREE.Color(0x111418);
    this.scene.add(new THREE.AxesHelper(0.05));
    const grid = new THREE.GridHelper(0.6, 12, 0x333a42, 0x22272e);
    grid.rotation.x = Math.PI / 2;
    this.scene.add(grid);
    // render the human pose slightly apart has no meaning in wrist space;
    // overlay both skeletons in the same frame instead.
    this.scene.add(this.robot.group);
    this.scene.add(this.human.group);

    canvas.addEventListener("pointerdown", (ev) => this.pointerDown(ev));
    canvas.addEventListener("pointermove", (ev) => this.pointerMove(ev));
    window.addEventListener("pointerup", () => this.pointerUp());
    this.resize();
    window.addEventListener("resize", () => this.resize());
  }

  private resize() {
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = this.canvas.clientHeight || this.canvas.height;
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  setRobotPose(q: number[]) {
    this.robot.update(forwardKeypoints(this.model, q));
  }

  setRobotKeypoints(keypoints: number[][]) {
    this.robot.update(keypoints);
  }

  setHumanKeypoints(keypoints: number[][]) {
    this.humanKeypoints = keypoints.map((row) => [...row]);
    this.human.update(this.humanKeypoints);
  }

  getHumanKeypoints(): number[][] {
    return this.humanKeypoints.map((row) => [...row]);
  }

  private pointerRay(ev: PointerEvent): THREE.Raycaster {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      -((ev.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    return this.raycaster;
  }

  private pointerDown(ev: PointerEvent) {
    const ray = this.pointerRay(ev);
    const hits = ray.intersectObjects(this.human.handleMeshes(), false);
    if (!hits.length) return;
    const mesh = hits[0].object as THREE.Mesh;
    this.dragIndex = this.human.handleMeshes().indexOf(mesh);
    if (this.dragIndex === 0) {
      this.dragIndex = null; // the wrist anchors the frame
      return;
    }
    this.human.setHandleActive(this.dragIndex);
    this.controls.enabled = false;
    // drag in a camera-facing plane through the grabbed point
    const normal = new THREE.Vector3();
    this.camera.getWorldDirection(normal);
    this.dragPlane.setFromNormalAndCoplanarPoint(normal, mesh.position);
  }

  private pointerMove(ev: PointerEvent) {
    if (this.dragIndex === null) return;
    const ray = this.pointerRay(ev);
    const hit = new THREE.Vector3();
    if (!ray.ray.intersectPlane(this.dragPlane, hit)) return;
    const clamped = clampToWorkspace([hit.x, hit.y, hit.z]);
    this.humanKeypoints[this.dragIndex] = [...clamped];
    this.human.update(this.humanKeypoints);
    this.onKeypointDrag?.(this.getHumanKeypoints());
  }

  private pointerUp() {
    if (this.dragIndex === null) return;
    this.dragIndex = null;
    this.human.setHandleActive(null);
    this.controls.enabled = true;
  }

  renderLoop() {
    const tick = () => {
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(tick);
    };
    tick();
  }
}

export function keypointRowsForFinger(finger: number): number[] {
  return [1, 2, 3, 4].map((j) => keypointIndex(finger, j));
}
