import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import { SUSPECT_LINK } from "./colors";
import type { CameraPose } from "./state";

/**
 * Three.js view: the unit sphere, the entity point cloud, and the link
 * overlay for the selected entity. All data updates come in as flat typed
 * arrays; picking returns render indices that the caller maps back to ids.
 */
export class ExplorerScene {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private controls: OrbitControls;
  private points: THREE.Points | null = null;
  private links: THREE.LineSegments | null = null;
  private highlight: THREE.Mesh;
  private raycaster = new THREE.Raycaster();

  constructor(private canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.scene.background = new THREE.Color("#101018");
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.01, 50);
    this.camera.position.set(1.8, 1.2, 1.8);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.enableDamping = true;
    this.controls.dampingFactor = 0.08;

    const boundary = new THREE.Mesh(
      new THREE.SphereGeometry(1, 48, 32),
      new THREE.MeshBasicMaterial({
        color: "#8888aa",
        transparent: true,
        opacity: 0.05,
        side: THREE.BackSide,
      }),
    );
    this.scene.add(boundary);
    const rings = new THREE.LineSegments(
      new THREE.EdgesGeometry(new THREE.SphereGeometry(1, 18, 12)),
      new THREE.LineBasicMaterial({ color: "#44445c", transparent: true, opacity: 0.35 }),
    );
    this.scene.add(rings);

    this.highlight = new THREE.Mesh(
      new THREE.SphereGeometry(0.02, 16, 12),
      new THREE.MeshBasicMaterial({ color: SUSPECT_LINK, wireframe: true }),
    );
    this.highlight.visible = false;
    this.scene.add(this.highlight);

    this.raycaster.params.Points = { threshold: 0.012 };
    this.resize();
    this.animate();
  }

  resize(): void {
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = this.canvas.clientHeight || this.canvas.height;
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  private animate = (): void => {
    requestAnimationFrame(this.animate);
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  };

  setPoints(positions: Float32Array, colors: Float32Array): void {
    if (this.points) {
      this.scene.remove(this.points);
      this.points.geometry.dispose();
      (this.points.material as THREE.Material).dispose();
      this.points = null;
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
    const material = new THREE.PointsMaterial({
      size: 0.012,
      vertexColors: true,
      sizeAttenuation: true,
    });
    this.points = new THREE.Points(geometry, material);
    this.scene.add(this.points);
  }

  clearPoints(): void {
    this.setPoints(new Float32Array(0), new Float32Array(0));
    this.clearLinks();
  }

  setLinkSegments(segments: Float32Array, color: string = SUSPECT_LINK): void {
    this.clearLinks();
    if (!segments.length) return;
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(segments, 3));
    this.links = new THREE.LineSegments(
      geometry,
      new THREE.LineBasicMaterial({ color, transparent: true, opacity: 0.85 }),
    );
    this.scene.add(this.links);
    const origin = new THREE.Vector3(segments[0]!, segments[1]!, segments[2]!);
    this.highlight.position.copy(origin);
    this.highlight.visible = true;
  }

  clearLinks(): void {
    if (this.links) {
      this.scene.remove(this.links);
      this.links.geometry.dispose();
      (this.links.material as THREE.Material).dispose();
      this.links = null;
    }
    this.highlight.visible = false;
  }

  /** Render index of the point under the pointer, or null. */
  pick(event: PointerEvent): number | null {
    if (!this.points) return null;
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObject(this.points);
    const first = hits[0];
    return first?.index ?? null;
  }

  cameraPose(): CameraPose {
    const p = this.camera.position;
    const t = this.controls.target;
    return { position: [p.x, p.y, p.z], target: [t.x, t.y, t.z] };
  }

  applyCameraPose(pose: CameraPose): void {
    this.camera.position.set(...pose.position);
    this.controls.target.set(...pose.target);
    this.controls.update();
  }
}
