/** Route building: pin endpoints, preview the rendered strip, scrub frames. */

import { GatewayClient, RouteManifest, RouteRequest } from "./api.js";
import { formatPose } from "./pose_panel.js";
import { PoseJson, Vec3 } from "./geometry.js";

export function buildRouteRequest(
  start: PoseJson,
  end: PoseJson,
  kind: "linear" | "parabola",
  numPoints: number,
  apex: Vec3,
): RouteRequest {
  const request: RouteRequest = { kind, start, end, num_points: numPoints };
  if (kind === "parabola") {
    request.apex_offset = apex;
  }
  return request;
}

export class RouteBuilder {
  private start: PoseJson | null = null;
  private end: PoseJson | null = null;
  private manifest: RouteManifest | null = null;
  private status: HTMLElement;
  private strip: HTMLElement;
  private preview: HTMLImageElement;
  private scrubber: HTMLInputElement;
  private poseReadout: HTMLElement;

  constructor(
    private root: HTMLElement,
    private client: GatewayClient,
    private currentPose: () => PoseJson,
  ) {
    this.status = el("div", "status");
    this.strip = el("div", "strip");
    this.preview = document.createElement("img");
    this.preview.className = "route-preview";
    this.preview.width = 192;
    this.preview.height = 192;
    this.scrubber = document.createElement("input");
    this.scrubber.type = "range";
    this.scrubber.min = "0";
    this.scrubber.max = "0";
    this.scrubber.value = "0";
    this.poseReadout = el("pre", "readout");
    this.build();
  }

  private build(): void {
    const controls = el("div", "route-controls");
    const pinStart = button("pin start", () => {
      this.start = this.currentPose();
      this.status.textContent = `start pinned: ${formatPose(this.start).split("\n")[0]}`;
    });
    const pinEnd = button("pin end", () => {
      this.end = this.currentPose();
      this.status.textContent = `end pinned: ${formatPose(this.end).split("\n")[0]}`;
    });
    const kind = document.createElement("select");
    for (const value of ["linear", "parabola"]) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = value;
      kind.appendChild(opt);
    }
    const n = numberInput("frames", 8, 2, 64);
    const apexInputs = (["ax", "ay", "az"] as const).map((id) => numberInput(id, 0, -50, 50, 0.1));
    const render = button("render route", async () => {
      if (!this.start || !this.end) {
        this.status.textContent = "pin both endpoints first";
        return;
      }
      const apex = apexInputs.map((i) => Number(i.value)) as Vec3;
      const request = buildRouteRequest(
        this.start,
        this.end,
        kind.value as "linear" | "parabola",
        Number(n.value),
        apex,
      );
      try {
        this.showManifest(await this.client.route(request));
      } catch (err) {
        this.status.textContent = String(err);
      }
    });
    controls.append(pinStart, pinEnd, kind, label("n"), n, label("apex"), ...apexInputs, render);
    this.scrubber.addEventListener("input", () => this.showFrame(Number(this.scrubber.value)));
    this.root.append(controls, this.status, this.strip, this.scrubber, this.preview, this.poseReadout);
  }

  private showManifest(manifest: RouteManifest): void {
    this.manifest = manifest;
    this.status.textContent = `${manifest.frames.length} frames (session ${manifest.session_id})`;
    this.strip.textContent = "";
    manifest.frames.forEach((path, i) => {
      const thumb = document.createElement("img");
      thumb.src = this.client.frameUrl(path);
      thumb.width = 48;
      thumb.height = 48;
      thumb.addEventListener("click", () => this.showFrame(i));
      this.strip.appendChild(thumb);
    });
    this.scrubber.max = String(manifest.frames.length - 1);
    this.showFrame(0);
  }

  private showFrame(index: number): void {
    if (!this.manifest) return;
    const clamped = Math.min(Math.max(index, 0), this.manifest.frames.length - 1);
    this.scrubber.value = String(clamped);
    this.preview.src = this.client.frameUrl(this.manifest.frames[clamped]);
    this.poseReadout.textContent = `frame ${clamped}\n` + formatPose(this.manifest.poses[clamped]);
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function button(text: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = text;
  b.addEventListener("click", onClick);
  return b;
}

function label(text: string): HTMLSpanElement {
  const s = document.createElement("span");
  s.textContent = text;
  s.className = "inline-label";
  return s;
}

function numberInput(name: string, value: number, min: number, max: number, step = 1): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "number";
  input.title = name;
  input.value = String(value);
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  input.className = "num";
  return input;
}
