/** Upload-and-localize: estimate a pose and plot it over the training trajectory. */

import { GatewayClient } from "./api.js";
import { formatPose } from "./pose_panel.js";
import { PoseJson, Vec3 } from "./geometry.js";

export interface PlotTransform {
  toCanvas(p: Vec3): [number, number];
}

/** Top-down (x, y) plot transform with padded bounds fitted to the data. */
export function fitTransform(points: Vec3[], width: number, height: number, margin = 12): PlotTransform {
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const lo: [number, number] = [Math.min(...xs), Math.min(...ys)];
  const hi: [number, number] = [Math.max(...xs), Math.max(...ys)];
  const span = Math.max(hi[0] - lo[0], hi[1] - lo[1], 1e-6);
  const scale = (Math.min(width, height) - 2 * margin) / span;
  return {
    toCanvas(p: Vec3): [number, number] {
      return [margin + (p[0] - lo[0]) * scale, height - margin - (p[1] - lo[1]) * scale];
    },
  };
}

export class LocalizePanel {
  private canvas: HTMLCanvasElement;
  private readout: HTMLElement;
  private trajectory: Vec3[] = [];
  private lastEstimate: PoseJson | null = null;

  constructor(
    private root: HTMLElement,
    private client: GatewayClient,
  ) {
    this.canvas = document.createElement("canvas");
    this.canvas.width = 360;
    this.canvas.height = 360;
    this.canvas.className = "plot";
    this.readout = document.createElement("pre");
    this.readout.className = "readout";
    this.build();
  }

  private build(): void {
    const input = document.createElement("input");
    input.type = "file";
    input.accept = "image/*";
    input.addEventListener("change", async () => {
      const file = input.files?.[0];
      if (!file) return;
      try {
        const bytes = await file.arrayBuffer();
        this.lastEstimate = await this.client.estimate(bytes);
        this.readout.textContent = "estimated\n" + formatPose(this.lastEstimate);
        this.draw();
      } catch (err) {
        this.readout.textContent = String(err);
      }
    });
    this.root.append(input, this.canvas, this.readout);
    void this.loadTrajectory();
  }

  private async loadTrajectory(): Promise<void> {
    try {
      this.trajectory = await this.client.trajectory();
      this.draw();
    } catch (err) {
      this.readout.textContent = String(err);
    }
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || this.trajectory.length === 0) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const marker = this.lastEstimate ? [this.lastEstimate.position] : [];
    const transform = fitTransform([...this.trajectory, ...(marker as Vec3[])], width, height);
    ctx.fillStyle = "#4a7";
    for (const p of this.trajectory) {
      const [cx, cy] = transform.toCanvas(p);
      ctx.fillRect(cx - 1.5, cy - 1.5, 3, 3);
    }
    if (this.lastEstimate) {
      const [cx, cy] = transform.toCanvas(this.lastEstimate.position as Vec3);
      ctx.strokeStyle = "#d33";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(cx, cy, 7, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(cx - 10, cy);
      ctx.lineTo(cx + 10, cy);
      ctx.moveTo(cx, cy - 10);
      ctx.lineTo(cx, cy + 10);
      ctx.stroke();
    }
  }
}
