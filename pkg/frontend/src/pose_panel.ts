/** Slider-driven live synthesis: six pose sliders feeding a debounced view. */

import { GatewayClient, SceneMeta } from "./api.js";
import { LatestWins } from "./debounce.js";
import { eulerZyxToQuat, PoseJson, Vec3 } from "./geometry.js";

interface SliderSpec {
  id: string;
  label: string;
  min: number;
  max: number;
  step: number;
  value: number;
}

export function currentPose(values: Record<string, number>): PoseJson {
  return {
    position: [values.x, values.y, values.z] as Vec3,
    quaternion: eulerZyxToQuat(values.yaw, values.pitch, values.roll),
  };
}

export class PosePanel {
  private values: Record<string, number> = {};
  private scheduler: LatestWins<{ pose: PoseJson; url: string; outOfVolume: boolean }>;
  private view: HTMLImageElement;
  private readout: HTMLElement;
  private banner: HTMLElement;
  private lastUrl: string | null = null;
  public lastRendered: PoseJson | null = null;

  constructor(
    private root: HTMLElement,
    private client: GatewayClient,
    private meta: SceneMeta,
    private onPoseChange?: (pose: PoseJson) => void,
  ) {
    this.view = document.createElement("img");
    this.view.className = "live-view";
    this.view.width = 256;
    this.view.height = 256;
    this.readout = document.createElement("pre");
    this.readout.className = "readout";
    this.banner = document.createElement("div");
    this.banner.className = "banner hidden";
    this.scheduler = new LatestWins(
      ({ pose, url, outOfVolume }) => {
        if (this.lastUrl !== null) URL.revokeObjectURL(this.lastUrl);
        this.lastUrl = url;
        this.view.src = url;
        this.lastRendered = pose;
        this.readout.textContent = formatPose(pose) + (outOfVolume ? "\n(outside training volume)" : "");
        this.hideBanner();
      },
      (err) => this.showBanner(String(err)),
    );
    this.build();
  }

  private sliderSpecs(): SliderSpec[] {
    const { min, max } = this.meta.pose_bounds;
    const pad = (lo: number, hi: number) => Math.max(0.25 * (hi - lo), 0.5);
    const mid = (lo: number, hi: number) => 0.5 * (lo + hi);
    const axes = ["x", "y", "z"].map((axis, i) => ({
      id: axis,
      label: `${axis} (m)`,
      min: min[i] - pad(min[i], max[i]),
      max: max[i] + pad(min[i], max[i]),
      step: 0.01,
      value: mid(min[i], max[i]),
    }));
    return [
      ...axes,
      { id: "yaw", label: "yaw (deg)", min: -180, max: 180, step: 1, value: 0 },
      { id: "pitch", label: "pitch (deg)", min: -90, max: 90, step: 1, value: 0 },
      { id: "roll", label: "roll (deg)", min: -180, max: 180, step: 1, value: 0 },
    ];
  }

  private build(): void {
    const controls = document.createElement("div");
    controls.className = "sliders";
    for (const spec of this.sliderSpecs()) {
      this.values[spec.id] = spec.value;
      const row = document.createElement("label");
      row.className = "slider-row";
      const name = document.createElement("span");
      name.textContent = spec.label;
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = String(spec.step);
      input.value = String(spec.value);
      input.dataset.slider = spec.id;
      const num = document.createElement("span");
      num.className = "slider-value";
      num.textContent = spec.value.toFixed(2);
      input.addEventListener("input", () => {
        this.values[spec.id] = Number(input.value);
        num.textContent = Number(input.value).toFixed(2);
        this.requestRender();
      });
      row.append(name, input, num);
      controls.appendChild(row);
    }
    this.root.append(this.banner, this.view, controls, this.readout);
    this.requestRender();
  }

  pose(): PoseJson {
    return currentPose(this.values);
  }

  private requestRender(): void {
    const pose = this.pose();
    this.onPoseChange?.(pose);
    this.scheduler.submit(async () => {
      const result = await this.client.synthesize(pose);
      const url = URL.createObjectURL(new Blob([result.bytes], { type: "image/png" }));
      return { pose, url, outOfVolume: result.outOfVolume };
    });
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
  }
}

export function formatPose(pose: PoseJson): string {
  const p = pose.position.map((v) => v.toFixed(3)).join(", ");
  const q = pose.quaternion.map((v) => v.toFixed(4)).join(", ");
  return `position [${p}] m\nquaternion (w,x,y,z) [${q}]`;
}
