/** Typed client for the gateway HTTP API. */

import type { PoseJson, Vec3 } from "./geometry.js";

export interface SceneMeta {
  scene_id: string;
  image_size: number;
  pose_normalizer: { center: Vec3; scale: number };
  pose_bounds: { min: Vec3; max: Vec3 };
  iteration: number;
}

export interface RouteRequest {
  kind: "linear" | "parabola";
  start: PoseJson;
  end: PoseJson;
  num_points: number;
  apex_offset?: Vec3;
}

export interface RouteManifest {
  session_id: string;
  poses: PoseJson[];
  frames: string[];
  out_of_volume: boolean[];
}

export interface SynthesisResult {
  bytes: ArrayBuffer;
  outOfVolume: boolean;
}

export class GatewayError extends Error {
  constructor(public status: number, detail: string) {
    super(`gateway ${status}: ${detail}`);
  }
}

async function failFrom(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  throw new GatewayError(response.status, detail);
}

export class GatewayClient {
  constructor(
    private base: string = "",
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  async meta(): Promise<SceneMeta> {
    const r = await this.fetchImpl(this.url("/scene/meta"));
    if (!r.ok) await failFrom(r);
    return r.json();
  }

  async trajectory(): Promise<Vec3[]> {
    const r = await this.fetchImpl(this.url("/scene/trajectory"));
    if (!r.ok) await failFrom(r);
    return (await r.json()).positions;
  }

  async synthesize(pose: PoseJson): Promise<SynthesisResult> {
    const r = await this.fetchImpl(this.url("/synthesize"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(pose),
    });
    if (!r.ok) await failFrom(r);
    return {
      bytes: await r.arrayBuffer(),
      outOfVolume: r.headers.get("x-out-of-volume") === "true",
    };
  }

  async estimate(imageBytes: ArrayBuffer | Uint8Array): Promise<PoseJson> {
    const r = await this.fetchImpl(this.url("/estimate"), {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: imageBytes as BodyInit,
    });
    if (!r.ok) await failFrom(r);
    return r.json();
  }

  async route(request: RouteRequest): Promise<RouteManifest> {
    const r = await this.fetchImpl(this.url("/route"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!r.ok) await failFrom(r);
    return r.json();
  }

  frameUrl(path: string): string {
    return this.url(path);
  }
}
