/** Page assembly: pose sliders, route builder and localization panels. */

import { GatewayClient } from "./api.js";
import { LocalizePanel } from "./localize_panel.js";
import { PosePanel } from "./pose_panel.js";
import { RouteBuilder } from "./route_builder.js";

async function boot(): Promise<void> {
  const client = new GatewayClient("");
  const status = document.getElementById("status")!;
  try {
    const meta = await client.meta();
    status.textContent = `scene ${meta.scene_id} @ ${meta.image_size}px, iteration ${meta.iteration}`;
    const posePanel = new PosePanel(document.getElementById("pose-panel")!, client, meta);
    new RouteBuilder(document.getElementById("route-panel")!, client, () => posePanel.pose());
    new LocalizePanel(document.getElementById("localize-panel")!, client);
  } catch (err) {
    status.textContent = `gateway unavailable: ${err}`;
  }
}

window.addEventListener("load", () => void boot());
