/** Quaternion helpers shared with the backend's conventions.
 *
 * Quaternions are [w, x, y, z] on the canonical hemisphere (w >= 0).
 * Euler sliders use intrinsic z-y-x: yaw about z, pitch about the new y,
 * roll about the new x, all in degrees. The conversion must agree with the
 * server's geometry module on the shared test-vector table.
 */

export type Quat = [number, number, number, number];
export type Vec3 = [number, number, number];

export interface PoseJson {
  position: Vec3;
  quaternion: Quat;
}

export function quatCanonicalize(q: Quat): Quat {
  const norm = Math.hypot(q[0], q[1], q[2], q[3]);
  if (norm <= 1e-12) {
    throw new Error("zero-norm quaternion");
  }
  const sign = q[0] < 0 ? -1 : 1;
  return [ (sign * q[0]) / norm, (sign * q[1]) / norm, (sign * q[2]) / norm, (sign * q[3]) / norm ];
}

export function eulerZyxToQuat(yawDeg: number, pitchDeg: number, rollDeg: number): Quat {
  const hy = (yawDeg * Math.PI) / 360;
  const hp = (pitchDeg * Math.PI) / 360;
  const hr = (rollDeg * Math.PI) / 360;
  const cy = Math.cos(hy), sy = Math.sin(hy);
  const cp = Math.cos(hp), sp = Math.sin(hp);
  const cr = Math.cos(hr), sr = Math.sin(hr);
  return quatCanonicalize([
    cy * cp * cr + sy * sp * sr,
    cy * cp * sr - sy * sp * cr,
    cy * sp * cr + sy * cp * sr,
    sy * cp * cr - cy * sp * sr,
  ]);
}

export function quatAngularErrorDeg(a: Quat, b: Quat): number {
  const dot = Math.abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]);
  return (2 * Math.acos(Math.min(dot, 1)) * 180) / Math.PI;
}

export function posesClose(a: PoseJson, b: PoseJson, tol = 1e-9): boolean {
  const dp = Math.hypot(
    a.position[0] - b.position[0],
    a.position[1] - b.position[1],
    a.position[2] - b.position[2],
  );
  return dp <= tol && quatAngularErrorDeg(a.quaternion, b.quaternion) <= tol;
}
