"""Pose representation, quaternion algebra, pose distances and route interpolation.

Conventions used throughout the package:
  - a pose is a camera position in meters plus a unit quaternion (w, x, y, z)
    on the canonical hemisphere (w >= 0),
  - rotation matrices are camera-to-world, columns = camera axes in world
    coordinates, camera looks along its +z axis, image x right / y down,
  - pose vectors are 7-dimensional: [px, py, pz, qw, qx, qy, qz].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POSE_DIM = 7  # 3 position + 4 quaternion


class InvalidQuaternionError(ValueError):
    """Raised for zero-norm or non-unit quaternions."""


def quat_canonicalize(q) -> np.ndarray:
    """Normalize a 4-vector to a unit quaternion with w >= 0."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise InvalidQuaternionError(f"quaternion must have 4 components, got shape {q.shape}")
    norm = float(np.linalg.norm(q))
    if norm <= 1e-12:
        raise InvalidQuaternionError("zero-norm quaternion cannot be normalized")
    q = q / norm
    if q[0] < 0.0:
        q = -q
    return q


def _check_unit(q, tol: float = 1e-6) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise InvalidQuaternionError(f"quaternion must have 4 components, got shape {q.shape}")
    if abs(float(np.linalg.norm(q)) - 1.0) > tol:
        raise InvalidQuaternionError(f"quaternion is not unit-norm: |q| = {np.linalg.norm(q):.8f}")
    return q


def angular_error(q1, q2) -> float:
    """Rotation angle in degrees between two unit quaternions.

    Insensitive to the double cover: q and -q give zero error.
    """
    q1 = _check_unit(q1)
    q2 = _check_unit(q2)
    dot = abs(float(np.dot(q1, q2)))
    return 2.0 * math.degrees(math.acos(min(dot, 1.0)))


@dataclass(frozen=True)
class Pose:
    """Camera position (meters) plus canonical unit quaternion orientation."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64).reshape(3)
        quat = quat_canonicalize(self.orientation)
        pos.flags.writeable = False
        quat.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation])

    @staticmethod
    def from_vector(v) -> "Pose":
        v = np.asarray(v, dtype=np.float64).reshape(POSE_DIM)
        return Pose(v[:3], v[3:])

    def allclose(self, other: "Pose", atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.position, other.position, atol=atol)
            and np.allclose(self.orientation, other.orientation, atol=atol)
        )


@dataclass(frozen=True)
class Route:
    """Camera path between two poses: straight line or parabolic detour."""

    kind: str
    start: Pose
    end: Pose
    num_points: int
    apex_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.kind not in ("linear", "parabola"):
            raise ValueError(f"route kind must be 'linear' or 'parabola', got {self.kind!r}")
        if self.num_points < 2:
            raise ValueError("route needs num_points >= 2")
        apex = np.asarray(self.apex_offset, dtype=np.float64).reshape(3)
        if self.kind == "linear" and np.any(apex != 0.0):
            raise ValueError("apex_offset must be zero for a linear route")
        apex.flags.writeable = False
        object.__setattr__(self, "apex_offset", apex)


def pose_lerp(start: Pose, end: Pose, t: float) -> Pose:
    """Interpolate poses: linear in position, normalized-linear in orientation.

    Quaternions are sign-aligned before blending so the short arc is taken.
    Endpoints are returned exactly at t = 0 and t = 1.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter must lie in [0, 1], got {t}")
    if t == 0.0:
        return start
    if t == 1.0:
        return end
    pos = (1.0 - t) * start.position + t * end.position
    q_end = end.orientation
    if float(np.dot(start.orientation, q_end)) < 0.0:
        q_end = -q_end
    quat = (1.0 - t) * start.orientation + t * q_end
    return Pose(pos, quat_canonicalize(quat))


def route_poses(route: Route) -> list[Pose]:
    """Sample num_points poses along a route, endpoints exact.

    The parabola adds apex_offset * 4t(1-t) to the linear position, a bump
    that peaks at mid-route and vanishes at both endpoints.
    """
    ts = np.linspace(0.0, 1.0, route.num_points)
    poses = []
    for i, t in enumerate(ts):
        if i == 0:
            poses.append(route.start)
            continue
        if i == route.num_points - 1:
            poses.append(route.end)
            continue
        base = pose_lerp(route.start, route.end, float(t))
        if route.kind == "parabola":
            bump = 4.0 * t * (1.0 - t) * route.apex_offset
            base = Pose(base.position + bump, base.orientation)
        poses.append(base)
    return poses


def pose_residual_norm(a, b, orientation_weight: float = 1.0) -> float:
    """Distance between two 7-d pose vectors.

    L1 norm of the position residual plus orientation_weight times the L1 norm
    of the orientation residual. Positions are expected in scene-normalized
    coordinates so the two terms are commensurate.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (POSE_DIM,) or b.shape != (POSE_DIM,):
        raise ValueError(f"pose vectors must have shape ({POSE_DIM},), got {a.shape} and {b.shape}")
    diff = np.abs(a - b)
    return float(diff[:3].sum() + orientation_weight * diff[3:].sum())


@dataclass(frozen=True)
class PoseNormalizer:
    """Affine map taking scene positions into roughly [-1, 1]^3."""

    center: np.ndarray
    scale: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).reshape(3)
        center.flags.writeable = False
        object.__setattr__(self, "center", center)
        if not self.scale > 0.0:
            raise ValueError("normalizer scale must be positive")

    def normalize_position(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=np.float64) - self.center) / self.scale

    def denormalize_position(self, p) -> np.ndarray:
        return np.asarray(p, dtype=np.float64) * self.scale + self.center

    def pose_to_vector(self, pose: Pose) -> np.ndarray:
        return np.concatenate([self.normalize_position(pose.position), pose.orientation])

    def vector_to_pose(self, v) -> Pose:
        v = np.asarray(v, dtype=np.float64).reshape(POSE_DIM)
        return Pose(self.denormalize_position(v[:3]), quat_canonicalize(v[3:]))


def fit_pose_normalizer(poses: list[Pose]) -> PoseNormalizer:
    """Center on the mean position, scale by the largest L-inf extent."""
    if not poses:
        raise ValueError("cannot fit a normalizer on an empty pose list")
    positions = np.stack([p.position for p in poses])
    center = positions.mean(axis=0)
    scale = float(np.abs(positions - center).max())
    return PoseNormalizer(center, max(scale, 1e-6))


# ---------------------------------------------------------------------------
# rotation helpers


def quat_to_matrix(q) -> np.ndarray:
    """Unit quaternion -> 3x3 camera-to-world rotation matrix."""
    w, x, y, z = _check_unit(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def matrix_to_quat(R) -> np.ndarray:
    """Best-fit canonical quaternion for a (possibly noisy) rotation matrix.

    Uses the eigenvector of the Davenport K matrix, which coincides with the
    exact conversion for orthonormal input and yields the nearest rotation
    for slightly perturbed input.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got {R.shape}")
    K = np.array(
        [
            [R[0, 0] + R[1, 1] + R[2, 2], R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]],
            [R[2, 1] - R[1, 2], R[0, 0] - R[1, 1] - R[2, 2], R[0, 1] + R[1, 0], R[0, 2] + R[2, 0]],
            [R[0, 2] - R[2, 0], R[0, 1] + R[1, 0], R[1, 1] - R[0, 0] - R[2, 2], R[1, 2] + R[2, 1]],
            [R[1, 0] - R[0, 1], R[0, 2] + R[2, 0], R[1, 2] + R[2, 1], R[2, 2] - R[0, 0] - R[1, 1]],
        ]
    ) / 3.0
    eigvals, eigvecs = np.linalg.eigh(K)
    return quat_canonicalize(eigvecs[:, np.argmax(eigvals)])


def rotation_deviation(R) -> float:
    """Max-abs deviation of R^T R from the identity (orthonormality check)."""
    R = np.asarray(R, dtype=np.float64)
    return float(np.abs(R.T @ R - np.eye(3)).max())


def look_at_quat(eye, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Orientation of a camera at `eye` looking at `target`.

    Camera +z points at the target; `up` fixes the roll (image -y is as
    aligned with `up` as possible).
    """
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValueError("look_at target coincides with the eye position")
    z = forward / norm
    up = np.asarray(up, dtype=np.float64)
    x = np.cross(z, up)
    if np.linalg.norm(x) < 1e-8:  # looking straight along up: pick any lateral axis
        up = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        x = np.cross(z, up)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return matrix_to_quat(np.stack([x, y, z], axis=1))


def euler_zyx_to_quat(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """Intrinsic z-y-x Euler angles (degrees) -> canonical quaternion.

    This is the convention shared with the browser explorer: yaw about z,
    then pitch about the new y, then roll about the new x.
    """
    hy, hp, hr = (math.radians(a) / 2.0 for a in (yaw_deg, pitch_deg, roll_deg))
    cy, sy = math.cos(hy), math.sin(hy)
    cp, sp = math.cos(hp), math.sin(hp)
    cr, sr = math.cos(hr), math.sin(hr)
    q = np.array(
        [
            cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr,
        ]
    )
    return quat_canonicalize(q)


def quat_multiply(q1, q2) -> np.ndarray:
    """Hamilton product, canonicalized."""
    w1, x1, y1, z1 = np.asarray(q1, dtype=np.float64)
    w2, x2, y2, z2 = np.asarray(q2, dtype=np.float64)
    return quat_canonicalize(
        np.array(
            [
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            ]
        )
    )
