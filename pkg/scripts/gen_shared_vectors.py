#!/usr/bin/env python3
"""Regenerate the fixtures shared between the backend and the explorer:
Euler-to-quaternion test vectors and a reference route with its exact poses."""

import json
from pathlib import Path

import numpy as np

from pose2view.geometry import Pose, Route, euler_zyx_to_quat, route_poses

OUT_DIR = Path(__file__).resolve().parent.parent / "frontend" / "shared"


def euler_vectors() -> list[dict]:
    cases = [(0, 0, 0), (90, 0, 0), (0, 90, 0), (0, 0, 90), (180, 0, 0), (45, -30, 60), (-120, 80, -15)]
    rng = np.random.default_rng(404)
    for _ in range(13):
        cases.append(tuple(np.round(rng.uniform([-180, -90, -180], [180, 90, 180]), 3)))
    return [
        {
            "yaw": float(y),
            "pitch": float(p),
            "roll": float(r),
            "quaternion": [float(v) for v in euler_zyx_to_quat(y, p, r)],
        }
        for y, p, r in cases
    ]


def route_fixture() -> dict:
    start = Pose(np.array([1.0, -2.0, 0.5]), euler_zyx_to_quat(30, -10, 5))
    end = Pose(np.array([-1.5, 2.0, 1.0]), euler_zyx_to_quat(-60, 20, 0))
    apex = np.array([0.0, 0.0, 1.2])
    route = Route("parabola", start, end, num_points=7, apex_offset=apex)
    poses = route_poses(route)
    return {
        "request": {
            "kind": "parabola",
            "start": {"position": start.position.tolist(), "quaternion": start.orientation.tolist()},
            "end": {"position": end.position.tolist(), "quaternion": end.orientation.tolist()},
            "num_points": 7,
            "apex_offset": apex.tolist(),
        },
        "expected_poses": [
            {"position": p.position.tolist(), "quaternion": p.orientation.tolist()} for p in poses
        ],
    }


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / "euler_quat_vectors.json").write_text(json.dumps(euler_vectors(), indent=1) + "\n")
    (OUT_DIR / "route_fixture.json").write_text(json.dumps(route_fixture(), indent=1) + "\n")
    print(f"fixtures written to {OUT_DIR}")


if __name__ == "__main__":
    main()
