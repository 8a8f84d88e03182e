"""HTTP gateway: synthesis, pose estimation and route rendering over a checkpoint.

Wire format: positions in meters, quaternions (w, x, y, z); normalization is
a server concern. All image payloads are PNG. The only stateful piece is the
route frame cache (bounded LRU); a checkpoint swap is a single reference
assignment, so in-flight requests see either the old or the new snapshot.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
from collections import OrderedDict

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image, UnidentifiedImageError

from .checkpoint import load_model_checkpoint
from .data import preprocess
from .geometry import InvalidQuaternionError, Pose, Route, quat_canonicalize
from .model import estimate_pose
from .synthesis import image_to_bytes, synthesize_route, synthesize_view

FRAME_CACHE_LIMIT = 1024


class FrameCache:
    """Thread-safe LRU of rendered PNG frames, bounded by frame count."""

    def __init__(self, limit: int = FRAME_CACHE_LIMIT):
        self.limit = limit
        self._lock = threading.Lock()
        self._frames: OrderedDict[str, bytes] = OrderedDict()

    def put(self, key: str, png: bytes) -> None:
        with self._lock:
            self._frames[key] = png
            self._frames.move_to_end(key)
            while len(self._frames) > self.limit:
                self._frames.popitem(last=False)

    def get(self, key: str) -> bytes | None:
        with self._lock:
            png = self._frames.get(key)
            if png is not None:
                self._frames.move_to_end(key)
            return png


def _png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image_to_bytes(image)).save(buf, format="PNG")
    return buf.getvalue()


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": message})


def _parse_pose_fields(data: dict, prefix: str = "") -> Pose:
    for field in ("position", "quaternion"):
        if field not in data:
            raise ValueError(f"{prefix}{field}: field required")
    position = np.asarray(data["position"], dtype=np.float64)
    quaternion = np.asarray(data["quaternion"], dtype=np.float64)
    if position.shape != (3,):
        raise ValueError(f"{prefix}position: expected 3 numbers")
    if quaternion.shape != (4,):
        raise ValueError(f"{prefix}quaternion: expected 4 numbers (w, x, y, z)")
    norm = float(np.linalg.norm(quaternion))
    if not 0.9 <= norm <= 1.1:
        raise ValueError(f"{prefix}quaternion: norm {norm:.4f} outside [0.9, 1.1]")
    return Pose(position, quat_canonicalize(quaternion))


def _pose_json(pose: Pose) -> dict:
    return {"position": pose.position.tolist(), "quaternion": pose.orientation.tolist()}


def create_app(checkpoint_path=None, static_dir=None) -> FastAPI:
    app = FastAPI(title="pose2view gateway")
    app.state.checkpoint = None if checkpoint_path is None else load_model_checkpoint(checkpoint_path)
    app.state.frames = FrameCache()

    def swap_checkpoint(path) -> None:
        app.state.checkpoint = load_model_checkpoint(path)  # atomic reference swap

    app.state.swap_checkpoint = swap_checkpoint

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        details = "; ".join(
            ".".join(str(p) for p in err.get("loc", [])) + ": " + err.get("msg", "invalid") for err in exc.errors()
        )
        return _bad_request(details or "malformed request body")

    def current_checkpoint():
        ck = app.state.checkpoint
        if ck is None:
            return None
        return ck

    @app.post("/synthesize")
    async def synthesize(request: Request):
        ck = current_checkpoint()
        if ck is None:
            return JSONResponse(status_code=503, content={"detail": "no checkpoint loaded"})
        try:
            body = json.loads(await request.body())
            pose = _parse_pose_fields(body)
        except (ValueError, InvalidQuaternionError) as exc:
            return _bad_request(str(exc))
        view = synthesize_view(ck, pose)
        return Response(
            content=_png_bytes(view.image),
            media_type="image/png",
            headers={"X-Out-Of-Volume": "true" if view.out_of_volume else "false"},
        )

    @app.post("/estimate")
    async def estimate(request: Request):
        ck = current_checkpoint()
        if ck is None:
            return JSONResponse(status_code=503, content={"detail": "no checkpoint loaded"})
        raw = await request.body()
        try:
            with Image.open(io.BytesIO(raw)) as im:
                pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
        except (UnidentifiedImageError, OSError, ValueError):
            return _bad_request("request body is not a decodable image")
        if pixels.shape[0] == ck.image_size and pixels.shape[1] == ck.image_size:
            img = (pixels.astype(np.float32) / 127.5) - 1.0  # already final size: no resample
        else:
            img = preprocess(pixels, mode="eval", image_size=ck.image_size)
        vec = estimate_pose(ck.discriminator, img)
        pose = ck.normalizer.vector_to_pose(vec)
        return _pose_json(pose)

    @app.post("/route")
    async def route(request: Request):
        ck = current_checkpoint()
        if ck is None:
            return JSONResponse(status_code=503, content={"detail": "no checkpoint loaded"})
        try:
            body = json.loads(await request.body())
            start = _parse_pose_fields(body.get("start", {}), prefix="start.")
            end = _parse_pose_fields(body.get("end", {}), prefix="end.")
            route = Route(
                kind=body.get("kind", "linear"),
                start=start,
                end=end,
                num_points=int(body.get("num_points", 2)),
                apex_offset=np.asarray(body.get("apex_offset", [0.0, 0.0, 0.0]), dtype=np.float64),
            )
        except (ValueError, TypeError, InvalidQuaternionError) as exc:
            return _bad_request(str(exc))
        session = hashlib.sha1(json.dumps(body, sort_keys=True).encode()).hexdigest()[:12]
        views = synthesize_route(ck, route)
        for i, view in enumerate(views):
            app.state.frames.put(f"{session}/{i}", _png_bytes(view.image))
        return {
            "session_id": session,
            "poses": [_pose_json(v.pose) for v in views],
            "frames": [f"/frames/{session}/{i}" for i in range(len(views))],
            "out_of_volume": [v.out_of_volume for v in views],
        }

    @app.get("/frames/{session_id}/{index}")
    async def get_frame(session_id: str, index: int):
        png = app.state.frames.get(f"{session_id}/{index}")
        if png is None:
            return JSONResponse(status_code=410, content={"detail": "frame evicted or unknown; re-render the route"})
        return Response(content=png, media_type="image/png")

    @app.get("/scene/meta")
    async def scene_meta():
        ck = current_checkpoint()
        if ck is None:
            return JSONResponse(status_code=503, content={"detail": "no checkpoint loaded"})
        return {
            "scene_id": ck.scene_id,
            "image_size": ck.image_size,
            "pose_normalizer": {"center": ck.normalizer.center.tolist(), "scale": ck.normalizer.scale},
            "pose_bounds": ck.pose_bounds,
            "iteration": ck.iteration,
        }

    @app.get("/scene/trajectory")
    async def scene_trajectory():
        ck = current_checkpoint()
        if ck is None:
            return JSONResponse(status_code=503, content={"detail": "no checkpoint loaded"})
        return {"positions": ck.train_positions.tolist()}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="explorer")

    return app
