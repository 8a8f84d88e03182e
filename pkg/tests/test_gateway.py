import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from pose2view.geometry import Route, quat_canonicalize, route_poses
from pose2view.server import create_app
from pose2view.synthesis import bytes_to_image, synthesize_view


@pytest.fixture(scope="module")
def client(untrained_checkpoint):
    app = create_app()
    app.state.checkpoint = untrained_checkpoint
    return TestClient(app)


def _pose_body(ck, index=0):
    return {
        "position": (ck.normalizer.center + np.array([0.1, 0.2, -0.1]) * ck.normalizer.scale).tolist(),
        "quaternion": [1.0, 0.0, 0.0, 0.0],
    }


# --- /synthesize -------------------------------------------------------------


def test_synthesize_returns_png(client, untrained_checkpoint):
    r = client.post("/synthesize", json=_pose_body(untrained_checkpoint))
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    assert r.headers["x-out-of-volume"] == "false"
    img = Image.open(io.BytesIO(r.content))
    assert img.size == (32, 32)


def test_synthesize_matches_direct_call(client, untrained_checkpoint):
    body = _pose_body(untrained_checkpoint)
    r = client.post("/synthesize", json=body)
    from pose2view.geometry import Pose

    direct = synthesize_view(untrained_checkpoint, Pose(np.array(body["position"]), body["quaternion"]))
    served = bytes_to_image(np.asarray(Image.open(io.BytesIO(r.content))))
    # server output is the same image after one 8-bit quantization
    assert np.abs(served - direct.image).max() <= 1.0 / 127.5 + 1e-6


def test_synthesize_flags_out_of_volume(client, untrained_checkpoint):
    ck = untrained_checkpoint
    body = {
        "position": (ck.normalizer.center + np.array([10.0, 0, 0]) * ck.normalizer.scale).tolist(),
        "quaternion": [1.0, 0.0, 0.0, 0.0],
    }
    r = client.post("/synthesize", json=body)
    assert r.status_code == 200
    assert r.headers["x-out-of-volume"] == "true"


def test_synthesize_rejects_zero_quaternion(client, untrained_checkpoint):
    body = _pose_body(untrained_checkpoint)
    body["quaternion"] = [0.0, 0.0, 0.0, 0.0]
    r = client.post("/synthesize", json=body)
    assert r.status_code == 400
    assert "quaternion" in r.json()["detail"]


def test_synthesize_rejects_missing_field(client):
    r = client.post("/synthesize", json={"position": [0, 0, 0]})
    assert r.status_code == 400


def test_503_before_checkpoint_load():
    app = create_app()
    bare = TestClient(app)
    for call in (
        lambda: bare.post("/synthesize", json={"position": [0, 0, 0], "quaternion": [1, 0, 0, 0]}),
        lambda: bare.get("/scene/meta"),
    ):
        assert call().status_code == 503


# --- /estimate ---------------------------------------------------------------


def _png_upload(image01):
    buf = io.BytesIO()
    Image.fromarray(image01).save(buf, format="PNG")
    return buf.getvalue()


def test_estimate_returns_canonical_pose(client, untrained_checkpoint):
    rng = np.random.default_rng(0)
    png = _png_upload(rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8))
    r = client.post("/estimate", content=png)
    assert r.status_code == 200
    data = r.json()
    q = np.array(data["quaternion"])
    assert len(data["position"]) == 3
    assert abs(np.linalg.norm(q) - 1.0) <= 1e-6
    assert q[0] >= 0


def test_estimate_deterministic(client):
    rng = np.random.default_rng(1)
    png = _png_upload(rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8))
    assert client.post("/estimate", content=png).json() == client.post("/estimate", content=png).json()


def test_estimate_rejects_garbage(client):
    r = client.post("/estimate", content=b"definitely not an image")
    assert r.status_code == 400


def test_estimate_preprocesses_other_sizes(client):
    rng = np.random.default_rng(2)
    png = _png_upload(rng.integers(0, 256, size=(90, 140, 3), dtype=np.uint8))
    r = client.post("/estimate", content=png)
    assert r.status_code == 200


# --- /route and /frames ------------------------------------------------------


def _route_body(ck, num_points=4, kind="linear", apex=None):
    c, s = ck.normalizer.center, ck.normalizer.scale
    body = {
        "kind": kind,
        "start": {"position": (c + np.array([0.5, 0, 0]) * s).tolist(), "quaternion": [1, 0, 0, 0]},
        "end": {"position": (c + np.array([-0.5, 0, 0]) * s).tolist(), "quaternion": [0.5, 0.5, 0.5, 0.5]},
        "num_points": num_points,
    }
    if apex is not None:
        body["apex_offset"] = apex
    return body


def test_route_manifest(client, untrained_checkpoint):
    r = client.post("/route", json=_route_body(untrained_checkpoint, num_points=10))
    assert r.status_code == 200
    data = r.json()
    assert len(data["poses"]) == 10 and len(data["frames"]) == 10
    frame = client.get(data["frames"][0])
    assert frame.status_code == 200 and frame.headers["content-type"] == "image/png"


def test_route_manifest_poses_equal_route_poses(client, untrained_checkpoint):
    body = _route_body(untrained_checkpoint, num_points=6, kind="parabola", apex=[0.0, 1.0, 0.0])
    data = client.post("/route", json=body).json()
    from pose2view.geometry import Pose

    expected = route_poses(
        Route(
            kind="parabola",
            start=Pose(np.array(body["start"]["position"]), body["start"]["quaternion"]),
            end=Pose(np.array(body["end"]["position"]), quat_canonicalize(body["end"]["quaternion"])),
            num_points=6,
            apex_offset=np.array([0.0, 1.0, 0.0]),
        )
    )
    for got, want in zip(data["poses"], expected):
        np.testing.assert_allclose(got["position"], want.position, atol=1e-12)
        np.testing.assert_allclose(got["quaternion"], want.orientation, atol=1e-12)


def test_route_invalid_returns_400(client, untrained_checkpoint):
    body = _route_body(untrained_checkpoint)
    body["num_points"] = 1
    assert client.post("/route", json=body).status_code == 400


def test_identical_route_requests_share_payload(client, untrained_checkpoint):
    body = _route_body(untrained_checkpoint, num_points=3)
    a = client.post("/route", json=body).json()
    b = client.post("/route", json=body).json()
    assert a == b


def test_evicted_frame_returns_410(untrained_checkpoint):
    app = create_app()
    app.state.checkpoint = untrained_checkpoint
    app.state.frames.limit = 4
    c = TestClient(app)
    first = c.post("/route", json=_route_body(untrained_checkpoint, num_points=4)).json()
    # a second route evicts the first one's frames from the size-4 cache
    c.post("/route", json=_route_body(untrained_checkpoint, num_points=4, kind="parabola", apex=[0, 0.5, 0]))
    assert c.get(first["frames"][0]).status_code == 410


# --- /scene/meta and /scene/trajectory ----------------------------------------


def test_scene_meta_contract(client, untrained_checkpoint, desk_datasets):
    _, (train_ds, _) = desk_datasets
    r = client.get("/scene/meta")
    assert r.status_code == 200
    meta = r.json()
    np.testing.assert_allclose(meta["pose_normalizer"]["center"], untrained_checkpoint.normalizer.center)
    assert meta["pose_normalizer"]["scale"] == pytest.approx(untrained_checkpoint.normalizer.scale)
    assert meta["image_size"] == 32
    lo, hi = np.array(meta["pose_bounds"]["min"]), np.array(meta["pose_bounds"]["max"])
    for p in train_ds.poses:
        assert np.all(p.position >= lo - 1e-6) and np.all(p.position <= hi + 1e-6)
    assert client.get("/scene/meta").json() == meta  # stable across calls


def test_scene_trajectory_matches_training_positions(client, desk_datasets):
    _, (train_ds, _) = desk_datasets
    r = client.get("/scene/trajectory")
    positions = np.array(r.json()["positions"])
    assert positions.shape == (len(train_ds), 3)
    np.testing.assert_allclose(positions, np.stack([p.position for p in train_ds.poses]), atol=1e-5)


def test_checkpoint_hot_swap(untrained_checkpoint, desk_datasets, tmp_path):
    cfg, (train_ds, _) = desk_datasets
    from pose2view.trainer import build_train_state, save_train_checkpoint

    state = build_train_state(cfg, train_ds.normalizer)
    path = save_train_checkpoint(state, train_ds, tmp_path / "other.p2v")
    app = create_app()
    app.state.checkpoint = untrained_checkpoint
    c = TestClient(app)
    before = c.get("/scene/meta").json()["iteration"]
    state.iteration = 777
    path = save_train_checkpoint(state, train_ds, tmp_path / "other.p2v")
    app.state.swap_checkpoint(path)
    assert c.get("/scene/meta").json()["iteration"] == 777
    assert before != 777
