"""End-to-end interop: the primary package's HTTP client against a running
sidecar in fixture-replay mode. Exercises the exact wire contract both
sides ship."""

import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from scorer_sidecar.app import create_app
from scorer_sidecar.config import SidecarConfig, default_schema_dir

textmotion = pytest.importorskip("textmotion")

SIDECAR_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = SIDECAR_ROOT / "fixtures"


@pytest.fixture(scope="module")
def base_url():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = SidecarConfig(
        mode="fixtures", fixtures_dir=FIXTURES, schema_dir=default_schema_dir()
    )
    server = uvicorn.Server(
        uvicorn.Config(create_app(config), host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    import requests

    url = f"http://127.0.0.1:{port}"
    while time.time() < deadline:
        try:
            if requests.get(url + "/healthz", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        raise RuntimeError("sidecar did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


def test_primary_client_scores_through_sidecar(base_url):
    from textmotion.kinematics import standing_pose
    from textmotion.protocol import HttpBackend, score_frames
    from textmotion.render import render_frame_png
    from textmotion.skeleton import default_skeleton

    skel = default_skeleton()
    png = render_frame_png(skel, standing_pose(skel))
    backend = HttpBackend(scorer_url=base_url)
    value = score_frames(backend, "raise the left arm", [png, png])
    assert value == 20.0  # default fixture value


def test_primary_client_judges_through_sidecar(base_url):
    from textmotion.kinematics import standing_pose
    from textmotion.protocol import HttpBackend, judge_motion
    from textmotion.render import render_frame_png
    from textmotion.skeleton import default_skeleton

    skel = default_skeleton()
    png = render_frame_png(skel, standing_pose(skel))
    backend = HttpBackend(judge_url=base_url)
    judged = judge_motion(backend, "raise the left arm", [png], repeats=3)
    assert judged.weighted == pytest.approx(3.0, abs=1e-9)


def test_primary_client_proposes_through_sidecar(base_url):
    from textmotion.kinematics import extract_key_positions, standing_pose
    from textmotion.protocol import HttpBackend, ProposalRequest, propose
    from textmotion.skeleton import default_skeleton

    skel = default_skeleton()
    initial = extract_key_positions(skel, standing_pose(skel))
    backend = HttpBackend(proposer_url=base_url)
    # the default replay holds two delta frames
    request = ProposalRequest("walk ahead", None, target_length=2, segment_length=2, initial=initial)
    response = propose(backend, request)
    assert len(response.completion) == 2
    for frame in response.completion:
        assert frame.mode == "absolute"
