import base64
import json

import httpx
import numpy as np
import pytest

from pointt2i.backend import (
    STUB_BACKGROUND,
    GenRequest,
    GenResult,
    HttpBackend,
    StubBackend,
    stub_backend,
)
from pointt2i.errors import BackendRejected, BackendUnavailable, DecodeError
from pointt2i.projection import normalize_to_canvas, select_projection
from pointt2i.raster import decode_png, encode_png, png_size
from pointt2i.render import render_skeleton, to_keypoint_conditioning


@pytest.fixture
def skeleton_png(tpose):
    return render_skeleton(normalize_to_canvas(select_projection(tpose)))


@pytest.fixture
def keypoints(tpose):
    return to_keypoint_conditioning(normalize_to_canvas(select_projection(tpose)))


class TestGenRequest:
    def test_exactly_one_conditioning(self, keypoints, skeleton_png):
        with pytest.raises(ValueError):
            GenRequest(prompt="p", seed=0)
        with pytest.raises(ValueError):
            GenRequest(prompt="p", seed=0, keypoints=keypoints, skeleton_png=skeleton_png)

    def test_wire_round_trip_skeleton(self, skeleton_png):
        req = GenRequest(prompt="p", seed=7, skeleton_png=skeleton_png, params={"steps": "20"})
        wire = json.loads(json.dumps(req.to_wire()))
        back = GenRequest.from_wire(wire)
        assert back == req
        assert wire["conditioning"]["kind"] == "skeleton"

    def test_wire_round_trip_keypoints(self, keypoints):
        req = GenRequest(prompt="p", seed=7, keypoints=keypoints)
        back = GenRequest.from_wire(req.to_wire())
        assert back.conditioning_kind == "keypoints"
        for got, want in zip(back.keypoints.points, keypoints.points):
            assert got == pytest.approx(want)

    def test_digest_elides_payload(self, skeleton_png):
        digest = GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png).digest()
        assert digest["conditioning_kind"] == "skeleton"
        assert "skeleton_png" not in digest
        assert "keypoints" not in digest

    def test_result_validates_png(self):
        with pytest.raises(DecodeError):
            GenResult(image_png=b"junk", backend_id="x", latency_ms=0.0, seed=0)


class TestStubBackend:
    def test_deterministic(self, skeleton_png):
        req = GenRequest(prompt="p", seed=3, skeleton_png=skeleton_png)
        assert stub_backend().generate(req).image_png == stub_backend().generate(req).image_png

    def test_seed_changes_output(self, skeleton_png):
        a = stub_backend().generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))
        b = stub_backend().generate(GenRequest(prompt="p", seed=2, skeleton_png=skeleton_png))
        assert a.image_png != b.image_png

    def test_watermark_encodes_seed(self, skeleton_png):
        seed = 0b1011
        result = stub_backend().generate(
            GenRequest(prompt="p", seed=seed, skeleton_png=skeleton_png))
        pixels = decode_png(result.image_png)
        block = pixels.shape[1] // 64
        for bit in range(8):
            want = 255 if (seed >> bit) & 1 else 0
            assert pixels[-1, bit * block, 0] == want

    def test_skeleton_composited_over_gray(self, skeleton_png):
        result = stub_backend().generate(
            GenRequest(prompt="p", seed=0, skeleton_png=skeleton_png))
        pixels = decode_png(result.image_png)
        skeleton = decode_png(skeleton_png)
        body = pixels[:-4]  # above the watermark rows
        mask = np.any(skeleton[:-4] != skeleton[0, 0], axis=2)
        assert np.array_equal(body[mask], skeleton[:-4][mask])
        assert np.all(body[~mask] == np.array(STUB_BACKGROUND, dtype=np.uint8))

    def test_keypoint_conditioning_draws_discs(self, keypoints):
        result = stub_backend().generate(
            GenRequest(prompt="p", seed=0, keypoints=keypoints))
        pixels = decode_png(result.image_png)
        x, y = keypoints.points[0]
        assert tuple(pixels[int(y * 512), int(x * 512)]) == (255, 255, 255)

    def test_custom_size(self, skeleton_png):
        result = stub_backend().generate(
            GenRequest(prompt="p", seed=0, width=64, height=96, skeleton_png=skeleton_png))
        assert png_size(result.image_png) == (64, 96)


def fake_http_client(responses):
    """httpx.Client with a transport that replays canned responses."""
    queue = list(responses)

    def handler(request):
        item = queue.pop(0)
        if isinstance(item, Exception):
            raise item
        status, payload = item
        return httpx.Response(status, json=payload)

    return httpx.Client(transport=httpx.MockTransport(handler))


def good_payload(seed=5):
    png = encode_png(np.zeros((4, 4, 3), dtype=np.uint8))
    return {"image_b64": base64.b64encode(png).decode("ascii"), "seed": seed}


class TestHttpBackend:
    def backend(self, responses, sleeps=None):
        sleeps = sleeps if sleeps is not None else []
        return HttpBackend("http://gen.test", client=fake_http_client(responses),
                           sleep=sleeps.append), sleeps

    def test_success(self, skeleton_png):
        backend, sleeps = self.backend([(200, good_payload(seed=5))])
        result = backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))
        assert result.seed == 5
        assert png_size(result.image_png) == (4, 4)
        assert sleeps == []

    def test_retries_503_then_succeeds(self, skeleton_png):
        backend, sleeps = self.backend([(503, {}), (200, good_payload())])
        backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))
        assert sleeps == [0.5]

    def test_unavailable_after_retries(self, skeleton_png):
        backend, sleeps = self.backend([(503, {})] * 4)
        with pytest.raises(BackendUnavailable):
            backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))
        assert sleeps == [0.5, 1.0, 2.0]

    def test_client_error_not_retried(self, skeleton_png):
        backend, sleeps = self.backend([(422, {"error": "bad pose"})])
        with pytest.raises(BackendRejected):
            backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))
        assert sleeps == []

    def test_malformed_payload(self, skeleton_png):
        backend, _ = self.backend([(200, {"unexpected": True})])
        with pytest.raises(DecodeError):
            backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))

    def test_truncated_image(self, skeleton_png):
        payload = {"image_b64": base64.b64encode(b"\x89PNG\r\n\x1a\ntrunc").decode("ascii")}
        backend, _ = self.backend([(200, payload)])
        with pytest.raises(DecodeError):
            backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))

    def test_connection_errors_retried(self, skeleton_png):
        backend, sleeps = self.backend([
            httpx.ConnectError("refused"),
            (200, good_payload()),
        ])
        backend.generate(GenRequest(prompt="p", seed=1, skeleton_png=skeleton_png))
        assert sleeps == [0.5]
