import pytest

from pointt2i.client import (
    ChatMessage,
    ChatReply,
    ChatRequest,
    ImagePart,
    KindDispatchTransport,
    LlmClient,
    LlmConfig,
    ScriptedTransport,
    TransportResult,
    mock_transport,
)
from pointt2i.errors import AuthError, ProtocolError, ScriptExhausted, TransportError
from pointt2i.protocol import build_image_feedback_prompt, build_keypoint_prompt

import random


def make_client(script, config=None, sleeps=None):
    transport = ScriptedTransport(script)
    sleeps = sleeps if sleeps is not None else []
    client = LlmClient(
        config or LlmConfig(),
        transport=transport,
        sleep=sleeps.append,
        rng=random.Random(0),
    )
    return client, transport, sleeps


class TestComplete:
    def test_single_scripted_reply(self):
        client, transport, sleeps = make_client(["hello"])
        reply = client.complete(ChatRequest.text_only("m", "hi"))
        assert reply.text == "hello"
        assert sleeps == []
        assert len(transport.requests) == 1

    def test_fail_twice_then_succeed(self):
        script = [
            TransportResult(status=503),
            TimeoutError("slow"),
            "recovered",
        ]
        client, transport, sleeps = make_client(script)
        reply = client.complete(ChatRequest.text_only("m", "hi"))
        assert reply.text == "recovered"
        assert len(transport.requests) == 3
        # two backoffs with full jitter: bounded by 1s then 2s
        assert len(sleeps) == 2
        assert 0 <= sleeps[0] <= 1.0
        assert 0 <= sleeps[1] <= 2.0

    def test_retries_exhausted(self):
        client, transport, _ = make_client([TransportResult(status=500)] * 4)
        with pytest.raises(TransportError):
            client.complete(ChatRequest.text_only("m", "hi"))
        assert len(transport.requests) == 4  # 1 + max_retries

    def test_auth_error_not_retried(self):
        client, transport, sleeps = make_client([TransportResult(status=401)])
        with pytest.raises(AuthError):
            client.complete(ChatRequest.text_only("m", "hi"))
        assert len(transport.requests) == 1
        assert sleeps == []

    def test_protocol_error_on_junk_payload(self):
        client, _, _ = make_client([TransportResult(status=200, payload={"nope": 1})])
        with pytest.raises(ProtocolError):
            client.complete(ChatRequest.text_only("m", "hi"))

    def test_history_records_each_call_once(self):
        client, _, _ = make_client(["a", "b"])
        client.complete(ChatRequest.text_only("m", "one"))
        client.complete(ChatRequest.text_only("m", "two"))
        assert len(client.history) == 2
        assert client.history[0][1].text == "a"

    def test_image_parts_only_on_vision_model(self):
        config = LlmConfig(image_feedback_model="vision-model")
        client, _, _ = make_client(["x"], config=config)
        image = ImagePart("image/png", "aGk=")
        with pytest.raises(ValueError):
            client.complete(ChatRequest.with_image("text-model", "look", image))
        reply = client.complete(ChatRequest.with_image("vision-model", "look", image))
        assert reply.text == "x"


class TestScriptedTransport:
    def test_replays_in_order(self):
        transport = mock_transport([ChatReply("A"), ChatReply("B")])
        client = LlmClient(LlmConfig(), transport=transport, sleep=lambda _t: None)
        assert client.complete(ChatRequest.text_only("m", "1")).text == "A"
        assert client.complete(ChatRequest.text_only("m", "2")).text == "B"

    def test_exhaustion(self):
        transport = mock_transport(["only"])
        client = LlmClient(LlmConfig(), transport=transport, sleep=lambda _t: None)
        client.complete(ChatRequest.text_only("m", "1"))
        with pytest.raises(ScriptExhausted):
            client.complete(ChatRequest.text_only("m", "2"))

    def test_empty_script_rejected(self):
        with pytest.raises(ValueError):
            mock_transport([])

    def test_recorded_requests_match_built_prompts(self):
        transport = mock_transport(["r1", "r2"])
        client = LlmClient(LlmConfig(), transport=transport, sleep=lambda _t: None)
        kp_prompt = build_keypoint_prompt("A person is performing standing.")
        img_prompt = build_image_feedback_prompt("A person is performing standing.")
        client.complete(ChatRequest.text_only(client.config.keypoint_model, kp_prompt))
        client.complete(ChatRequest.with_image(
            client.config.image_feedback_model, img_prompt, ImagePart("image/png", "aGk=")))
        assert transport.requests[0]["messages"][0]["content"] == kp_prompt
        parts = transport.requests[1]["messages"][0]["content"]
        assert parts[0] == {"type": "text", "text": img_prompt}
        assert parts[1]["type"] == "image_url"


class TestWireFormat:
    def test_text_only_content_is_string(self):
        wire = ChatRequest.text_only("m", "hello").to_wire()
        assert wire == {"model": "m", "messages": [{"role": "user", "content": "hello"}]}

    def test_temperature_included_when_set(self):
        wire = ChatRequest.text_only("m", "p", temperature=0.5).to_wire()
        assert wire["temperature"] == 0.5

    def test_temperature_omitted_by_default(self):
        assert "temperature" not in ChatRequest.text_only("m", "p").to_wire()

    def test_empty_messages_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(model="m", messages=())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LlmConfig(timeout=0)
        with pytest.raises(ValueError):
            LlmConfig(max_retries=-1)


class TestKindDispatch:
    def test_classify(self):
        kp = ChatRequest.text_only("m", build_keypoint_prompt("x")).to_wire()
        img = ChatRequest.text_only("m", build_image_feedback_prompt("x")).to_wire()
        assert KindDispatchTransport.classify(kp) == "keypoint_generator"
        assert KindDispatchTransport.classify(img) == "image_feedback"

    def test_list_replies_consume_then_repeat_last(self):
        transport = KindDispatchTransport({"keypoint_generator": ["a", "b"]})
        client = LlmClient(LlmConfig(), transport=transport, sleep=lambda _t: None)
        req = ChatRequest.text_only("m", "generate")
        assert client.complete(req).text == "a"
        assert client.complete(req).text == "b"
        assert client.complete(req).text == "b"
