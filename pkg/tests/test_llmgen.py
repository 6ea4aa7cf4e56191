import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from kumo.envmodel import DomainProposal, parse_seed_config, serialize_seed_config
from kumo.errors import (
    AuthError,
    GenerationFailed,
    PersistentlyInvalid,
    RateLimited,
    TransportError,
    VerdictUnparseable,
)
from kumo.llmgen import (
    CannedPipelineTransport,
    ChatClient,
    ChatRequest,
    EndpointConfig,
    HttpChatTransport,
    QueueTransport,
    TRUNCATED,
    extract_config_text,
    generate_seed_config,
    load_endpoint_config,
    propose_domains,
    revise_knowledge_book,
    serve_transport_http,
    synthesize_config_doc,
    write_knowledge_book,
)
from kumo.llmgen.client import _parse_completion
from kumo.taskgen import GenParams, generate_tasks

PROPOSAL = DomainProposal(
    goal="Identify the anomaly destabilizing the reactor core",
    truths_desc="Reactor anomaly signatures",
    actions_desc="Sensor sweeps / Coolant assays / Containment probes",
)


def canned_client(seed=0, **kw):
    return ChatClient(CannedPipelineTransport(seed=seed, **kw))


def queue_client(*replies):
    transport = QueueTransport()
    for reply in replies:
        if isinstance(reply, tuple):
            transport.enqueue(reply[0], finish_reason=reply[1])
        else:
            transport.enqueue(reply)
    return ChatClient(transport), transport


# -- wire parsing ----------------------------------------------------------

def test_parse_completion_payload():
    doc = {
        "choices": [{"message": {"content": "hi"}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 3},
    }
    resp = _parse_completion(doc)
    assert (resp.content, resp.finish_reason) == ("hi", "complete")
    assert (resp.tokens_in, resp.tokens_out) == (12, 3)
    doc["choices"][0]["finish_reason"] = "length"
    assert _parse_completion(doc).finish_reason == TRUNCATED
    with pytest.raises(TransportError):
        _parse_completion({"choices": []})


def test_chat_request_validation():
    with pytest.raises(ValueError):
        ChatRequest(model="m", messages=[])
    with pytest.raises(ValueError):
        ChatRequest(model="m", messages=[{"role": "robot", "content": "x"}])


# -- HTTP transport -----------------------------------------------------------

class ScriptedHandler(BaseHTTPRequestHandler):
    script = []  # list of (status, payload-dict or None => canned ok)
    calls = 0

    def do_POST(self):
        cls = type(self)
        status, payload = cls.script[min(cls.calls, len(cls.script) - 1)]
        cls.calls += 1
        length = int(self.headers.get("Content-Length", "0"))
        self.rfile.read(length)
        if payload is None:
            payload = {
                "choices": [{"message": {"content": "ok"}, "finish_reason": "stop"}],
                "usage": {"prompt_tokens": 1, "completion_tokens": 1},
            }
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *a):
        pass


@pytest.fixture
def scripted_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), ScriptedHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    ScriptedHandler.calls = 0
    yield server
    server.shutdown()


def http_transport(server, retries=3):
    return HttpChatTransport(EndpointConfig(
        base_url=f"http://127.0.0.1:{server.server_address[1]}",
        max_retries=retries, backoff_base=0.0,
    ))


def req():
    return ChatRequest(model="m", messages=[{"role": "user", "content": "ping"}])


def test_http_happy_path(scripted_server):
    ScriptedHandler.script = [(200, None)]
    resp = http_transport(scripted_server).send(req())
    assert resp.content == "ok"


def test_http_retries_transient_then_succeeds(scripted_server):
    ScriptedHandler.script = [(500, {}), (503, {}), (200, None)]
    resp = http_transport(scripted_server).send(req())
    assert resp.content == "ok"
    assert ScriptedHandler.calls == 3


def test_http_auth_error_not_retried(scripted_server):
    ScriptedHandler.script = [(401, {})]
    with pytest.raises(AuthError):
        http_transport(scripted_server).send(req())
    assert ScriptedHandler.calls == 1


def test_http_rate_limited_after_retries(scripted_server):
    ScriptedHandler.script = [(429, {})]
    with pytest.raises(RateLimited):
        http_transport(scripted_server, retries=2).send(req())
    assert ScriptedHandler.calls == 3  # initial + 2 retries


def test_http_gives_up_on_persistent_500(scripted_server):
    ScriptedHandler.script = [(500, {})]
    with pytest.raises(TransportError):
        http_transport(scripted_server, retries=1).send(req())


def test_served_mock_round_trip():
    server = serve_transport_http(CannedPipelineTransport(seed=1))
    try:
        transport = HttpChatTransport(EndpointConfig(
            base_url=f"http://127.0.0.1:{server.server_address[1]}",
        ))
        client = ChatClient(transport)
        proposals = propose_domains(client, 2)
        assert len(proposals) == 2
    finally:
        server.shutdown()


def test_endpoint_config_file(tmp_path):
    path = tmp_path / "llm.json"
    path.write_text(json.dumps({
        "base_url": "http://example.invalid",
        "models": {"seed": "m-seed", "book": "m-book"},
        "default_model": "m-default",
        "temperature": 0.3,
    }))
    cfg = load_endpoint_config(path)
    assert cfg.model_for("seed") == "m-seed"
    assert cfg.model_for("play") == "m-default"
    assert cfg.temperature == 0.3


# -- proposals --------------------------------------------------------------

def test_propose_parses_well_formed_reply():
    reply = json.dumps([{
        "Goal": PROPOSAL.goal,
        "Truths": PROPOSAL.truths_desc,
        "Actions": PROPOSAL.actions_desc,
    }])
    client, _ = queue_client(reply)
    proposals = propose_domains(client, 1)
    assert proposals == [PROPOSAL]


def test_propose_accepts_python_style_literals():
    reply = ("Here you go:\n[{'Goal': 'Find the leak', 'Truths': 'Pipe faults',"
             " 'Actions': 'Pressure tests / Dye tracing'}]")
    client, _ = queue_client(reply)
    assert propose_domains(client, 1)[0].goal == "Find the leak"


def test_propose_drops_malformed_and_refetches():
    bad = json.dumps([{"Goal": "g", "Truths": "t"}])  # missing Actions
    good = json.dumps([{"Goal": "g", "Truths": "t", "Actions": "a"}])
    client, transport = queue_client(bad, good)
    proposals = propose_domains(client, 1)
    assert len(proposals) == 1
    assert len(transport.requests_seen) == 2


def test_propose_gives_up():
    client, _ = queue_client("nope", "still nope", "nothing")
    with pytest.raises(GenerationFailed):
        propose_domains(client, 1)


def test_propose_canned_count():
    assert len(propose_domains(canned_client(), 3)) == 3


# -- config generation ---------------------------------------------------------

def config_reply(doc, fence=True):
    text = json.dumps(doc, indent=2)
    return f"Sure:\n```json\n{text}\n```\n" if fence else text


def valid_doc():
    return synthesize_config_doc(
        PROPOSAL.goal, PROPOSAL.truths_desc, PROPOSAL.actions_desc, seed=5
    )


def test_generate_config_one_shot():
    client, _ = queue_client(config_reply(valid_doc()))
    cfg = generate_seed_config(client, PROPOSAL)
    assert len(cfg.truths) == 50


def test_generate_config_truncation_recovery_any_split():
    full = config_reply(valid_doc())
    thirds = [len(full) // 3, 2 * len(full) // 3]
    for cuts in ([1], [len(full) - 2], [137], thirds, [7, len(full) - 5]):
        bounds = [0] + sorted(cuts) + [len(full)]
        chunks = [full[a:b] for a, b in zip(bounds, bounds[1:])]
        assert 2 <= len(chunks) <= 3
        replies = [(c, TRUNCATED) for c in chunks[:-1]] + [chunks[-1]]
        client, _ = queue_client(*replies)
        cfg = generate_seed_config(client, PROPOSAL)
        assert serialize_seed_config(cfg) == serialize_seed_config(
            parse_seed_config(extract_config_text(full)))


def test_generate_config_still_truncated_fails():
    client, _ = queue_client(*[("{", TRUNCATED)] * 5)
    with pytest.raises(GenerationFailed):
        generate_seed_config(client, PROPOSAL)


def test_generate_config_regenerates_on_validation_failure():
    # first document has a universally excluded truth, second is clean
    bad = {
        "domain": "Bad", "goal": "g", "truths": ["A", "B"],
        "outcomes": {
            "t1": {"type": "str", "states": {"x": ["A", "B"], "y": ["A"]}},
            "t2": {"type": "str", "states": {"x": ["A"], "y": ["A"]}},
        },
    }
    client, transport = queue_client(config_reply(bad), config_reply(valid_doc()))
    cfg = generate_seed_config(client, PROPOSAL)
    assert len(transport.requests_seen) == 2
    assert len(cfg.truths) == 50


def test_generate_config_persistently_invalid():
    bad = {
        "domain": "Bad", "goal": "g", "truths": ["A", "B"],
        "outcomes": {
            "t1": {"type": "str", "states": {"x": ["A", "B"], "y": ["A"]}},
            "t2": {"type": "str", "states": {"x": ["A"], "y": ["A"]}},
        },
    }
    client, _ = queue_client(*[config_reply(bad)] * 3)
    with pytest.raises(PersistentlyInvalid):
        generate_seed_config(client, PROPOSAL)


def test_extract_config_text_variants():
    doc = {"domain": "D", "goal": "g", "truths": ["A", "B"],
           "outcomes": {"t": {"type": "str", "states": {"x": ["A"], "y": ["B"]}}}}
    body = json.dumps(doc)
    assert json.loads(extract_config_text(f"prefix {body} suffix")) == doc
    assert json.loads(extract_config_text(f"```json\n{body}\n```")) == doc
    assert json.loads(extract_config_text(f"```\n{body}\n```")) == doc


# -- books ------------------------------------------------------------------

@pytest.fixture(scope="module")
def book_setup():
    client = canned_client(seed=5)
    cfg = generate_seed_config(client, PROPOSAL)
    task = generate_tasks(cfg, GenParams(n_truth=4, n_action=6, count=1,
                                         rng_seed=8))[0]
    return client, cfg, task


def test_book_mentions_every_action(book_setup):
    client, cfg, task = book_setup
    book = write_knowledge_book(client, cfg, task)
    for action in task.actions:
        assert action in book


def test_book_mentions_interval_states(book_setup):
    client, cfg, task = book_setup
    book = write_knowledge_book(client, cfg, task)
    numeric = [a for a in task.actions if cfg.action(a).kind == "numeric"]
    for action in numeric:
        for state in cfg.action(action).state_labels():
            assert state in book


def test_revision_true_verdict(book_setup):
    client, cfg, task = book_setup
    book = write_knowledge_book(client, cfg, task)
    verdict = revise_knowledge_book(client, cfg, task, book)
    assert verdict.passed and verdict.revised_book is None


def test_revision_false_carries_book(book_setup):
    _, cfg, task = book_setup
    client, _ = queue_client(
        "Missing rule-outs. <ANSWER>False</ANSWER>\n<BOOK>corrected text</BOOK>",
        "Looks right now. <ANSWER>True</ANSWER>",
    )
    verdict = revise_knowledge_book(client, cfg, task, "draft book")
    assert not verdict.passed
    assert verdict.revised_book == "corrected text"


def test_revision_unparseable(book_setup):
    _, cfg, task = book_setup
    client, _ = queue_client("no tags at all")
    with pytest.raises(VerdictUnparseable):
        revise_knowledge_book(client, cfg, task, "draft")


def test_revision_round_cap(book_setup):
    _, cfg, task = book_setup
    client, transport = queue_client(
        "<ANSWER>False</ANSWER><BOOK>attempt one</BOOK>",
        "<ANSWER>False</ANSWER><BOOK>attempt two</BOOK>",
        "<ANSWER>False</ANSWER><BOOK>attempt three</BOOK>",
    )
    verdict = revise_knowledge_book(client, cfg, task, "draft")
    assert not verdict.passed
    assert verdict.revised_book == "attempt two"  # capped at two rounds
    assert len(transport.requests_seen) == 2


# -- canned gameplay ---------------------------------------------------------

def test_llm_agent_plays_episodes_hermetically(book_setup):
    from kumo.llmgen import LLMAgent
    from kumo.llmgen.mock import render_plain_book
    from kumo.simulator import create_session, run_episode

    client, cfg, task = book_setup
    book = render_plain_book(cfg.rule_out_map(task.truths, task.actions))
    session = create_session(task, book, cfg=cfg, clock=lambda: 0.0)
    traj = run_episode(session, LLMAgent(client, name="canned"))
    # the naive player exhausts its menu and then guesses: always terminal,
    # never a parse failure, and token usage flows through the binding
    assert traj.outcome in ("success", "wrong_prediction")
    assert traj.parse_error_turns() == 0
    assert traj.action_count == len(task.actions)
    assert traj.tokens_out > 0


# -- hermetic reproducibility -----------------------------------------------------

def test_pipeline_reproducible_byte_for_byte():
    outputs = []
    for _ in range(2):
        client = canned_client(seed=13)
        proposals = propose_domains(client, 2)
        cfg = generate_seed_config(client, proposals[0])
        tasks = generate_tasks(cfg, GenParams(n_truth=4, n_action=6, count=4,
                                              rng_seed=13))
        book = write_knowledge_book(client, cfg, tasks[0])
        verdict = revise_knowledge_book(client, cfg, tasks[0], book)
        outputs.append(json.dumps({
            "proposals": [p.goal for p in proposals],
            "config": serialize_seed_config(cfg),
            "tasks": [t.to_json() for t in tasks],
            "book": book,
            "passed": verdict.passed,
        }, sort_keys=True))
    assert outputs[0] == outputs[1]
