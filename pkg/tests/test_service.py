import json
import re

import pytest
from fastapi.testclient import TestClient

from kumo.llmgen import CannedPipelineTransport, ChatClient, generate_seed_config, propose_domains
from kumo.service import DataStore, create_app
from kumo.service.model import Earnings
from kumo.simulator import SUCCESS
from kumo.trajlog import load_trajectories

TOKEN = "tok-alice"

_RULE_RE = re.compile(r"^\s+When (.+?) yields (.+?), rule out: (.+)\.$")


def parse_book_rules(book: str) -> dict[tuple[str, str], set[str]]:
    """Read the plain book back into (action, state) -> ruled-out sets."""
    rules = {}
    for line in book.splitlines():
        m = _RULE_RE.match(line)
        if m:
            action, state, names = m.groups()
            rules[(action, state)] = set(names.split(", "))
    return rules


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    store = DataStore(root, service_seed=4)
    client = ChatClient(CannedPipelineTransport(seed=4))
    proposals = propose_domains(client, 6)
    registered = 0
    for proposal in proposals:
        if registered == 5:
            break
        cfg = generate_seed_config(client, proposal)
        if cfg.domain_name in store.registry.names():
            continue
        store.registry.register(proposal, cfg)
        registered += 1
    assert len(store.registry.names()) == 5
    store.add_participant("alice", TOKEN)
    store.add_participant("bob", "tok-bob")
    return store


@pytest.fixture(scope="module")
def client(store):
    return TestClient(create_app(store))


def auth(token=TOKEN):
    return {"Authorization": f"Bearer {token}"}


def new_session(client):
    response = client.post("/sessions", json={"participant_id": "alice"}, headers=auth())
    assert response.status_code == 200, response.text
    return response.json()


def play_task(client, session_id, *, wrong_answer_from=None, max_actions=None):
    """Drive the current task through the API, deducing from the book.

    With ``wrong_answer_from`` (the backing store), the prediction is a
    candidate known to be invalid, to arrange failed plays.
    """
    view = client.get(f"/sessions/{session_id}", headers=auth()).json()
    current = view["current"]
    book = client.get(f"/sessions/{session_id}/book", headers=auth()).json()["book"]
    rules = parse_book_rules(book)
    candidates = set(current["truths"])
    actions_taken = 0
    for action in [a["name"] for a in current["actions"]]:
        if len(candidates) == 1:
            break
        if max_actions is not None and actions_taken >= max_actions:
            break
        r = client.post(f"/sessions/{session_id}/action",
                        json={"action": action}, headers=auth())
        assert r.status_code == 200, r.text
        observation = r.json()["observation"]
        candidates -= rules.get((action, observation), set())
        actions_taken += 1
    assert len(candidates) >= 1
    guess = sorted(candidates)[0]
    if wrong_answer_from is not None:
        slot = wrong_answer_from.get_session(session_id).active_slot
        guess = next(t for t in slot.task.truths if t != slot.task.valid_truth)
    r = client.post(f"/sessions/{session_id}/predict",
                    json={"truth": guess}, headers=auth())
    assert r.status_code == 200, r.text
    return r.json(), actions_taken


# -- assignment shape ---------------------------------------------------------

def test_assignment_layout(client):
    view = new_session(client)
    tasks = view["tasks"]
    assert len(tasks) == 10
    difficulties = [t["difficulty"] for t in tasks]
    assert difficulties.count("easy") == 5
    assert difficulties.count("hard") == 5
    per_domain = {}
    for t in tasks:
        per_domain.setdefault(t["domain"], []).append(t["difficulty"])
    assert len(per_domain) == 5
    assert all(sorted(v) == ["easy", "hard"] for v in per_domain.values())
    current = view["current"]
    expected = 4 if current["difficulty"] == "easy" else 12
    assert len(current["truths"]) == expected


def test_repeat_assignment_is_fresh(client):
    a = new_session(client)
    b = new_session(client)
    assert a["session_id"] != b["session_id"]


def test_auth_required(client):
    assert client.post("/sessions", json={"participant_id": "alice"}).status_code == 401
    assert client.post("/sessions", json={"participant_id": "alice"},
                       headers=auth("wrong")).status_code == 401


def test_session_isolation(client):
    view = new_session(client)
    sid = view["session_id"]
    r = client.get(f"/sessions/{sid}", headers=auth("tok-bob"))
    assert r.status_code == 401
    assert client.get("/sessions/doesnotexist", headers=auth()).status_code == 404


# -- play semantics ---------------------------------------------------------

def test_action_reveals_and_marks_used(client):
    view = new_session(client)
    sid = view["session_id"]
    action = view["current"]["actions"][0]["name"]
    r = client.post(f"/sessions/{sid}/action", json={"action": action}, headers=auth())
    assert r.status_code == 200
    assert r.json()["observation"]
    after = client.get(f"/sessions/{sid}", headers=auth()).json()
    marks = {a["name"]: a["used"] for a in after["current"]["actions"]}
    assert marks[action] is True
    assert after["current"]["action_count"] == 1


def test_unknown_action_rejected(client):
    view = new_session(client)
    sid = view["session_id"]
    r = client.post(f"/sessions/{sid}/action",
                    json={"action": "not-a-real-probe"}, headers=auth())
    assert r.status_code == 400
    assert r.json()["error"] == "UnknownAction"


def test_unknown_truth_rejected(client):
    view = new_session(client)
    sid = view["session_id"]
    r = client.post(f"/sessions/{sid}/predict",
                    json={"truth": "not-a-candidate"}, headers=auth())
    assert r.status_code == 400
    assert r.json()["error"] == "UnknownTruth"


def test_action_idempotent_under_request_id(client):
    view = new_session(client)
    sid = view["session_id"]
    action = view["current"]["actions"][0]["name"]
    body = {"action": action, "request_id": "req-1"}
    first = client.post(f"/sessions/{sid}/action", json=body, headers=auth()).json()
    second = client.post(f"/sessions/{sid}/action", json=body, headers=auth()).json()
    assert first == second
    after = client.get(f"/sessions/{sid}", headers=auth()).json()
    assert after["current"]["action_count"] == 1  # replay did not re-apply


def test_prediction_advances_to_next_task(client):
    view = new_session(client)
    sid = view["session_id"]
    result, _ = play_task(client, sid)
    assert result["correct"] is True
    assert result["finished"] is False
    assert result["next_task_index"] == 1
    after = client.get(f"/sessions/{sid}", headers=auth()).json()
    assert after["tasks"][0]["done"] is True
    assert after["current"]["index"] == 1


# -- full set and earnings ---------------------------------------------------------

def test_full_set_earnings_exact(client, store):
    view = new_session(client)
    sid = view["session_id"]
    total_actions = 0
    last = None
    for _ in range(10):
        last, taken = play_task(client, sid)
        total_actions += taken
    assert last["finished"] is True

    score = client.get(f"/sessions/{sid}/score", headers=auth()).json()
    assert score["completed"] is True
    assert score["success_rate"] == 1.0
    assert score["action_count"] == total_actions
    expected = Earnings.compute(1.0, total_actions)
    assert score["earnings"]["total"] == pytest.approx(expected.total, abs=1e-9)
    assert score["earnings"]["total"] == pytest.approx(
        25 + 1.0 * 15 - 0.1 * total_actions, abs=1e-9)

    # further moves are rejected
    action = view["current"]["actions"][0]["name"]
    r = client.post(f"/sessions/{sid}/action", json={"action": action}, headers=auth())
    assert r.status_code == 409
    assert r.json()["error"] == "SessionTerminated"

    # the persisted log carries one record per task, replayable for scoring
    records, skipped = load_trajectories(store.trajectories_path)
    mine = [t for t in records if t.tags.get("task_set") == sid]
    assert skipped == 0
    assert len(mine) == 10
    assert all(t.outcome == SUCCESS for t in mine)
    assert sum(t.action_count for t in mine) == total_actions


def test_worked_earnings_examples():
    assert Earnings.compute(1.0, 30).total == pytest.approx(37.0)
    assert Earnings.compute(0.8, 30).total == pytest.approx(34.0)


def test_quality_flag_on_fast_random_play(client, store):
    view = new_session(client)
    sid = view["session_id"]
    for _ in range(10):
        play_task(client, sid, wrong_answer_from=store, max_actions=0)
    score = client.get(f"/sessions/{sid}/score", headers=auth()).json()
    assert score["success_rate"] == 0.0
    assert score["low_quality"] is True  # fast and at/below chance


def test_good_play_not_flagged(client):
    view = new_session(client)
    sid = view["session_id"]
    for _ in range(10):
        play_task(client, sid)
    score = client.get(f"/sessions/{sid}/score", headers=auth()).json()
    assert score["low_quality"] is False  # perfect accuracy is above chance


def test_session_snapshot_persisted(client, store):
    view = new_session(client)
    sid = view["session_id"]
    action = view["current"]["actions"][0]["name"]
    client.post(f"/sessions/{sid}/action", json={"action": action}, headers=auth())
    snapshot = json.loads((store.root / "sessions" / f"{sid}.json").read_text())
    # the in-flight move is already on disk before the task completes
    assert len(snapshot["live_turns"]) == 1
    assert snapshot["live_turns"][0]["parsed"]["name"] == action
    play_task(client, sid)
    snapshot = json.loads((store.root / "sessions" / f"{sid}.json").read_text())
    assert snapshot["current"] == 1
    assert snapshot["slots"][0]["outcome"] == SUCCESS


def test_empty_registry_means_no_task_pool(tmp_path):
    bare = DataStore(tmp_path / "bare")
    bare.add_participant("alice", TOKEN)
    api = TestClient(create_app(bare))
    r = api.post("/sessions", json={"participant_id": "alice"}, headers=auth())
    assert r.status_code == 503
    assert r.json()["error"] == "InsufficientTaskPool"


def test_concurrent_actions_serialize_consistently(client):
    from concurrent.futures import ThreadPoolExecutor

    view = new_session(client)
    sid = view["session_id"]
    actions = [a["name"] for a in view["current"]["actions"]]

    def fire(action):
        return client.post(f"/sessions/{sid}/action",
                           json={"action": action}, headers=auth()).status_code

    with ThreadPoolExecutor(max_workers=6) as pool:
        codes = list(pool.map(fire, actions * 2))  # every action twice
    assert all(code == 200 for code in codes)
    after = client.get(f"/sessions/{sid}", headers=auth()).json()
    # all requests were applied exactly once each, under the session lock
    assert after["current"]["action_count"] == len(actions) * 2
    assert all(a["used"] for a in after["current"]["actions"])
