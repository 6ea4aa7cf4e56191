import json
import random

import pytest

from kumo.envmodel import parse_seed_config
from kumo.llmgen.mock import synthesize_config_doc

MINI_DOC = {
    "domain": "Mini",
    "goal": "name the letter",
    "truths": ["A", "B"],
    "outcomes": {
        "t1": {"type": "str", "states": {"pos": ["A"], "neg": ["B"]}},
    },
}

# Two binary probes that jointly separate four candidates; optimal play
# needs exactly two actions from the root.
SPLIT4_DOC = {
    "domain": "Split4",
    "goal": "name the tile",
    "truths": ["t1", "t2", "t3", "t4"],
    "outcomes": {
        "a1": {"type": "str", "states": {"x": ["t1", "t2"], "y": ["t3", "t4"]}},
        "a2": {"type": "str", "states": {"x": ["t1", "t3"], "y": ["t2", "t4"]}},
    },
}

# Two fully separated clusters: {A,B} probed by p1, {C,D} probed by p2.
TWO_COMPONENT_DOC = {
    "domain": "TwoPart",
    "goal": "locate the fault",
    "truths": ["A", "B", "C", "D"],
    "outcomes": {
        "p1": {"type": "str", "states": {"hi": ["A"], "lo": ["B"]}},
        "p2": {"type": "str", "states": {"hi": ["C"], "lo": ["D"]}},
    },
}


def doc_text(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


@pytest.fixture
def mini_cfg():
    return parse_seed_config(doc_text(MINI_DOC))


@pytest.fixture
def split4_cfg():
    return parse_seed_config(doc_text(SPLIT4_DOC))


@pytest.fixture
def two_component_cfg():
    return parse_seed_config(doc_text(TWO_COMPONENT_DOC))


@pytest.fixture(scope="session")
def dense_cfg():
    """Full-scale config (50 truths / 30 actions) from the canned generator."""
    doc = synthesize_config_doc(
        "identify the trait", "Trait candidates", "Probe batteries", seed=11
    )
    return parse_seed_config(doc_text(doc))


def random_toy_doc(seed: int, n_truths=4, n_actions=4, max_states=3,
                   exclusion_rate=0.45) -> dict:
    """Small random config for oracle cross-checks.

    Every truth is guaranteed at least one excluding state so generated
    tasks stay satisfiable most of the time.
    """
    rng = random.Random(f"toy:{seed}")
    truths = [f"u{i}" for i in range(n_truths)]
    outcomes = {}
    hit = {t: 0 for t in truths}
    for ai in range(n_actions):
        k = rng.randint(2, max_states)
        states = {}
        for si in range(k):
            excl = [t for t in truths if rng.random() < exclusion_rate]
            states[f"s{si}"] = excl
            for t in excl:
                hit[t] += 1
        outcomes[f"a{ai}"] = {"type": "str", "states": states}
    for t in truths:
        while hit[t] < 1:
            a = rng.choice(list(outcomes))
            s = rng.choice(list(outcomes[a]["states"]))
            if t not in outcomes[a]["states"][s]:
                outcomes[a]["states"][s].append(t)
                hit[t] += 1
    return {"domain": f"Toy{seed}", "goal": "g", "truths": truths, "outcomes": outcomes}


def random_toy_cfg(seed: int, **kw):
    return parse_seed_config(doc_text(random_toy_doc(seed, **kw)))
