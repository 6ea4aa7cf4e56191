import pytest

from kumo.envmodel import DomainProposal, parse_seed_config
from kumo.errors import DuplicateEnvironment, InvalidConfig, UnknownEnvironment
from kumo.registry import EnvironmentRegistry

from conftest import doc_text


@pytest.fixture
def registry(tmp_path):
    return EnvironmentRegistry(tmp_path / "reg")


@pytest.fixture
def proposal():
    return DomainProposal(
        goal="name the letter", truths_desc="letters", actions_desc="tests"
    )


def test_register_and_enumerate(registry, mini_cfg, proposal):
    entry = registry.register(proposal, mini_cfg)
    assert entry.name == "Mini"
    assert registry.names() == ["Mini"]
    loaded = registry.load("Mini")
    assert loaded == mini_cfg
    entries = registry.entries()
    assert entries[0].proposal == proposal


def test_duplicate_environment(registry, mini_cfg, proposal):
    registry.register(proposal, mini_cfg)
    with pytest.raises(DuplicateEnvironment):
        registry.register(proposal, mini_cfg)


def test_invalid_config_rejected(registry, proposal):
    doc = {
        "domain": "Bad", "goal": "g", "truths": ["A", "B"],
        "outcomes": {
            "t1": {"type": "str", "states": {"x": ["A", "B"], "y": ["A"]}},
            "t2": {"type": "str", "states": {"x": ["A"], "y": ["A"]}},
        },
    }
    cfg = parse_seed_config(doc_text(doc))
    with pytest.raises(InvalidConfig) as err:
        registry.register(proposal, cfg)
    assert "UNIVERSALLY_EXCLUDED" in str(err.value)


def test_unknown_environment(registry):
    with pytest.raises(UnknownEnvironment):
        registry.load("Nope")


def test_index_file_format(registry, mini_cfg, proposal, tmp_path):
    registry.register(proposal, mini_cfg)
    lines = registry.index_path.read_text().splitlines()
    assert lines == ["Mini\tconfigs/Mini.json"]


def test_register_without_proposal(registry, mini_cfg):
    entry = registry.register(None, mini_cfg)
    assert entry.proposal is None
    assert registry.entries()[0].proposal is None


def test_concurrent_registration_single_writer(registry, mini_cfg, proposal):
    from concurrent.futures import ThreadPoolExecutor
    from dataclasses import replace

    configs = [replace(mini_cfg, domain_name=f"Env{i:02d}") for i in range(16)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda cfg: registry.register(proposal, cfg), configs))
    names = registry.names()
    assert sorted(names) == [f"Env{i:02d}" for i in range(16)]
    # the index survived the write storm intact: one line per environment
    lines = registry.index_path.read_text().splitlines()
    assert len(lines) == 16
    for name in names:
        assert registry.load(name).truths == mini_cfg.truths
