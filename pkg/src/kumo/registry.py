"""Environment registry: a directory of config documents plus an index file.

Layout under the registry root::

    index.tsv                 one line per environment: "name\tpath"
    configs/<slug>.json       serialized seed config
    configs/<slug>.meta.json  proposal + registration metadata

Writes are serialized by an in-process lock and land via atomic rename, so
readers never observe a half-written document. Config values are immutable
once loaded and safe to share across threads.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from .envmodel import (
    DomainProposal,
    SeedConfig,
    parse_seed_config,
    serialize_seed_config,
    validate_seed_config,
)
from .errors import DuplicateEnvironment, InvalidConfig, UnknownEnvironment

INDEX_NAME = "index.tsv"


@dataclass(frozen=True)
class EnvironmentEntry:
    name: str
    path: str  # relative to the registry root
    proposal: DomainProposal | None = None


def _slug(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")
    return s or "env"


def _atomic_write(path: Path, data: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    tmp.replace(path)


class EnvironmentRegistry:
    """Directory-backed registry addressable by domain name."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "configs").mkdir(exist_ok=True)
        self._lock = threading.Lock()

    @property
    def index_path(self) -> Path:
        return self.root / INDEX_NAME

    def _read_index(self) -> dict[str, str]:
        if not self.index_path.exists():
            return {}
        entries: dict[str, str] = {}
        for line in self.index_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            name, path = line.split("\t", 1)
            entries[name] = path
        return entries

    def _write_index(self, entries: dict[str, str]):
        lines = [f"{name}\t{path}" for name, path in entries.items()]
        _atomic_write(self.index_path, "\n".join(lines) + ("\n" if lines else ""))

    def register(self, proposal: DomainProposal | None, cfg: SeedConfig) -> EnvironmentEntry:
        """Persist a validated config and make it addressable by name."""
        report = validate_seed_config(cfg)
        if not report.ok:
            raise InvalidConfig(
                f"config for {cfg.domain_name!r} failed validation: {report.summary()}",
                report=report,
            )
        with self._lock:
            entries = self._read_index()
            if cfg.domain_name in entries:
                raise DuplicateEnvironment(f"environment {cfg.domain_name!r} already registered")
            rel = f"configs/{_slug(cfg.domain_name)}.json"
            _atomic_write(self.root / rel, serialize_seed_config(cfg))
            if proposal is not None:
                meta = {
                    "goal": proposal.goal,
                    "truths_desc": proposal.truths_desc,
                    "actions_desc": proposal.actions_desc,
                }
                _atomic_write(self.root / (rel[:-5] + ".meta.json"),
                              json.dumps(meta, indent=2, ensure_ascii=False) + "\n")
            entries[cfg.domain_name] = rel
            self._write_index(entries)
        return EnvironmentEntry(name=cfg.domain_name, path=rel, proposal=proposal)

    def names(self) -> list[str]:
        return list(self._read_index())

    def entries(self) -> list[EnvironmentEntry]:
        out = []
        for name, rel in self._read_index().items():
            out.append(EnvironmentEntry(name=name, path=rel, proposal=self._load_meta(rel)))
        return out

    def _load_meta(self, rel: str) -> DomainProposal | None:
        meta_path = self.root / (rel[:-5] + ".meta.json")
        if not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        try:
            return DomainProposal(**meta)
        except (TypeError, ValueError):
            return None

    def load(self, name: str) -> SeedConfig:
        entries = self._read_index()
        if name not in entries:
            raise UnknownEnvironment(f"no environment named {name!r}")
        return parse_seed_config((self.root / entries[name]).read_text(encoding="utf-8"))
