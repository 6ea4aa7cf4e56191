"""Task bundle files: JSONL with a header line.

The header records the config hash and the generation parameters so a
bundle can be paired with (and checked against) the config that produced
it; each following line is one serialized task instance in stable field
order.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

from ..envmodel import SeedConfig, serialize_seed_config
from ..errors import IoError
from .engine import GenParams, TaskInstance

BUNDLE_KIND = "kumo-tasks"


def config_hash(cfg: SeedConfig) -> str:
    return hashlib.sha256(serialize_seed_config(cfg).encode("utf-8")).hexdigest()


def write_task_bundle(
    path: str | Path, cfg: SeedConfig, params: GenParams, tasks: Sequence[TaskInstance]
):
    header = {
        "kind": BUNDLE_KIND,
        "domain": cfg.domain_name,
        "config_hash": config_hash(cfg),
        "params": params.to_json(),
        "count": len(tasks),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for task in tasks:
            fh.write(json.dumps(task.to_json(), ensure_ascii=False) + "\n")


def read_task_bundle(path: str | Path) -> tuple[dict, list[TaskInstance]]:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise IoError(f"{path}: empty bundle")
    header = json.loads(lines[0])
    if header.get("kind") != BUNDLE_KIND:
        raise IoError(f"{path}: not a task bundle (kind={header.get('kind')!r})")
    tasks = [TaskInstance.from_json(json.loads(line)) for line in lines[1:]]
    return header, tasks
