"""Service persistence: participants, sessions, and the trajectory log.

Data directory layout (root from KUMO_DATA_DIR or --data-dir)::

    participants.json      {participant id: auth token}
    registry/              environment registry (index.tsv + configs/)
    sessions/<id>.json     snapshot of one play session
    trajectories.jsonl     append-only per-task trajectory records

Every mutation appends/rewrites synchronously, so the trajectory log is
the source of truth: earnings served live are recomputed from it.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path

from ..envmodel import SeedConfig
from ..errors import AuthFailure, UnknownEnvironment
from ..registry import EnvironmentRegistry
from ..simulator import Trajectory
from ..trajlog import append_trajectory, load_trajectories
from .model import Earnings, PlaySession, TaskSlot, draw_task_set, open_slot


class DataStore:
    def __init__(
        self,
        root: str | Path,
        *,
        service_seed: int = 0,
        quality_thresholds: dict | None = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(exist_ok=True)
        self.registry = EnvironmentRegistry(self.root / "registry")
        self.service_seed = service_seed
        # kwargs for model.quality_flag (min_median_latency, chance_margin)
        self.quality_thresholds = dict(quality_thresholds or {})
        self._sessions: dict[str, PlaySession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global_lock = threading.Lock()
        self._assign_counter = 0
        self._configs: dict[str, SeedConfig] = {}

    # -- auth ----------------------------------------------------------------

    @property
    def participants_path(self) -> Path:
        return self.root / "participants.json"

    def participants(self) -> dict[str, str]:
        if not self.participants_path.exists():
            return {}
        return json.loads(self.participants_path.read_text(encoding="utf-8"))

    def add_participant(self, participant_id: str, token: str):
        table = self.participants()
        table[participant_id] = token
        self.participants_path.write_text(
            json.dumps(table, indent=2) + "\n", encoding="utf-8"
        )

    def authenticate(self, participant_id: str, token: str | None):
        table = self.participants()
        if participant_id not in table or not token or table[participant_id] != token:
            raise AuthFailure(f"bad credential for participant {participant_id!r}")

    # -- environments ----------------------------------------------------------

    def config_for(self, domain: str) -> SeedConfig:
        if domain not in self._configs:
            self._configs[domain] = self.registry.load(domain)
        return self._configs[domain]

    def all_configs(self) -> dict[str, SeedConfig]:
        for name in self.registry.names():
            self.config_for(name)
        return dict(self._configs)

    # -- sessions ----------------------------------------------------------------

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._global_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def create_session(self, participant_id: str) -> PlaySession:
        with self._global_lock:
            self._assign_counter += 1
            serial = self._assign_counter
        session_id = uuid.uuid4().hex[:16]
        slots = draw_task_set(
            self.all_configs(),
            seed=f"{self.service_seed}:{participant_id}:{serial}:{time.time_ns()}",
        )
        session = PlaySession(
            session_id=session_id, participant_id=participant_id, slots=slots
        )
        open_slot(session, self.config_for)
        self._sessions[session_id] = session
        self.save_session(session)
        return session

    def get_session(self, session_id: str) -> PlaySession:
        if session_id not in self._sessions:
            raise UnknownEnvironment(f"no session {session_id!r}")
        return self._sessions[session_id]

    def save_session(self, session: PlaySession):
        doc = {
            "session_id": session.session_id,
            "participant_id": session.participant_id,
            "created_at": session.created_at,
            "current": session.current,
            "low_quality": session.low_quality,
            "turn_times": session.turn_times,
            "request_cache": session.request_cache,
            # in-flight turns of the active task, so every accepted move is
            # on disk before its response leaves the service
            "live_turns": (
                [t.to_json() for t in session.live.turn_log]
                if session.live is not None else []
            ),
            "slots": [
                {
                    "index": s.index,
                    "domain": s.domain,
                    "difficulty": s.difficulty,
                    "task": s.task.to_json(),
                    "book": s.book,
                    "outcome": s.outcome,
                    "action_count": s.action_count,
                }
                for s in session.slots
            ],
        }
        path = self.root / "sessions" / f"{session.session_id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(doc, ensure_ascii=False) + "\n", encoding="utf-8")
        tmp.replace(path)

    # -- trajectories ----------------------------------------------------------

    @property
    def trajectories_path(self) -> Path:
        return self.root / "trajectories.jsonl"

    def record_trajectory(self, session: PlaySession, slot: TaskSlot, traj: Trajectory):
        traj.tags.update({
            "participant": session.participant_id,
            "task_set": session.session_id,
            "domain": slot.domain,
            "difficulty": slot.difficulty,
            "slot": str(slot.index),
        })
        append_trajectory(self.trajectories_path, traj)

    def earnings_from_log(self, session_id: str) -> Earnings | None:
        """Recompute a finished set's earnings from persisted records only."""
        if not self.trajectories_path.exists():
            return None
        records, _ = load_trajectories(self.trajectories_path)
        mine = [t for t in records if t.tags.get("task_set") == session_id]
        if not mine:
            return None
        rate = sum(1 for t in mine if t.succeeded) / len(mine)
        actions = sum(t.action_count for t in mine)
        return Earnings.compute(rate, actions)
