"""Per-learner record persistence.

The event log (``records/<learner_id>.log``, one JSON object per line with
monotonically increasing ``seq``) is the durable truth; the snapshot file is
a derived cache rebuilt from the log on any disagreement. A store created
without a root directory keeps everything in memory, which the simulator
uses for throwaway learners.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import Event

_SAFE_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.")


def _safe_name(learner_id: str) -> str:
    if not learner_id or any(ch not in _SAFE_CHARS for ch in learner_id):
        raise ValueError(f"learner id {learner_id!r} not usable as a record name")
    return learner_id


class RecordStore:
    """Append-only event logs plus snapshot and inbox sidecars."""

    def __init__(self, root: Path | str | None = None):
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
        self._events: dict[str, list[Event]] = {}
        self._snapshots: dict[str, dict] = {}
        self._inboxes: dict[str, list[dict]] = {}

    # --- event log ---------------------------------------------------------

    def append_event(self, learner_id: str, event: Event) -> None:
        self._events.setdefault(learner_id, []).append(event)
        if self.root is not None:
            path = self.root / f"{_safe_name(learner_id)}.log"
            with open(path, "a", encoding="utf-8") as f:
                f.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")

    def read_events(self, learner_id: str) -> list[Event]:
        if self.root is not None:
            path = self.root / f"{_safe_name(learner_id)}.log"
            if not path.exists():
                return []
            events = []
            with open(path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        events.append(Event.from_dict(json.loads(line)))
            return events
        return list(self._events.get(learner_id, []))

    # --- snapshot ----------------------------------------------------------

    def write_snapshot(self, learner_id: str, snapshot: dict) -> None:
        self._snapshots[learner_id] = snapshot
        if self.root is not None:
            path = self.root / f"{_safe_name(learner_id)}.snapshot"
            path.write_text(
                json.dumps(snapshot, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )

    def read_snapshot(self, learner_id: str) -> dict | None:
        if self.root is not None:
            path = self.root / f"{_safe_name(learner_id)}.snapshot"
            if not path.exists():
                return None
            return json.loads(path.read_text(encoding="utf-8"))
        return self._snapshots.get(learner_id)

    # --- inbox sidecar -------------------------------------------------------

    def read_inbox(self, learner_id: str) -> list[dict]:
        if self.root is not None:
            path = self.root / f"{_safe_name(learner_id)}.inbox.json"
            if not path.exists():
                return []
            return json.loads(path.read_text(encoding="utf-8"))
        return list(self._inboxes.get(learner_id, []))

    def write_inbox(self, learner_id: str, messages: list[dict]) -> None:
        self._inboxes[learner_id] = list(messages)
        if self.root is not None:
            path = self.root / f"{_safe_name(learner_id)}.inbox.json"
            path.write_text(
                json.dumps(messages, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )

    def learner_ids(self) -> list[str]:
        if self.root is not None:
            return sorted(p.stem for p in self.root.glob("*.log"))
        return sorted(self._events)
