"""Crash-safe session persistence.

Each session is an append-only JSONL event log (one create event, then
one rate event per judgment) replayed on startup. Ratings are immutable:
corrections require a new session so analyses stay honest.
"""

from __future__ import annotations

import csv
import io
import json
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from ..dataset import subsample_indices
from ..errors import (
    AlreadyRated,
    DuplicateItemId,
    EmptyItemList,
    InvalidRate,
    NoRatings,
    UnknownItem,
    UnknownSession,
)
from .models import ACCEPTABLE_RATES, RATES, AnnotationSession, EvalItem, RubricDefinition, default_rubric

DEFAULT_SESSION_SIZE = 50


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class SessionStore:
    def __init__(self, data_dir: str | Path, fsync: bool = False):
        self._dir = Path(data_dir) / "sessions"
        self._dir.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._sessions: dict[str, AnnotationSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for log in sorted(self._dir.glob("*.jsonl")):
            session = self._replay(log)
            if session is not None:
                self._sessions[session.session_id] = session
                self._locks[session.session_id] = threading.Lock()

    # --- event log ------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        with self._log_path(session_id).open("a", encoding="utf-8") as f:
            f.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")
            f.flush()
            if self._fsync:
                import os

                os.fsync(f.fileno())

    @staticmethod
    def _replay(path: Path) -> AnnotationSession | None:
        session: AnnotationSession | None = None
        with path.open(encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["type"] == "create":
                    session = AnnotationSession(
                        session_id=event["session_id"],
                        annotator_id=event["annotator_id"],
                        items=[EvalItem(**item) for item in event["items"]],
                        rubric_version=event["rubric_version"],
                        created_at=event["created_at"],
                    )
                elif event["type"] == "rate" and session is not None:
                    # first write wins; ratings are immutable
                    session.ratings.setdefault(event["item_id"], event["rate"])
        return session

    # --- sessions ---------------------------------------------------------

    def create_session(
        self,
        items: Sequence[EvalItem],
        annotator_id: str,
        rubric: RubricDefinition | None = None,
    ) -> str:
        items = list(items)
        if not items:
            raise EmptyItemList("a session needs at least one item")
        seen: set[str] = set()
        for item in items:
            if item.item_id in seen:
                raise DuplicateItemId(f"duplicate item_id {item.item_id!r}")
            seen.add(item.item_id)
        rubric = rubric or default_rubric()
        session_id = uuid.uuid4().hex[:12]
        session = AnnotationSession(
            session_id=session_id,
            annotator_id=annotator_id,
            items=items,
            rubric_version=rubric.version,
            created_at=_now(),
        )
        with self._registry_lock:
            self._sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
        self._append(
            session_id,
            {
                "type": "create",
                "session_id": session_id,
                "annotator_id": annotator_id,
                "rubric_version": rubric.version,
                "created_at": session.created_at,
                "items": [item.to_dict() for item in items],
            },
        )
        return session_id

    def draw_session(
        self,
        pool: Sequence[EvalItem],
        annotator_id: str,
        rubric: RubricDefinition | None = None,
        size: int = DEFAULT_SESSION_SIZE,
        seed: int = 0,
    ) -> str:
        """Seeded draw from an item pool (same selection recipe as dataset
        subsampling), defaulting to 50 items per session."""
        chosen = [pool[i] for i in subsample_indices(len(pool), size, seed)]
        return self.create_session(chosen, annotator_id, rubric)

    def get_session(self, session_id: str) -> AnnotationSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def session_ids(self) -> list[str]:
        return sorted(self._sessions)

    def next_item(self, session_id: str) -> EvalItem | None:
        """First unrated item in session order; None when complete."""
        return self.get_session(session_id).next_unrated()

    def submit_rating(self, session_id: str, item_id: str, rate: str) -> AnnotationSession:
        if rate not in RATES:
            raise InvalidRate(f"rate must be one of {RATES}, got {rate!r}")
        session = self.get_session(session_id)
        with self._locks[session_id]:
            if not any(item.item_id == item_id for item in session.items):
                raise UnknownItem(f"no item {item_id!r} in session {session_id}")
            if item_id in session.ratings:
                raise AlreadyRated(f"item {item_id!r} already rated")
            self._append(session_id, {"type": "rate", "item_id": item_id, "rate": rate, "at": _now()})
            session.ratings[item_id] = rate
        return session

    # --- analysis -----------------------------------------------------------

    def _rated_items(self, task_label: str | None, model_label: str | None):
        for session in self._sessions.values():
            by_id = {item.item_id: item for item in session.items}
            for item_id, rate in session.ratings.items():
                item = by_id[item_id]
                if task_label and item.task_label != task_label:
                    continue
                if model_label and item.model_label != model_label:
                    continue
                yield item, rate

    def summarize(self, task_label: str | None = None, model_label: str | None = None) -> dict:
        """Rating distribution over all sessions, optionally filtered by
        task/model label. acceptable_rate = (A + B) / total."""
        counts = {rate: 0 for rate in RATES}
        for _, rate in self._rated_items(task_label, model_label):
            counts[rate] += 1
        total = sum(counts.values())
        if total == 0:
            raise NoRatings("no ratings match the given filters")
        acceptable = sum(counts[r] for r in ACCEPTABLE_RATES)
        return {"counts": counts, "total": total, "acceptable_rate": acceptable / total}

    def summarize_groups(self) -> list[dict]:
        """Per (model, task) distributions, for stacked-bar rendering."""
        groups: dict[tuple[str, str], dict[str, int]] = {}
        for item, rate in self._rated_items(None, None):
            key = (item.model_label, item.task_label)
            counts = groups.setdefault(key, {r: 0 for r in RATES})
            counts[rate] += 1
        out = []
        for (model_label, task_label) in sorted(groups):
            counts = groups[(model_label, task_label)]
            total = sum(counts.values())
            acceptable = sum(counts[r] for r in ACCEPTABLE_RATES)
            out.append(
                {
                    "model_label": model_label,
                    "task_label": task_label,
                    "counts": counts,
                    "total": total,
                    "acceptable_rate": acceptable / total,
                }
            )
        return out

    def export_csv(self, session_id: str) -> str:
        session = self.get_session(session_id)
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["item_id", "source", "rationale", "transferred", "rate"])
        for item in session.items:
            writer.writerow(
                [item.item_id, item.source, item.rationale, item.transferred, session.ratings.get(item.item_id, "")]
            )
        return buffer.getvalue()
