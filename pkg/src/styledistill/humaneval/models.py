"""Domain types for the four-level rationale-rating protocol."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

RATES = ("A", "B", "C", "D")
ACCEPTABLE_RATES = ("A", "B")

_RUBRIC_PATH = Path(__file__).parent.parent / "data" / "rubric.json"


@dataclass(frozen=True)
class EvalItem:
    """One generation to judge: the source, the rationale under review,
    and the transferred text it led to."""

    item_id: str
    source: str
    rationale: str
    transferred: str
    task_label: str
    model_label: str

    def __post_init__(self):
        for name in ("item_id", "source", "rationale", "transferred", "task_label", "model_label"):
            if not getattr(self, name).strip():
                raise ValueError(f"EvalItem field {name!r} must be non-empty")

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "source": self.source,
            "rationale": self.rationale,
            "transferred": self.transferred,
            "task_label": self.task_label,
            "model_label": self.model_label,
        }


@dataclass(frozen=True)
class RubricLevel:
    label: str
    criteria: str


@dataclass(frozen=True)
class RubricDefinition:
    levels: tuple[RubricLevel, ...]
    version: str = "rubric-v1"

    def __post_init__(self):
        labels = [level.label for level in self.levels]
        if labels != list(RATES):
            raise ValueError(f"rubric must define exactly levels {RATES}, got {labels}")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "levels": [{"label": lv.label, "criteria": lv.criteria} for lv in self.levels],
        }


def default_rubric() -> RubricDefinition:
    obj = json.loads(_RUBRIC_PATH.read_text(encoding="utf-8"))
    return RubricDefinition(
        levels=tuple(RubricLevel(lv["label"], lv["criteria"]) for lv in obj["levels"]),
        version=obj["version"],
    )


@dataclass
class AnnotationSession:
    session_id: str
    annotator_id: str
    items: list[EvalItem]
    ratings: dict[str, str] = field(default_factory=dict)
    rubric_version: str = "rubric-v1"
    created_at: str = ""

    @property
    def complete(self) -> bool:
        return len(self.ratings) == len(self.items)

    def next_unrated(self) -> EvalItem | None:
        for item in self.items:
            if item.item_id not in self.ratings:
                return item
        return None
