"""Splitting raw completions into (rationale, transferred text).

Parsing is total: malformed completions never raise, they come back with
quality flags. Filtering policy lives in the dataset builder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .backend import RawCompletion
from .prompts import (
    EXPLANATION_MARKER,
    TRANSFERRED_MARKER_VARIANTS,
    StyleDirection,
)


class QualityFlag(str, Enum):
    MISSING_MARKER = "missing_marker"
    EMPTY_COT = "empty_cot"
    EMPTY_TRANSFERRED = "empty_transferred"
    COPIED_SOURCE = "copied_source"
    MULTIPLE_MARKERS = "multiple_markers"
    TRUNCATED_OUTPUT = "truncated_output"


@dataclass
class GenerationRecord:
    """One parsed generation: source in, rationale and (in target-blind
    mode) transferred text out."""

    source: str
    style: StyleDirection
    cot: str
    transferred: str | None
    raw: RawCompletion
    flags: frozenset = field(default_factory=frozenset)
    sample_index: int = 0


def _match_marker(line: str, markers: tuple[str, ...]) -> str | None:
    stripped = line.lstrip()
    # Longest marker first so nested variants cannot shadow each other.
    for marker in sorted(markers, key=len, reverse=True):
        if stripped.startswith(marker):
            return marker
    return None


def parse_tb(
    raw: str, markers: tuple[str, ...] = TRANSFERRED_MARKER_VARIANTS
) -> tuple[str, str | None, frozenset]:
    """Split a target-blind completion at the FIRST marker line.

    Returns (cot, transferred, flags); transferred is None when no marker
    line exists (flagged MISSING_MARKER). Marker matching is exact after
    a leading-whitespace trim; both bracket variants are accepted.
    """
    flags = set()
    lines = raw.split("\n")
    split_at = None
    matched = None
    for i, line in enumerate(lines):
        marker = _match_marker(line, markers)
        if marker is not None:
            split_at, matched = i, marker
            break

    if split_at is None:
        cot = raw.strip()
        flags.add(QualityFlag.MISSING_MARKER)
        if not cot:
            flags.add(QualityFlag.EMPTY_COT)
        return cot, None, frozenset(flags)

    cot = "\n".join(lines[:split_at]).strip()
    remainder = lines[split_at].lstrip()[len(matched) :]
    transferred = "\n".join([remainder] + lines[split_at + 1 :]).strip()
    if not cot:
        flags.add(QualityFlag.EMPTY_COT)
    return cot, transferred, frozenset(flags)


def parse_ta(raw: str, marker: str = EXPLANATION_MARKER) -> tuple[str, frozenset]:
    """Strip the leading explanation marker from a target-aware completion."""
    flags = set()
    stripped = raw.strip()
    if stripped.startswith(marker):
        cot = stripped[len(marker) :].strip()
    else:
        cot = stripped
        flags.add(QualityFlag.MISSING_MARKER)
    if not cot:
        flags.add(QualityFlag.EMPTY_COT)
    return cot, frozenset(flags)


def _normalized(text: str) -> str:
    return " ".join(text.split()).lower()


def assess(record: GenerationRecord) -> frozenset:
    """Content-level flags on top of the structural parse flags."""
    flags = set()
    if record.transferred is not None:
        if not record.transferred.strip():
            flags.add(QualityFlag.EMPTY_TRANSFERRED)
        elif _normalized(record.transferred) == _normalized(record.source):
            flags.add(QualityFlag.COPIED_SOURCE)
    marker_line_count = sum(
        1 for line in record.raw.text.split("\n") if _match_marker(line, TRANSFERRED_MARKER_VARIANTS)
    )
    if marker_line_count > 1:
        flags.add(QualityFlag.MULTIPLE_MARKERS)
    if record.raw.truncated:
        flags.add(QualityFlag.TRUNCATED_OUTPUT)
    return frozenset(flags)


def parse_record_tb(
    source: str, style: StyleDirection, raw: RawCompletion, sample_index: int = 0
) -> GenerationRecord:
    cot, transferred, flags = parse_tb(raw.text)
    record = GenerationRecord(source, style, cot, transferred, raw, flags, sample_index)
    record.flags = flags | assess(record)
    return record


def parse_record_ta(
    source: str, style: StyleDirection, raw: RawCompletion, sample_index: int = 0
) -> GenerationRecord:
    cot, flags = parse_ta(raw.text)
    record = GenerationRecord(source, style, cot, None, raw, flags, sample_index)
    record.flags = flags | assess(record)
    return record


# --- JSONL round trip ---------------------------------------------------------
# One object per line: {source, target_style, cot, transferred, flags,
# sample_index, request_digest} (+ source_style / task_instruction when set,
# so the style direction survives the file boundary). Raw completion text
# stays in the completions file, keyed by request_digest.

def record_to_dict(record: GenerationRecord) -> dict:
    out = {
        "source": record.source,
        "target_style": record.style.target_style,
        "cot": record.cot,
        "transferred": record.transferred,
        "flags": sorted(f.value for f in record.flags),
        "sample_index": record.sample_index,
        "request_digest": record.raw.request_digest,
    }
    if record.style.source_style:
        out["source_style"] = record.style.source_style
    if record.style.task_instruction:
        out["task_instruction"] = record.style.task_instruction
    return out


def record_from_dict(obj: dict) -> GenerationRecord:
    style = StyleDirection(
        source_style=obj.get("source_style", ""),
        target_style=obj["target_style"],
        task_instruction=obj.get("task_instruction", ""),
    )
    raw = RawCompletion(
        text="",
        backend_id="",
        cached=True,
        request_digest=obj.get("request_digest", ""),
    )
    return GenerationRecord(
        source=obj["source"],
        style=style,
        cot=obj["cot"],
        transferred=obj.get("transferred"),
        raw=raw,
        flags=frozenset(QualityFlag(f) for f in obj.get("flags", [])),
        sample_index=obj.get("sample_index", 0),
    )


def write_records(records: list[GenerationRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record_to_dict(record), sort_keys=True, ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[GenerationRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records
