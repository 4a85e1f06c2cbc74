"""Turning parsed generations into trainer-ready corpora.

Covers composite supervision construction, flag-based filtering with a
drop report, exact deduplication, seeded low-resource subsampling,
q-expansion planning, and JSONL/TSV export.

The subsampling PRNG recipe is fixed bit-exactly so any implementation
language reproduces identical subsets:

    state: unsigned 64-bit, initialized to the seed
    next(): state += 0x9E3779B97F4A7C15 (mod 2^64)
            z = state
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 (mod 2^64)
            z = (z ^ (z >> 27)) * 0x94D049BB133111EB (mod 2^64)
            return z ^ (z >> 31)                      [splitmix64]

    selection: partial Fisher-Yates over the index array 0..n-1;
    for i in 0..k-1: j = i + next() % (n - i); swap(idx[i], idx[j]).
    The first k indices, sorted ascending, are the sample (so output
    preserves the input's relative order).
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    AllRecordsFiltered,
    FileMissing,
    LengthMismatch,
    MissingGoldTarget,
    SampleTooLarge,
    SchemaViolation,
    UnescapableField,
)
from .parsing import GenerationRecord, QualityFlag
from .prompts import StyleDirection, completion_body, render_student_input

FORMAT_JSONL = "jsonl-pairs"
FORMAT_TSV = "tsv-pairs"
FORMATS = (FORMAT_JSONL, FORMAT_TSV)

_MASK64 = (1 << 64) - 1


class Provenance(str, Enum):
    TARGET_BLIND = "tb"
    TARGET_AWARE = "ta"


def source_id(text: str) -> str:
    """Stable 16-hex identifier: SHA-256 prefix of the NFC-normalized,
    whitespace-collapsed source text. Used to join TB/TA runs and gold files."""
    normalized = " ".join(unicodedata.normalize("NFC", text).split())
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class TrainingExample:
    input: str
    supervision: str
    provenance: Provenance
    source_id: str
    sample_index: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class FilterPolicy:
    name: str
    drop: frozenset


DEFAULT_POLICY = FilterPolicy(
    "default", frozenset({QualityFlag.MISSING_MARKER, QualityFlag.EMPTY_TRANSFERRED})
)
STRICT_POLICY = FilterPolicy("strict", frozenset(QualityFlag))
POLICIES = {p.name: p for p in (DEFAULT_POLICY, STRICT_POLICY)}

# Drop accounting attributes each dropped record to exactly one flag, in
# this order, so |examples| + sum(drop_report) == |records| always holds.
_FLAG_ORDER = list(QualityFlag)


@dataclass
class BuildResult:
    examples: list[TrainingExample]
    drop_report: dict[str, int] = field(default_factory=dict)


def _sorted_records(records: Iterable[GenerationRecord]) -> list[GenerationRecord]:
    # Generation may complete out of order; builds are canonicalized here.
    return sorted(records, key=lambda r: (source_id(r.source), r.sample_index))


def _drop_flag(record: GenerationRecord, policy: FilterPolicy) -> QualityFlag | None:
    for flag in _FLAG_ORDER:
        if flag in record.flags and flag in policy.drop:
            return flag
    if record.transferred is None:
        # Unsplittable completion; no supervision can be composed.
        return QualityFlag.MISSING_MARKER
    return None


def build_tb(
    records: Iterable[GenerationRecord], policy: FilterPolicy = DEFAULT_POLICY
) -> BuildResult:
    """Target-blind supervision: rationale, newline, marker, synthetic text.

    Records carrying a policy drop flag are counted in the drop report;
    surviving flags (e.g. copied_source under the default policy) ride
    along as example metadata.
    """
    examples = []
    report: dict[str, int] = {}
    records = _sorted_records(records)
    for record in records:
        dropped = _drop_flag(record, policy)
        if dropped is not None:
            report[dropped.value] = report.get(dropped.value, 0) + 1
            continue
        examples.append(
            TrainingExample(
                input=render_student_input(record.source, record.style),
                supervision=completion_body(record.cot, record.transferred),
                provenance=Provenance.TARGET_BLIND,
                source_id=source_id(record.source),
                sample_index=record.sample_index,
                flags=tuple(sorted(f.value for f in record.flags)),
            )
        )
    if records and not examples:
        raise AllRecordsFiltered(f"all {len(records)} records dropped: {report}")
    return BuildResult(examples, report)


def build_ta(
    records: Iterable[GenerationRecord], gold: Mapping[str, str]
) -> BuildResult:
    """Target-aware supervision: the generated explanation joined with the
    human-annotated gold target. The synthetic transferred field is never
    consulted."""
    examples = []
    for record in _sorted_records(records):
        sid = source_id(record.source)
        if sid not in gold:
            raise MissingGoldTarget(sid)
        examples.append(
            TrainingExample(
                input=render_student_input(record.source, record.style),
                supervision=completion_body(record.cot, gold[sid]),
                provenance=Provenance.TARGET_AWARE,
                source_id=sid,
                sample_index=record.sample_index,
                flags=tuple(sorted(f.value for f in record.flags)),
            )
        )
    return BuildResult(examples, {})


# --- seeded subsampling -------------------------------------------------------

def _splitmix64(seed: int):
    state = seed & _MASK64

    def next_u64() -> int:
        nonlocal state
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    return next_u64


def subsample_indices(n_total: int, k: int, seed: int) -> list[int]:
    """The documented partial Fisher-Yates selection; ascending indices."""
    if k > n_total:
        raise SampleTooLarge(f"cannot sample {k} from {n_total}")
    next_u64 = _splitmix64(seed)
    indices = list(range(n_total))
    for i in range(k):
        j = i + next_u64() % (n_total - i)
        indices[i], indices[j] = indices[j], indices[i]
    return sorted(indices[:k])


def subsample(examples: Sequence[TrainingExample], n: int, seed: int) -> list[TrainingExample]:
    """Uniform sample without replacement, deterministic in (seed, input
    order), preserving the input's relative order."""
    return [examples[i] for i in subsample_indices(len(examples), n, seed)]


# --- q-expansion ---------------------------------------------------------------

@dataclass(frozen=True)
class PlanRequest:
    source_id: str
    sample_index: int
    source: str


@dataclass
class GenerationPlan:
    sources: tuple[tuple[str, str], ...]  # (source_id, text), unique by id
    q: int
    style: StyleDirection

    def __len__(self) -> int:
        return len(self.sources) * self.q

    def requests(self) -> list[PlanRequest]:
        return [
            PlanRequest(sid, sample_index, text)
            for sid, text in self.sources
            for sample_index in range(self.q)
        ]


def expand_plan(sources: Iterable[str], q: int, style: StyleDirection) -> GenerationPlan:
    """|unique sources| x q requests; duplicate source texts collapse to one
    entry so every (source_id, sample_index) pair is unique."""
    if q < 1:
        raise ValueError(f"q must be positive, got {q}")
    seen: dict[str, str] = {}
    for text in sources:
        sid = source_id(text)
        if sid not in seen:
            seen[sid] = text
    return GenerationPlan(tuple(seen.items()), q, style)


# --- dedup ----------------------------------------------------------------------

def dedup(examples: Iterable[TrainingExample]) -> list[TrainingExample]:
    """Remove exact (input, supervision) duplicates, keeping first occurrence."""
    seen: set[tuple[str, str]] = set()
    out = []
    for ex in examples:
        key = (ex.input, ex.supervision)
        if key not in seen:
            seen.add(key)
            out.append(ex)
    return out


# --- export / import -------------------------------------------------------------

_TSV_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def _tsv_escape(text: str) -> str:
    out = []
    for ch in text:
        out.append(_TSV_ESCAPES.get(ch, ch))
    return "".join(out)


def _tsv_unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def export_examples(
    examples: Sequence[TrainingExample],
    path: str | Path,
    format: str = FORMAT_JSONL,
    escape: bool = True,
) -> Path:
    path = Path(path)
    if format == FORMAT_JSONL:
        lines = [
            json.dumps(
                {
                    "input": ex.input,
                    "supervision": ex.supervision,
                    "provenance": ex.provenance.value,
                    "source_id": ex.source_id,
                    "sample_index": ex.sample_index,
                    "flags": list(ex.flags),
                },
                sort_keys=True,
                ensure_ascii=False,
            )
            for ex in examples
        ]
    elif format == FORMAT_TSV:
        lines = []
        for ex in examples:
            if not escape and any(c in ex.input + ex.supervision for c in "\t\n\r"):
                raise UnescapableField(
                    f"example {ex.source_id}/{ex.sample_index} contains tab/newline and escaping is disabled"
                )
            left = _tsv_escape(ex.input) if escape else ex.input
            right = _tsv_escape(ex.supervision) if escape else ex.supervision
            lines.append(f"{left}\t{right}")
    else:
        raise ValueError(f"unknown export format {format!r}")
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def import_examples(path: str | Path, format: str = FORMAT_JSONL) -> list[TrainingExample]:
    """Inverse of export. TSV carries only the (input, supervision) pair;
    the remaining metadata comes back as defaults."""
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"dataset file not found: {path}")
    out = []
    if format == FORMAT_JSONL:
        with path.open(encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise SchemaViolation(f"{path}:{line_no}: invalid JSON", line=line_no) from e
                out.append(
                    TrainingExample(
                        input=obj["input"],
                        supervision=obj["supervision"],
                        provenance=Provenance(obj["provenance"]),
                        source_id=obj["source_id"],
                        sample_index=obj["sample_index"],
                        flags=tuple(obj.get("flags", [])),
                    )
                )
    elif format == FORMAT_TSV:
        with path.open(encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise SchemaViolation(
                        f"{path}:{line_no}: expected 2 tab-separated columns, got {len(parts)}",
                        line=line_no,
                    )
                out.append(
                    TrainingExample(
                        input=_tsv_unescape(parts[0]),
                        supervision=_tsv_unescape(parts[1]),
                        provenance=Provenance.TARGET_BLIND,
                        source_id="",
                        sample_index=0,
                    )
                )
    else:
        raise ValueError(f"unknown import format {format!r}")
    return out


# --- gold corpora -----------------------------------------------------------------

def load_gold_jsonl(path: str | Path) -> dict[str, str]:
    """JSONL {source, target} -> {source_id: target}; first occurrence wins."""
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"gold file not found: {path}")
    gold: dict[str, str] = {}
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaViolation(f"{path}:{line_no}: invalid JSON", line=line_no) from e
            if "source" not in obj or "target" not in obj:
                raise SchemaViolation(f"{path}:{line_no}: need source and target", line=line_no)
            gold.setdefault(source_id(obj["source"]), obj["target"])
    return gold


def load_gold_aligned(source_path: str | Path, target_path: str | Path) -> dict[str, str]:
    """Two aligned text files, one sentence per line."""
    for p in (source_path, target_path):
        if not Path(p).is_file():
            raise FileMissing(f"gold file not found: {p}")
    sources = Path(source_path).read_text(encoding="utf-8").splitlines()
    targets = Path(target_path).read_text(encoding="utf-8").splitlines()
    if len(sources) != len(targets):
        raise LengthMismatch(len(sources), len(targets))
    gold: dict[str, str] = {}
    for src, tgt in zip(sources, targets):
        gold.setdefault(source_id(src), tgt)
    return gold
