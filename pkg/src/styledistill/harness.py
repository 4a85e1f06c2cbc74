"""Evaluation orchestration: scoring runs, best-checkpoint selection,
sentence-level ranking for qualitative study, and comparison tables."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .bleu import BleuConfig, BleuReport, DEFAULT_CONFIG, corpus_bleu, sentence_bleu, signature
from .errors import (
    ConfigError,
    FileMissing,
    LengthMismatch,
    NoCandidates,
    SignatureMismatch,
)

DEFAULT_SWEEP_SIZES = (1000, 2000, 5000, 10000, 20000)

SIZE_FULL = "full"


@dataclass
class RunManifest:
    run_id: str
    dataset: str
    method_label: str
    size: int | str
    hyp_path: str
    ref_path: str
    config: BleuConfig = DEFAULT_CONFIG
    val_hyp_path: str | None = None
    val_ref_path: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "RunManifest":
        cfg = obj.get("config", {})
        return cls(
            run_id=obj["run_id"],
            dataset=obj.get("dataset", ""),
            method_label=obj.get("method_label", obj["run_id"]),
            size=obj.get("size", SIZE_FULL),
            hyp_path=obj["hyp_path"],
            ref_path=obj["ref_path"],
            config=BleuConfig(**cfg),
            val_hyp_path=obj.get("val_hyp_path"),
            val_ref_path=obj.get("val_ref_path"),
        )


def load_manifest(path: str | Path) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"manifest not found: {path}")
    return RunManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _read_lines(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"file not found: {path}")
    return path.read_text(encoding="utf-8").splitlines()


def _score_files(hyp_path: str | Path, ref_path: str | Path, config: BleuConfig) -> BleuReport:
    hyps = _read_lines(hyp_path)
    refs = _read_lines(ref_path)
    if len(hyps) != len(refs):
        raise LengthMismatch(len(hyps), len(refs))
    return corpus_bleu(hyps, refs, config)


def evaluate_run(manifest: RunManifest, persist: bool = True) -> BleuReport:
    """Corpus BLEU for one run; the report is persisted beside the
    hypothesis file with a digest of the inputs for staleness checks."""
    report = _score_files(manifest.hyp_path, manifest.ref_path, manifest.config)
    if persist:
        hyp_bytes = Path(manifest.hyp_path).read_bytes()
        ref_bytes = Path(manifest.ref_path).read_bytes()
        payload = dict(report.to_dict())
        payload.update(
            {
                "run_id": manifest.run_id,
                "dataset": manifest.dataset,
                "method_label": manifest.method_label,
                "size": manifest.size,
                "inputs_digest": hashlib.sha256(hyp_bytes + ref_bytes).hexdigest()[:16],
            }
        )
        report_path = Path(str(manifest.hyp_path) + ".bleu.json")
        report_path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    return report


@dataclass
class SelectionResult:
    best: RunManifest
    scores: list[tuple[str, float]] = field(default_factory=list)
    tie_run_ids: list[str] = field(default_factory=list)


def select_best(candidates: Sequence[RunManifest], validation_refs: str | Path) -> SelectionResult:
    """Pick the candidate with the highest validation corpus BLEU.

    Ties break toward the earliest candidate and are recorded in the result.
    """
    if not candidates:
        raise NoCandidates("select_best needs at least one candidate")
    scores: list[tuple[str, float]] = []
    best_idx = 0
    best_score = float("-inf")
    for i, cand in enumerate(candidates):
        if not cand.val_hyp_path:
            raise ConfigError(f"candidate {cand.run_id} has no validation hypothesis file")
        report = _score_files(cand.val_hyp_path, validation_refs, cand.config)
        scores.append((cand.run_id, report.score))
        if report.score > best_score:
            best_score = report.score
            best_idx = i
    ties = [run_id for run_id, score in scores if score == best_score]
    return SelectionResult(
        best=candidates[best_idx],
        scores=scores,
        tie_run_ids=ties if len(ties) > 1 else [],
    )


def rank_outputs(
    hypotheses: Sequence[str],
    references: Sequence[str],
    config: BleuConfig = DEFAULT_CONFIG,
) -> list[tuple[int, float]]:
    """Indices ordered by descending sentence BLEU; stable for equal scores."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(len(hypotheses), len(references))
    scored = [
        (i, sentence_bleu(hyp, ref, config).score)
        for i, (hyp, ref) in enumerate(zip(hypotheses, references))
    ]
    return sorted(scored, key=lambda pair: -pair[1])


# --- tables -----------------------------------------------------------------

FORMAT_MARKDOWN = "markdown"
FORMAT_CSV = "csv"


def _check_single_signature(signatures: Sequence[str]) -> str:
    distinct = sorted(set(signatures))
    if len(distinct) > 1:
        raise SignatureMismatch(f"reports span multiple configurations: {distinct}")
    return distinct[0]


def compare_table(
    reports: Sequence[tuple[str, BleuReport]],
    format: str = FORMAT_MARKDOWN,
) -> str:
    """One row per labeled report, ordered by label; in markdown the best
    score is bolded (ties bold every maximum)."""
    if not reports:
        raise NoCandidates("compare_table needs at least one report")
    _check_single_signature([report.signature for _, report in reports])
    rows = sorted(((label, report.score) for label, report in reports), key=lambda r: r[0])
    best = max(score for _, score in rows)

    if format == FORMAT_CSV:
        lines = ["method,bleu"]
        lines += [f"{label},{score:.2f}" for label, score in rows]
        return "\n".join(lines) + "\n"
    if format == FORMAT_MARKDOWN:
        lines = ["| Method | BLEU |", "| --- | --- |"]
        for label, score in rows:
            if score == best:
                lines.append(f"| **{label}** | **{score:.2f}** |")
            else:
                lines.append(f"| {label} | {score:.2f} |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {format!r}")


# --- low-resource sweeps -------------------------------------------------------

@dataclass
class SweepRow:
    size: int | str
    method_label: str
    score: float


@dataclass
class SweepTable:
    rows: list[SweepRow]
    signature: str


def _size_key(size: int | str) -> tuple[int, int]:
    return (1, 0) if size == SIZE_FULL else (0, int(size))


def build_sweep(
    manifests: Sequence[RunManifest],
    sizes: Sequence[int] | None = None,
    persist: bool = False,
) -> SweepTable:
    """Evaluate runs across training sizes; rows ascend by size.

    All manifests must share one scoring configuration.
    """
    if not manifests:
        raise NoCandidates("sweep needs at least one run")
    selected = list(manifests)
    if sizes is not None:
        wanted = set(sizes)
        selected = [m for m in selected if m.size in wanted]
        if not selected:
            raise NoCandidates(f"no runs at sizes {sorted(wanted)}")
    sig = _check_single_signature([signature(m.config) for m in selected])
    rows = [
        SweepRow(m.size, m.method_label, evaluate_run(m, persist=persist).score)
        for m in selected
    ]
    rows.sort(key=lambda r: (_size_key(r.size), r.method_label))
    return SweepTable(rows, sig)


def render_sweep(table: SweepTable, format: str = FORMAT_MARKDOWN) -> str:
    if format == FORMAT_CSV:
        lines = ["size,method,bleu"]
        lines += [f"{r.size},{r.method_label},{r.score:.2f}" for r in table.rows]
        return "\n".join(lines) + "\n"
    if format == FORMAT_MARKDOWN:
        lines = ["| Size | Method | BLEU |", "| --- | --- | --- |"]
        lines += [f"| {r.size} | {r.method_label} | {r.score:.2f} |" for r in table.rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {format!r}")
