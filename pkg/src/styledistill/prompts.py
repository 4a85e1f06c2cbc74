"""Few-shot prompt rendering for style-transfer data generation.

Two prompt shapes are supported: target-blind (source + target style in,
rationale + transferred text out) and target-aware (source + gold target
in, rationale out). The student-model input is the target-blind query
block with no exemplars.

The rendered skeleton is fixed so outputs are byte-stable:

    <instruction>
    Source: <s>
    <trigger>
    <cot>
    <marker> <t>
    <blank line>

exemplar blocks first, then the query block (which stops after the line
the model is expected to continue).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import (
    EmptyGoldTarget,
    EmptySource,
    FileMissing,
    MarkerInExemplar,
    SchemaViolation,
    TemplateKindMismatch,
)

TRIGGER_PHRASE = "Let's break down the rewriting process step by step."
TRANSFERRED_MARKER = "[Transferred]:"
TRANSFERRED_MARKER_VARIANTS = ("[Transferred]:", "[[Transferred]]:")
EXPLANATION_MARKER = "[EXPLANATION]:"

# Stand-in wording: the tuned instruction strings behind the published
# results were never released, so these defaults are freely replaceable
# via StyleDirection.task_instruction or a template config file.
DEFAULT_TB_INSTRUCTION = (
    "Rewrite the following text so that its style is {target_style} while keeping its meaning."
)
DEFAULT_TA_INSTRUCTION = (
    "Explain step by step how the source text below was rewritten into the target text, "
    "whose style is {target_style}."
)

_DATA_DIR = Path(__file__).parent / "data"


class TemplateKind(str, Enum):
    TARGET_BLIND = "tb"
    TARGET_AWARE = "ta"
    STUDENT_INPUT = "student"


@dataclass(frozen=True)
class StyleDirection:
    """A transfer direction such as informal -> formal.

    ``task_instruction`` may contain ``{source_style}`` / ``{target_style}``
    placeholders; when empty, the template's default instruction is used.
    """

    source_style: str
    target_style: str
    task_instruction: str = ""

    def __post_init__(self):
        if not self.target_style.strip():
            raise ValueError("target_style must be non-empty")
        for label in (self.source_style, self.target_style):
            if "\n" in label:
                raise ValueError(f"style labels must not contain newlines: {label!r}")


@dataclass(frozen=True)
class Exemplar:
    source: str
    cot: str
    target: str

    def __post_init__(self):
        for name in ("source", "cot", "target"):
            if not getattr(self, name).strip():
                raise ValueError(f"exemplar field {name!r} must be non-empty")


@dataclass(frozen=True)
class PromptTemplate:
    kind: TemplateKind
    trigger_phrase: str = TRIGGER_PHRASE
    transferred_marker: str = TRANSFERRED_MARKER
    explanation_marker: str = EXPLANATION_MARKER
    instruction: str = ""
    exemplars: tuple[Exemplar, ...] = ()

    def __post_init__(self):
        if self.transferred_marker == self.explanation_marker:
            raise ValueError("transferred and explanation markers must differ")
        if self.kind in (TemplateKind.TARGET_BLIND, TemplateKind.STUDENT_INPUT):
            if not self.trigger_phrase.strip():
                raise ValueError("target-blind templates require a trigger phrase")
        if not self.instruction:
            default = (
                DEFAULT_TA_INSTRUCTION
                if self.kind is TemplateKind.TARGET_AWARE
                else DEFAULT_TB_INSTRUCTION
            )
            object.__setattr__(self, "instruction", default)

    def without_exemplars(self) -> "PromptTemplate":
        return replace(self, exemplars=())


def default_template(kind: TemplateKind, exemplars: tuple[Exemplar, ...] = ()) -> PromptTemplate:
    return PromptTemplate(kind=kind, exemplars=tuple(exemplars))


# --- rendering --------------------------------------------------------------

def _instruction_line(style: StyleDirection, template: PromptTemplate) -> str:
    pattern = style.task_instruction or template.instruction
    return pattern.replace("{source_style}", style.source_style).replace(
        "{target_style}", style.target_style
    )


def completion_body(cot: str, target: str, marker: str = TRANSFERRED_MARKER) -> str:
    """The completion half of a target-blind block: rationale, then the
    marker line carrying the transferred text. Also the supervision shape
    used for training data."""
    return f"{cot}\n{marker} {target}"


def exemplar_block_tb(exemplar: Exemplar, style: StyleDirection, template: PromptTemplate) -> str:
    return (
        f"{_instruction_line(style, template)}\n"
        f"Source: {exemplar.source}\n"
        f"{template.trigger_phrase}\n"
        f"{completion_body(exemplar.cot, exemplar.target, template.transferred_marker)}\n"
        "\n"
    )


def query_block_tb(source: str, style: StyleDirection, template: PromptTemplate) -> str:
    return f"{_instruction_line(style, template)}\nSource: {source}\n{template.trigger_phrase}\n"


def render_tb(source: str, style: StyleDirection, template: PromptTemplate) -> str:
    """Target-blind prompt: m exemplar blocks, then the query block.

    The trigger phrase appears exactly m + 1 times.
    """
    if template.kind is not TemplateKind.TARGET_BLIND:
        raise TemplateKindMismatch(f"render_tb needs a target-blind template, got {template.kind.value}")
    if not source.strip():
        raise EmptySource("source text must be non-empty")
    blocks = [exemplar_block_tb(ex, style, template) for ex in template.exemplars]
    return "".join(blocks) + query_block_tb(source, style, template)


def exemplar_block_ta(exemplar: Exemplar, style: StyleDirection, template: PromptTemplate) -> str:
    return (
        f"{_instruction_line(style, template)}\n"
        f"Source: {exemplar.source}\n"
        f"Target: {exemplar.target}\n"
        f"{template.explanation_marker} {exemplar.cot}\n"
        "\n"
    )


def render_ta(
    source: str, gold_target: str, style: StyleDirection, template: PromptTemplate
) -> str:
    """Target-aware prompt: the completion is expected to start with the
    explanation marker, as taught by the exemplar blocks."""
    if template.kind is not TemplateKind.TARGET_AWARE:
        raise TemplateKindMismatch(f"render_ta needs a target-aware template, got {template.kind.value}")
    if not source.strip():
        raise EmptySource("source text must be non-empty")
    if not gold_target.strip():
        raise EmptyGoldTarget("gold target text must be non-empty")
    blocks = [exemplar_block_ta(ex, style, template) for ex in template.exemplars]
    query = f"{_instruction_line(style, template)}\nSource: {source}\nTarget: {gold_target}\n"
    return "".join(blocks) + query


def render_student_input(
    source: str, style: StyleDirection, template: PromptTemplate | None = None
) -> str:
    """Student-model input: the target-blind query block, no exemplars.

    Byte-identical to ``render_tb`` with an empty exemplar list.
    """
    if template is None:
        template = default_template(TemplateKind.TARGET_BLIND)
    elif template.kind is TemplateKind.STUDENT_INPUT:
        template = replace(template, kind=TemplateKind.TARGET_BLIND)
    return render_tb(source, style, template.without_exemplars())


# --- exemplar files ---------------------------------------------------------

_ALL_MARKERS = TRANSFERRED_MARKER_VARIANTS + (EXPLANATION_MARKER,)


def marker_lines(text: str, markers: tuple[str, ...] = _ALL_MARKERS) -> list[int]:
    """Indices of lines that start (after leading whitespace) with a marker."""
    hits = []
    for i, line in enumerate(text.split("\n")):
        stripped = line.lstrip()
        if any(stripped.startswith(m) for m in markers):
            hits.append(i)
    return hits


def load_exemplars(path: str | Path) -> list[Exemplar]:
    """Load exemplars from JSONL with fields source/cot/target, keeping
    file order. Marker lines inside cot or target would break parsing of
    completions later, so they are rejected here."""
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"exemplar file not found: {path}")
    exemplars: list[Exemplar] = []
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaViolation(f"{path}:{line_no}: invalid JSON: {e}", line=line_no) from e
            if not isinstance(obj, dict):
                raise SchemaViolation(f"{path}:{line_no}: expected an object", line=line_no)
            missing = [k for k in ("source", "cot", "target") if not isinstance(obj.get(k), str) or not obj[k].strip()]
            if missing:
                raise SchemaViolation(
                    f"{path}:{line_no}: missing or empty field(s): {', '.join(missing)}",
                    line=line_no,
                )
            for fld in ("cot", "target"):
                if marker_lines(obj[fld]):
                    raise MarkerInExemplar(
                        f"{path}:{line_no}: field {fld!r} contains a marker line"
                    )
            exemplars.append(Exemplar(source=obj["source"], cot=obj["cot"], target=obj["target"]))
    return exemplars


def default_exemplars(direction: str) -> list[Exemplar]:
    """Packaged exemplars for a named direction (formality, detoxification,
    shakespeare). Stand-ins: authored for this artifact, meant to be swapped."""
    path = _DATA_DIR / "exemplars" / f"{direction}.jsonl"
    if not path.is_file():
        available = sorted(p.stem for p in (_DATA_DIR / "exemplars").glob("*.jsonl"))
        raise FileMissing(f"no packaged exemplars for {direction!r}; available: {available}")
    return load_exemplars(path)


def load_template_config(path: str | Path, exemplars: tuple[Exemplar, ...] = ()) -> PromptTemplate:
    """Template from a JSON config file with fields kind, trigger_phrase,
    transferred_marker, explanation_marker, instruction (all optional except
    kind)."""
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"template config not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: invalid JSON: {e}") from e
    try:
        kind = TemplateKind(obj["kind"])
    except (KeyError, ValueError) as e:
        raise SchemaViolation(f"{path}: missing or unknown template kind") from e
    fields = {}
    for key in ("trigger_phrase", "transferred_marker", "explanation_marker", "instruction"):
        if key in obj:
            fields[key] = obj[key]
    return PromptTemplate(kind=kind, exemplars=tuple(exemplars), **fields)
