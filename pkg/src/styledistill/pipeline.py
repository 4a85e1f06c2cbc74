"""End-to-end run orchestration: plan -> generate -> parse -> build ->
sample -> export, with every stage boundary a file.

Run directories are reproducible: no wall-clock timestamps, canonical
JSON, and the resolved config serialized alongside the outputs (paths as
given, so runs launched from the same working directory are byte-identical).
Stages write atomically and are skipped on resume when their outputs
already exist under the same config digest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import backend as backend_mod
from . import dataset, parsing, prompts
from .backend import GenerationParams, complete_batch
from .errors import ConfigError, FileMissing, PipelineStageError
from .prompts import StyleDirection, TemplateKind

logger = logging.getLogger("styledistill.pipeline")

ENV_PREFIX = "STYLEDISTILL_"

MODE_TB = "tb"
MODE_TA = "ta"

STAGE_ORDER = ("plan", "generate", "parse", "build", "sample")


@dataclass
class PipelineConfig:
    target_style: str
    source_style: str = ""
    task_instruction: str = ""
    mode: str = MODE_TB
    corpus_path: str = ""
    gold_path: str = ""
    gold_source_path: str = ""
    gold_target_path: str = ""
    exemplar_set: str = ""
    exemplars_path: str = ""
    template_path: str = ""
    backend: str = "stub"
    fixture_path: str = ""
    live_url: str = ""
    api_key_env: str = "STYLEDISTILL_API_KEY"
    cache_dir: str = ""
    parallelism: int = 1
    temperature: float = backend_mod.DEFAULT_TEMPERATURE
    max_output_tokens: int = backend_mod.DEFAULT_MAX_OUTPUT_TOKENS
    model_id: str = "default"
    q: int = 1
    filter_policy: str = "default"
    size: int = 0
    sizes: list[int] = field(default_factory=list)
    seed: int = 0
    export_format: str = dataset.FORMAT_JSONL
    out_dir: str = "runs/run"

    def style(self) -> StyleDirection:
        return StyleDirection(self.source_style, self.target_style, self.task_instruction)

    def params(self, sample_index: int) -> GenerationParams:
        return GenerationParams(
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            sample_index=sample_index,
            model_id=self.model_id,
        )


_INT_FIELDS = {"parallelism", "max_output_tokens", "q", "size", "seed"}
_FLOAT_FIELDS = {"temperature"}
_LIST_INT_FIELDS = {"sizes"}


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return value
    if name in _INT_FIELDS:
        return int(value)
    if name in _FLOAT_FIELDS:
        return float(value)
    if name in _LIST_INT_FIELDS:
        if isinstance(value, str):
            return [int(v) for v in value.split(",") if v.strip()]
        return [int(v) for v in value]
    return value


def resolve_config(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> PipelineConfig:
    """Merge config sources: flag overrides > STYLEDISTILL_* env vars >
    config file > defaults."""
    env = os.environ if env is None else env
    known = set(PipelineConfig.__dataclass_fields__)
    values: dict[str, Any] = {}
    for source in (file_values or {},):
        for key, value in source.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(key, value)
    for name in known:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            values[name] = _coerce(name, env[env_key])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config override {key!r}")
        values[key] = _coerce(key, value)
    if not values.get("target_style"):
        raise ConfigError("target_style is required")
    config = PipelineConfig(**values)
    _validate(config)
    return config


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"config file not found: {path}")
    loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"config file must hold a mapping: {path}")
    return loaded


def _validate(config: PipelineConfig) -> None:
    if config.mode not in (MODE_TB, MODE_TA):
        raise ConfigError(f"mode must be tb or ta, got {config.mode!r}")
    if config.q < 1:
        raise ConfigError("q must be positive")
    if config.backend not in ("stub", "replay", "live"):
        raise ConfigError(f"backend must be stub, replay, or live, got {config.backend!r}")
    if config.backend == "replay" and not config.fixture_path:
        raise ConfigError("replay backend requires fixture_path")
    if config.mode == MODE_TA and not (
        config.gold_path or (config.gold_source_path and config.gold_target_path)
    ):
        raise ConfigError("ta mode requires gold_path or gold_source_path + gold_target_path")
    if config.export_format not in dataset.FORMATS:
        raise ConfigError(f"export_format must be one of {dataset.FORMATS}")


def config_to_dict(config: PipelineConfig) -> dict:
    out = asdict(config)
    # implied by the run directory's own location; keeping it out makes
    # repeated runs byte-comparable
    out.pop("out_dir")
    return out


def config_digest(config: PipelineConfig) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# --- shared helpers -----------------------------------------------------------

def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    _write_atomic(path, "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows))


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_corpus(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(f"corpus not found: {path}")
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def load_gold(config: PipelineConfig) -> dict[str, str]:
    if config.gold_path:
        return dataset.load_gold_jsonl(config.gold_path)
    return dataset.load_gold_aligned(config.gold_source_path, config.gold_target_path)


def _gold_sources(config: PipelineConfig) -> list[str]:
    if config.gold_path:
        return [json.loads(line)["source"] for line in Path(config.gold_path).read_text(encoding="utf-8").splitlines() if line.strip()]
    return read_corpus(config.gold_source_path)


def plan_sources(config: PipelineConfig) -> list[str]:
    if config.corpus_path:
        return read_corpus(config.corpus_path)
    if config.mode == MODE_TA:
        return _gold_sources(config)
    raise ConfigError("tb mode requires corpus_path")


def build_template(config: PipelineConfig) -> prompts.PromptTemplate:
    kind = TemplateKind.TARGET_BLIND if config.mode == MODE_TB else TemplateKind.TARGET_AWARE
    exemplars: tuple = ()
    if config.exemplars_path:
        exemplars = tuple(prompts.load_exemplars(config.exemplars_path))
    elif config.exemplar_set:
        exemplars = tuple(prompts.default_exemplars(config.exemplar_set))
    if config.template_path:
        return prompts.load_template_config(config.template_path, exemplars)
    return prompts.default_template(kind, exemplars)


def render_prompt(config: PipelineConfig, source: str, gold: Mapping[str, str] | None = None) -> str:
    template = build_template(config)
    style = config.style()
    if config.mode == MODE_TB:
        return prompts.render_tb(source, style, template)
    assert gold is not None
    return prompts.render_ta(source, gold[dataset.source_id(source)], style, template)


def make_backend(config: PipelineConfig) -> backend_mod.Backend:
    if config.backend == "stub":
        inner: backend_mod.Backend = backend_mod.StubBackend()
    elif config.backend == "replay":
        inner = backend_mod.ReplayBackend(config.fixture_path)
    else:
        if not config.live_url:
            raise ConfigError("live backend requires live_url")
        transport = backend_mod.make_http_transport(config.live_url, api_key_env=config.api_key_env)
        inner = backend_mod.LiveBackend(transport)
    if config.cache_dir:
        return backend_mod.CachingBackend(inner, cache_dir=config.cache_dir)
    return inner


# --- stages -------------------------------------------------------------------

def stage_plan(config: PipelineConfig, run_dir: Path) -> list[Path]:
    sources = plan_sources(config)
    plan = dataset.expand_plan(sources, config.q, config.style())
    gold = load_gold(config) if config.mode == MODE_TA else None
    template = build_template(config)
    style = config.style()

    plan_rows = []
    prompt_rows = []
    for request in plan.requests():
        if config.mode == MODE_TB:
            prompt = prompts.render_tb(request.source, style, template)
        else:
            prompt = prompts.render_ta(request.source, gold[request.source_id], style, template)
        digest = backend_mod.request_digest(prompt, config.params(request.sample_index))
        plan_rows.append(
            {"source_id": request.source_id, "sample_index": request.sample_index, "source": request.source}
        )
        prompt_rows.append(
            {
                "digest": digest,
                "prompt_sha": backend_mod.prompt_sha(prompt),
                "source_id": request.source_id,
                "sample_index": request.sample_index,
            }
        )
    _write_jsonl(run_dir / "plan.jsonl", plan_rows)
    _write_jsonl(run_dir / "prompts.jsonl", prompt_rows)
    return [run_dir / "plan.jsonl", run_dir / "prompts.jsonl"]


def stage_generate(config: PipelineConfig, run_dir: Path) -> list[Path]:
    plan_rows = _read_jsonl(run_dir / "plan.jsonl")
    gold = load_gold(config) if config.mode == MODE_TA else None
    requests = [
        (render_prompt(config, row["source"], gold), config.params(row["sample_index"]))
        for row in plan_rows
    ]
    completions = complete_batch(make_backend(config), requests, parallelism=config.parallelism)
    rows = [
        {
            "digest": completion.request_digest,
            "text": completion.text,
            "backend_id": completion.backend_id,
            "truncated": completion.truncated,
        }
        for completion in completions
    ]
    _write_jsonl(run_dir / "completions.jsonl", rows)
    return [run_dir / "completions.jsonl"]


def stage_parse(config: PipelineConfig, run_dir: Path) -> list[Path]:
    plan_rows = _read_jsonl(run_dir / "plan.jsonl")
    completions = {row["digest"]: row for row in _read_jsonl(run_dir / "completions.jsonl")}
    prompt_rows = _read_jsonl(run_dir / "prompts.jsonl")
    style = config.style()

    records = []
    for plan_row, prompt_row in zip(plan_rows, prompt_rows):
        completion = completions[prompt_row["digest"]]
        raw = backend_mod.RawCompletion(
            text=completion["text"],
            backend_id=completion["backend_id"],
            cached=True,
            request_digest=completion["digest"],
            truncated=completion.get("truncated", False),
        )
        if config.mode == MODE_TB:
            record = parsing.parse_record_tb(plan_row["source"], style, raw, plan_row["sample_index"])
        else:
            record = parsing.parse_record_ta(plan_row["source"], style, raw, plan_row["sample_index"])
        records.append(record)
    parsing.write_records(records, run_dir / "records.jsonl")
    return [run_dir / "records.jsonl"]


def _export_name(config: PipelineConfig, tag: str) -> str:
    ext = "jsonl" if config.export_format == dataset.FORMAT_JSONL else "tsv"
    return f"train.{tag}.{ext}"


def stage_build(config: PipelineConfig, run_dir: Path) -> list[Path]:
    records = parsing.read_records(run_dir / "records.jsonl")
    if config.mode == MODE_TB:
        policy = dataset.POLICIES.get(config.filter_policy)
        if policy is None:
            raise ConfigError(f"unknown filter policy {config.filter_policy!r}")
        result = dataset.build_tb(records, policy)
    else:
        result = dataset.build_ta(records, load_gold(config))
    examples = dataset.dedup(result.examples)
    _write_atomic(
        run_dir / "drop_report.json",
        json.dumps(
            {
                "input_records": len(records),
                "built": len(result.examples),
                "after_dedup": len(examples),
                "dropped": result.drop_report,
            },
            sort_keys=True,
        )
        + "\n",
    )
    out = run_dir / _export_name(config, "full")
    dataset.export_examples(examples, out, config.export_format)
    return [run_dir / "drop_report.json", out]


def stage_sample(config: PipelineConfig, run_dir: Path) -> list[Path]:
    sizes = [s for s in ([config.size] if config.size else []) + list(config.sizes) if s]
    if not sizes:
        return []
    examples = dataset.import_examples(run_dir / _export_name(config, "full"), config.export_format)
    produced = []
    for size in sizes:
        sampled = dataset.subsample(examples, size, config.seed)
        out = run_dir / _export_name(config, f"n{size}.seed{config.seed}")
        dataset.export_examples(sampled, out, config.export_format)
        produced.append(out)
    return produced


_STAGES = {
    "plan": stage_plan,
    "generate": stage_generate,
    "parse": stage_parse,
    "build": stage_build,
    "sample": stage_sample,
}


def record_fixture_from_run(config: PipelineConfig, run_dir: str | Path, fixture_path: str | Path) -> Path:
    """Freeze a completed run's completions as a replay fixture, so the
    same plan can be re-run hermetically with --backend replay."""
    run_dir = Path(run_dir)
    plan_rows = _read_jsonl(run_dir / "plan.jsonl")
    completions = {row["digest"]: row for row in _read_jsonl(run_dir / "completions.jsonl")}
    gold = load_gold(config) if config.mode == MODE_TA else None
    requests = []
    results = []
    for row in plan_rows:
        prompt = render_prompt(config, row["source"], gold)
        params = config.params(row["sample_index"])
        digest = backend_mod.request_digest(prompt, params)
        completion = completions[digest]
        requests.append((prompt, params))
        results.append(
            backend_mod.RawCompletion(
                text=completion["text"],
                backend_id=completion["backend_id"],
                cached=True,
                request_digest=digest,
                truncated=completion.get("truncated", False),
            )
        )
    return backend_mod.record_fixture(requests, results, fixture_path)


def run_pipeline(config: PipelineConfig, resume: bool = True) -> Path:
    """Execute all stages into config.out_dir and write the run manifest.

    With resume=True, stages whose outputs already exist under the same
    config digest are skipped, so an interrupted run picks up where it
    stopped and still produces identical bytes.
    """
    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    digest = config_digest(config)
    _write_atomic(run_dir / "config.json", json.dumps(config_to_dict(config), indent=1, sort_keys=True) + "\n")

    progress_path = run_dir / "stages.json"
    progress: dict = {"config_digest": digest, "completed": {}}
    if resume and progress_path.is_file():
        previous = json.loads(progress_path.read_text(encoding="utf-8"))
        if previous.get("config_digest") == digest:
            progress = previous
        else:
            logger.info("config changed; restarting all stages")

    for stage in STAGE_ORDER:
        done = progress["completed"].get(stage)
        if done is not None and all((run_dir / name).is_file() for name in done):
            logger.info("stage %s: resumed (outputs present)", stage)
            continue
        try:
            produced = _STAGES[stage](config, run_dir)
        except Exception as e:
            raise PipelineStageError(stage, e) from e
        progress["completed"][stage] = [p.name for p in produced]
        _write_atomic(progress_path, json.dumps(progress, indent=1, sort_keys=True) + "\n")

    files = sorted(
        p.name
        for p in run_dir.iterdir()
        if p.is_file() and p.name not in ("manifest.json", "stages.json") and not p.name.endswith(".tmp")
    )
    manifest = {
        "config_digest": digest,
        "fixture": config.fixture_path or None,
        "files": {name: _sha256_file(run_dir / name) for name in files},
    }
    _write_atomic(run_dir / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return run_dir
