"""Single entry point wiring the pipeline stages, the scorer, the
evaluation harness, and the annotation service.

Exit codes follow the error classes (see errors.py); `--json` switches
error reporting to machine-readable JSON on stderr. Flags mirror to
environment variables with the STYLEDISTILL_ prefix.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import bleu as bleu_mod
from . import dataset, harness, pipeline
from .errors import FileMissing, PipelineStageError, StyleDistillError

_TOK_CHOICES = {"13a": bleu_mod.TOKENIZER_13A, "ws": bleu_mod.TOKENIZER_WS}
_TABLE_FORMATS = {"md": harness.FORMAT_MARKDOWN, "markdown": harness.FORMAT_MARKDOWN, "csv": harness.FORMAT_CSV}


def _env(name: str, default=None):
    return os.environ.get(pipeline.ENV_PREFIX + name, default)


# --- argument wiring ----------------------------------------------------------

def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--out", dest="out_dir", help="run directory")
    p.add_argument("--corpus", dest="corpus_path", help="source texts, one per line")
    p.add_argument("--mode", choices=[pipeline.MODE_TB, pipeline.MODE_TA])
    p.add_argument("--target-style", dest="target_style")
    p.add_argument("--source-style", dest="source_style")
    p.add_argument("--backend", choices=["live", "replay", "stub"])
    p.add_argument("--fixture", dest="fixture_path", help="replay fixture path")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-output-tokens", dest="max_output_tokens", type=int)
    p.add_argument("--model-id", dest="model_id")
    p.add_argument("--q", type=int, help="samples per source")
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int, help="subsample size")
    p.add_argument("--sizes", help="comma-separated subsample sizes")
    p.add_argument("--filter-policy", dest="filter_policy")
    p.add_argument("--gold", dest="gold_path", help="gold JSONL {source, target}")
    p.add_argument("--gold-source", dest="gold_source_path")
    p.add_argument("--gold-target", dest="gold_target_path")
    p.add_argument("--exemplars", dest="exemplars_path")
    p.add_argument("--exemplar-set", dest="exemplar_set")
    p.add_argument("--template", dest="template_path")
    p.add_argument("--export-format", dest="export_format", choices=list(dataset.FORMATS))


_CONFIG_KEYS = set(pipeline.PipelineConfig.__dataclass_fields__)


def _config_from_args(args: argparse.Namespace) -> pipeline.PipelineConfig:
    file_values = pipeline.load_config_file(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS and v is not None}
    return pipeline.resolve_config(file_values, overrides)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_lines(path: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise FileMissing(f"file not found: {p}")
    return p.read_text(encoding="utf-8").splitlines()


# --- command handlers ------------------------------------------------------------

def _cmd_run(args) -> int:
    config = _config_from_args(args)
    run_dir = pipeline.run_pipeline(config, resume=not args.no_resume)
    print(f"run complete: {run_dir}")
    return 0


def _cmd_plan(args) -> int:
    config = _config_from_args(args)
    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    produced = pipeline.stage_plan(config, run_dir)
    sources = pipeline.plan_sources(config)
    print(f"planned {len(dataset.expand_plan(sources, config.q, config.style()))} requests -> {produced[0]}")
    return 0


def _cmd_generate(args) -> int:
    config = _config_from_args(args)
    run_dir = Path(config.out_dir)
    sources = pipeline.plan_sources(config)
    plan = dataset.expand_plan(sources, config.q, config.style())
    if args.dry_run:
        print(f"would issue {len(plan)} requests ({len(plan.sources)} sources x q={config.q})")
        return 0
    run_dir.mkdir(parents=True, exist_ok=True)
    if not (run_dir / "plan.jsonl").is_file():
        pipeline.stage_plan(config, run_dir)
    produced = pipeline.stage_generate(config, run_dir)
    print(f"generated {len(plan)} completions -> {produced[0]}")
    return 0


def _cmd_parse(args) -> int:
    config = _config_from_args(args)
    produced = pipeline.stage_parse(config, Path(config.out_dir))
    print(f"parsed records -> {produced[0]}")
    return 0


def _cmd_build(args) -> int:
    config = _config_from_args(args)
    produced = pipeline.stage_build(config, Path(config.out_dir))
    report = json.loads(produced[0].read_text(encoding="utf-8"))
    print(f"built {report['after_dedup']} examples (dropped: {report['dropped']}) -> {produced[1]}")
    return 0


def _cmd_sample(args) -> int:
    examples = dataset.import_examples(args.infile, args.format)
    sampled = dataset.subsample(examples, args.size, args.seed)
    out = dataset.export_examples(sampled, args.outfile, args.format)
    print(f"{out} sha256={_sha256(out)}")
    return 0


def _cmd_export(args) -> int:
    examples = dataset.import_examples(args.infile, args.in_format)
    out = dataset.export_examples(examples, args.outfile, args.format)
    print(f"exported {len(examples)} examples -> {out}")
    return 0


def _cmd_bleu(args) -> int:
    config = bleu_mod.BleuConfig(
        tokenizer=_TOK_CHOICES[args.tok],
        smoothing=args.smooth,
        lowercase=args.lc,
    )
    hyps = _read_lines(args.hyp)
    refs = _read_lines(args.ref)
    report = bleu_mod.corpus_bleu(hyps, refs, config)
    if args.json:
        print(report.to_json())
    else:
        print(f"BLEU = {report.score:.2f}  {report.signature}")
    return 0


def _cmd_eval_run(args) -> int:
    manifest = harness.load_manifest(args.manifest)
    report = harness.evaluate_run(manifest, persist=not args.no_persist)
    if args.json:
        print(report.to_json())
    else:
        print(f"{manifest.method_label}: BLEU = {report.score:.2f}  {report.signature}")
    return 0


def _cmd_eval_sweep(args) -> int:
    manifests = [harness.load_manifest(p) for p in args.manifests]
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    table = harness.build_sweep(manifests, sizes=sizes)
    print(harness.render_sweep(table, _TABLE_FORMATS[args.format]), end="")
    return 0


def _cmd_eval_rank(args) -> int:
    hyps = _read_lines(args.hyp)
    refs = _read_lines(args.ref)
    config = bleu_mod.BleuConfig(tokenizer=_TOK_CHOICES[args.tok])
    ranked = harness.rank_outputs(hyps, refs, config)
    if args.top:
        ranked = ranked[: args.top]
    for index, score in ranked:
        print(f"{index}\t{score:.2f}\t{hyps[index]}")
    return 0


def _cmd_eval_table(args) -> int:
    reports = []
    for path in args.reports:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        label = obj.get("method_label") or Path(path).stem
        reports.append((label, bleu_mod.BleuReport.from_dict(obj)))
    print(harness.compare_table(reports, _TABLE_FORMATS[args.format]), end="")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .humaneval.service import build_app
    from .humaneval.store import SessionStore

    store = SessionStore(args.data_dir)
    app = build_app(store, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="styledistill", description=__doc__)
    parser.add_argument("--json", action="store_true", help="machine-readable output/errors")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler, helptext in (
        ("run", _cmd_run, "run the full pipeline into a run directory"),
        ("plan", _cmd_plan, "expand the generation plan and prompt digests"),
        ("generate", _cmd_generate, "issue planned prompts to the backend"),
        ("parse", _cmd_parse, "split completions into rationale/transferred records"),
        ("build", _cmd_build, "build training examples from parsed records"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_config_args(p)
        if name == "run":
            p.add_argument("--no-resume", action="store_true", help="ignore existing stage outputs")
        if name == "generate":
            p.add_argument("--dry-run", action="store_true", help="print request counts only")
        p.set_defaults(handler=handler)

    p = sub.add_parser("sample", help="seeded subsample of an exported dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=int(_env("SEED", 0)))
    p.add_argument("--format", choices=list(dataset.FORMATS), default=dataset.FORMAT_JSONL)
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("export", help="convert a dataset between export formats")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--in-format", choices=list(dataset.FORMATS), default=dataset.FORMAT_JSONL)
    p.add_argument("--format", choices=list(dataset.FORMATS), default=dataset.FORMAT_TSV)
    p.set_defaults(handler=_cmd_export)

    p = sub.add_parser("bleu", help="corpus BLEU between two line-aligned files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--tok", choices=list(_TOK_CHOICES), default=_env("TOK", "13a"))
    p.add_argument("--smooth", choices=[bleu_mod.SMOOTH_EXP, bleu_mod.SMOOTH_NONE], default=_env("SMOOTH", "exp"))
    p.add_argument("--lc", action="store_true")
    p.set_defaults(handler=_cmd_bleu)

    eval_parser = sub.add_parser("eval", help="evaluation harness")
    eval_sub = eval_parser.add_subparsers(dest="eval_command", required=True)

    p = eval_sub.add_parser("run", help="score one run manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--no-persist", action="store_true")
    p.set_defaults(handler=_cmd_eval_run)

    p = eval_sub.add_parser("sweep", help="low-resource sweep over run manifests")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--sizes", help="comma-separated sizes to include")
    p.add_argument("--format", choices=list(_TABLE_FORMATS), default="md")
    p.set_defaults(handler=_cmd_eval_sweep)

    def add_rank(p):
        p.add_argument("--hyp", required=True)
        p.add_argument("--ref", required=True)
        p.add_argument("--tok", choices=list(_TOK_CHOICES), default="13a")
        p.add_argument("--top", type=int)
        p.set_defaults(handler=_cmd_eval_rank)

    add_rank(eval_sub.add_parser("rank", help="rank outputs by sentence BLEU"))
    add_rank(sub.add_parser("rank", help="rank outputs by sentence BLEU"))

    p = eval_sub.add_parser("table", help="comparison table from persisted reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--format", choices=list(_TABLE_FORMATS), default="md")
    p.set_defaults(handler=_cmd_eval_table)

    p = sub.add_parser("serve", help="annotation service (and UI bundle, when built)")
    p.add_argument("--port", type=int, default=int(_env("PORT", 8000)))
    p.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    p.add_argument("--data-dir", default=_env("DATA_DIR", "annotation-data"))
    p.add_argument("--static-dir", default=_env("STATIC_DIR"))
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except PipelineStageError as e:
        if args.json:
            payload = {"error": type(e.cause).__name__, "detail": str(e.cause), "stage": e.stage}
            print(json.dumps(payload), file=sys.stderr)
        else:
            print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except StyleDistillError as e:
        if args.json:
            print(json.dumps({"error": type(e).__name__, "detail": str(e)}), file=sys.stderr)
        else:
            print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
