import json
from pathlib import Path

import pytest

from styledistill import pipeline
from styledistill.dataset import source_id
from styledistill.errors import ConfigError, PipelineStageError
from styledistill.parsing import read_records
from styledistill.pipeline import (
    PipelineConfig,
    record_fixture_from_run,
    resolve_config,
    run_pipeline,
)

TOY_SOURCES = [f"plz fix issue number {i} its rly urgent" for i in range(20)]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    Path("corpus.txt").write_text("\n".join(TOY_SOURCES) + "\n", encoding="utf-8")
    return tmp_path


def _toy_config(**overrides) -> PipelineConfig:
    base = {
        "target_style": "formal",
        "source_style": "informal",
        "corpus_path": "corpus.txt",
        "backend": "stub",
        "q": 1,
        "out_dir": "run",
    }
    base.update(overrides)
    return resolve_config(base, env={})


def _tree(run_dir: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(run_dir.iterdir()) if p.is_file()}


def test_full_tb_run_produces_expected_files(workdir):
    run_dir = run_pipeline(_toy_config())
    names = set(_tree(run_dir))
    assert {
        "config.json",
        "plan.jsonl",
        "prompts.jsonl",
        "completions.jsonl",
        "records.jsonl",
        "drop_report.json",
        "train.full.jsonl",
        "stages.json",
        "manifest.json",
    } <= names
    records = read_records(run_dir / "records.jsonl")
    assert len(records) == 20
    assert all(r.transferred for r in records)


def test_manifest_lists_file_digests(workdir):
    run_dir = run_pipeline(_toy_config())
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert "plan.jsonl" in manifest["files"]
    assert all(len(v) == 64 for v in manifest["files"].values())


def test_q_expansion_generates_q_completions_per_source(workdir):
    run_dir = run_pipeline(_toy_config(q=2, out_dir="run_q2"))
    completions = (run_dir / "completions.jsonl").read_text().splitlines()
    assert len(completions) == 40
    digests = {json.loads(line)["digest"] for line in completions}
    assert len(digests) == 40


def test_replay_runs_are_byte_identical(workdir):
    stub_dir = run_pipeline(_toy_config(q=2, size=10, seed=7, out_dir="run_stub"))
    config = _toy_config(q=2, size=10, seed=7, out_dir="run_stub")
    record_fixture_from_run(config, stub_dir, "fixture.jsonl")

    run_a = run_pipeline(_toy_config(q=2, size=10, seed=7, backend="replay",
                                     fixture_path="fixture.jsonl", out_dir="run_a"))
    run_b = run_pipeline(_toy_config(q=2, size=10, seed=7, backend="replay",
                                     fixture_path="fixture.jsonl", out_dir="run_b"))
    assert _tree(run_a) == _tree(run_b)


def test_sampled_exports_written_per_size(workdir):
    run_dir = run_pipeline(_toy_config(sizes=[5, 10], seed=3, out_dir="run_sizes"))
    assert (run_dir / "train.n5.seed3.jsonl").is_file()
    assert (run_dir / "train.n10.seed3.jsonl").is_file()
    assert len((run_dir / "train.n5.seed3.jsonl").read_text().splitlines()) == 5


def test_ta_mode_requires_gold_before_any_generation(workdir):
    with pytest.raises(ConfigError):
        _toy_config(mode="ta")


def test_ta_mode_builds_supervision_from_gold(workdir):
    gold_rows = [
        {"source": src, "target": f"Please fix issue number {i}; it is urgent."}
        for i, src in enumerate(TOY_SOURCES)
    ]
    Path("gold.jsonl").write_text(
        "\n".join(json.dumps(r) for r in gold_rows) + "\n", encoding="utf-8"
    )
    config = _toy_config(mode="ta", gold_path="gold.jsonl", corpus_path="", out_dir="run_ta")
    run_dir = run_pipeline(config)
    examples = (run_dir / "train.full.jsonl").read_text().splitlines()
    assert len(examples) == 20
    by_id = {r["source_id"]: r for r in map(json.loads, examples)}
    for row in gold_rows:
        supervision = by_id[source_id(row["source"])]["supervision"]
        assert supervision.endswith(f"[Transferred]: {row['target']}")


def test_stage_error_names_stage(workdir, monkeypatch):
    def explode(config, run_dir):
        raise RuntimeError("parse blew up")

    monkeypatch.setitem(pipeline._STAGES, "parse", explode)
    with pytest.raises(PipelineStageError) as exc:
        run_pipeline(_toy_config(out_dir="run_fail"))
    assert exc.value.stage == "parse"
    # earlier stage outputs are retained for resume
    assert Path("run_fail/completions.jsonl").is_file()


def test_resume_after_interrupt_matches_clean_run(workdir, monkeypatch):
    clean = run_pipeline(_toy_config(size=5, out_dir="run_clean"))

    real_parse = pipeline.stage_parse
    calls = {"n": 0}

    def flaky_parse(config, run_dir):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("interrupted")
        return real_parse(config, run_dir)

    monkeypatch.setitem(pipeline._STAGES, "parse", flaky_parse)
    with pytest.raises(PipelineStageError):
        run_pipeline(_toy_config(size=5, out_dir="run_resume"))
    resumed = run_pipeline(_toy_config(size=5, out_dir="run_resume"))
    assert _tree(resumed) == _tree(clean)


def test_config_change_invalidates_resume(workdir):
    run_pipeline(_toy_config(out_dir="run_cfg"))
    first = (Path("run_cfg") / "completions.jsonl").read_text().splitlines()
    run_pipeline(_toy_config(out_dir="run_cfg", q=2))
    second = (Path("run_cfg") / "completions.jsonl").read_text().splitlines()
    assert len(first) == 20 and len(second) == 40


def test_env_overrides_apply():
    config = resolve_config(
        {"target_style": "formal", "corpus_path": "corpus.txt"},
        env={"STYLEDISTILL_Q": "4", "STYLEDISTILL_SIZES": "100,200"},
    )
    assert config.q == 4
    assert config.sizes == [100, 200]


def test_flag_overrides_beat_env():
    config = resolve_config(
        {"target_style": "formal", "corpus_path": "c.txt"},
        overrides={"q": 8},
        env={"STYLEDISTILL_Q": "4"},
    )
    assert config.q == 8


def test_unknown_config_key_rejected():
    with pytest.raises(ConfigError):
        resolve_config({"target_style": "formal", "noise": 1}, env={})
