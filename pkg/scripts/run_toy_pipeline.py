#!/usr/bin/env python3
"""End-to-end demo on a synthetic corpus with the stub backend.

Runs the target-blind pipeline, freezes the completions into a replay
fixture, re-runs hermetically, and prints the drop report plus a
sentence-level ranking of the transferred texts against toy references.
No network access needed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from styledistill.harness import rank_outputs
from styledistill.parsing import read_records
from styledistill.pipeline import record_fixture_from_run, resolve_config, run_pipeline

WORKDIR = Path("runs/toy-demo")

SOURCES = [
    "hey can u send me the report asap",
    "idk what ur talking about lol",
    "gonna be late, traffic is crazy",
    "plz double check the numbers b4 the mtg",
    "thx for the help yesterday!!",
    "nope that aint gonna work for us",
    "u free 2 talk after lunch?",
    "my bad, forgot to attach the file",
    "lemme know when ur done",
    "this deadline is nuts tbh",
]

REFERENCES = [
    "Hello, could you please send me the report as soon as possible?",
    "I do not know what you are talking about.",
    "I am going to be late because the traffic is very heavy.",
    "Please double-check the numbers before the meeting.",
    "Thank you for your help yesterday.",
    "No, that will not work for us.",
    "Are you free to talk after lunch?",
    "I apologize; I forgot to attach the file.",
    "Please let me know when you are done.",
    "This deadline is very demanding, to be honest.",
]


def main() -> None:
    WORKDIR.mkdir(parents=True, exist_ok=True)
    corpus = WORKDIR / "corpus.txt"
    corpus.write_text("\n".join(SOURCES) + "\n", encoding="utf-8")

    def config(out_dir: str, backend: str) -> dict:
        return {
            "target_style": "formal",
            "source_style": "informal",
            "corpus_path": str(corpus),
            "exemplar_set": "formality",
            "backend": backend,
            "fixture_path": str(WORKDIR / "fixture.jsonl") if backend == "replay" else "",
            "q": 2,
            "size": 5,
            "seed": 7,
            "out_dir": out_dir,
        }

    stub_cfg = resolve_config(config(str(WORKDIR / "run_stub"), "stub"))
    stub_dir = run_pipeline(stub_cfg)
    record_fixture_from_run(stub_cfg, stub_dir, WORKDIR / "fixture.jsonl")
    print(f"stub run + fixture: {stub_dir}")

    replay_dir = run_pipeline(resolve_config(config(str(WORKDIR / "run_replay"), "replay")))
    print(f"replay run: {replay_dir}")

    drop = json.loads((replay_dir / "drop_report.json").read_text())
    print(f"built {drop['after_dedup']} examples, dropped: {drop['dropped'] or 'none'}")

    records = read_records(replay_dir / "records.jsonl")
    transferred = {r.source: r.transferred or "" for r in records}
    hyps = [transferred[s] for s in SOURCES]
    print("\nsentence-BLEU ranking of stub rewrites vs. hand-written references:")
    for index, score in rank_outputs(hyps, REFERENCES):
        print(f"  {score:6.2f}  {hyps[index]}")


if __name__ == "__main__":
    main()
