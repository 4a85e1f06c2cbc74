import json
import random

import pytest

from styledistill.bleu import BleuConfig, BleuReport, corpus_bleu, sentence_bleu, signature
from styledistill.errors import (
    ConfigError,
    FileMissing,
    LengthMismatch,
    NoCandidates,
    SignatureMismatch,
)
from styledistill.harness import (
    RunManifest,
    build_sweep,
    compare_table,
    evaluate_run,
    load_manifest,
    rank_outputs,
    render_sweep,
    select_best,
)

LINES = [
    "The committee approved the proposal.",
    "I want to know if you have been to the doctor yet.",
    "Where are you going at this hour?",
]


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def _manifest(tmp_path, name, hyp_lines, ref_lines, **kw):
    hyp = _write(tmp_path / f"{name}.hyp.txt", hyp_lines)
    ref = _write(tmp_path / f"{name}.ref.txt", ref_lines)
    return RunManifest(run_id=name, dataset="toy", method_label=name, size="full",
                       hyp_path=hyp, ref_path=ref, **kw)


def test_evaluate_run_identity_scores_100(tmp_path):
    manifest = _manifest(tmp_path, "ident", LINES, LINES)
    assert evaluate_run(manifest).score == pytest.approx(100.0)


def test_evaluate_run_persists_report_with_digest(tmp_path):
    manifest = _manifest(tmp_path, "ident", LINES, LINES)
    evaluate_run(manifest)
    report = json.loads((tmp_path / "ident.hyp.txt.bleu.json").read_text())
    assert report["score"] == pytest.approx(100.0)
    assert len(report["inputs_digest"]) == 16
    assert report["run_id"] == "ident"


def test_evaluate_run_length_mismatch(tmp_path):
    manifest = _manifest(tmp_path, "bad", LINES, LINES + ["extra line"])
    with pytest.raises(LengthMismatch) as exc:
        evaluate_run(manifest)
    assert (exc.value.hyp_len, exc.value.ref_len) == (3, 4)


def test_evaluate_run_missing_file(tmp_path):
    manifest = RunManifest("x", "toy", "x", 1, str(tmp_path / "nope.txt"), str(tmp_path / "nope.txt"))
    with pytest.raises(FileMissing):
        evaluate_run(manifest)


def test_manifest_json_round_trip(tmp_path):
    manifest = _manifest(tmp_path, "m", LINES, LINES)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({
        "run_id": "m", "dataset": "toy", "method_label": "m", "size": 1000,
        "hyp_path": manifest.hyp_path, "ref_path": manifest.ref_path,
        "config": {"tokenizer": "13a", "smoothing": "exp", "lowercase": False},
    }))
    loaded = load_manifest(path)
    assert loaded.size == 1000
    assert loaded.config == BleuConfig()


# --- select_best ------------------------------------------------------------

def _candidate(tmp_path, name, val_lines, refs):
    manifest = _manifest(tmp_path, name, LINES, LINES)
    manifest.val_hyp_path = _write(tmp_path / f"{name}.val.txt", val_lines)
    return manifest


def test_select_best_single_candidate(tmp_path):
    refs = _write(tmp_path / "val.ref.txt", LINES)
    candidate = _candidate(tmp_path, "only", LINES, refs)
    assert select_best([candidate], refs).best is candidate


def test_select_best_picks_max_validation_score(tmp_path):
    refs = _write(tmp_path / "val.ref.txt", LINES)
    weak = _candidate(tmp_path, "weak", ["Wrong text entirely here.", LINES[1], "Also wrong."], refs)
    strong = _candidate(tmp_path, "strong", LINES, refs)
    result = select_best([weak, strong], refs)
    assert result.best is strong
    assert result.scores[0][1] < result.scores[1][1]


def test_select_best_tie_breaks_to_first_and_records(tmp_path):
    refs = _write(tmp_path / "val.ref.txt", LINES)
    first = _candidate(tmp_path, "first", LINES, refs)
    second = _candidate(tmp_path, "second", LINES, refs)
    result = select_best([first, second], refs)
    assert result.best is first
    assert result.tie_run_ids == ["first", "second"]


def test_select_best_requires_candidates():
    with pytest.raises(NoCandidates):
        select_best([], "refs.txt")


def test_select_best_requires_validation_file(tmp_path):
    refs = _write(tmp_path / "val.ref.txt", LINES)
    manifest = _manifest(tmp_path, "noval", LINES, LINES)
    with pytest.raises(ConfigError):
        select_best([manifest], refs)


# --- rank_outputs -------------------------------------------------------------

def test_rank_exact_match_first():
    hyps = ["totally different words", LINES[1], "another mismatch"]
    refs = ["The committee approved it.", LINES[1], "A reference sentence here."]
    ranked = rank_outputs(hyps, refs)
    assert ranked[0] == (1, pytest.approx(100.0))


def test_rank_case_study_ordering():
    hyps = [
        "Bembie hit the nail on the head.",
        "I just want to know if you have been to the doctor yet.",
    ]
    refs = [
        "Bembie reached the proper conclusion.",
        "I just want to know if you have been to the doctor yet.",
    ]
    ranked = rank_outputs(hyps, refs)
    assert [i for i, _ in ranked] == [1, 0]
    assert ranked[0][1] == pytest.approx(100.0)
    assert ranked[1][1] < 15.0


def test_rank_scores_match_independent_sentence_scores():
    hyps = ["a b c d", "totally different words", "a b"]
    refs = ["a b c d", "a b c d e", "a b c d"]
    ranked = dict(rank_outputs(hyps, refs))
    for i, (hyp, ref) in enumerate(zip(hyps, refs)):
        assert ranked[i] == pytest.approx(sentence_bleu(hyp, ref).score)


def test_rank_permutation_preserves_score_multiset():
    rng = random.Random(5)
    refs = [f"sentence number {i} with shared words" for i in range(12)]
    hyps = [r.replace("shared", rng.choice(["shared", "other", "novel"])) for r in refs]
    pairs = list(zip(hyps, refs))
    shuffled = pairs[:]
    rng.shuffle(shuffled)
    base = sorted(score for _, score in rank_outputs(hyps, refs))
    perm = sorted(score for _, score in rank_outputs([p[0] for p in shuffled], [p[1] for p in shuffled]))
    assert base == pytest.approx(perm)


def test_rank_length_mismatch():
    with pytest.raises(LengthMismatch):
        rank_outputs(["a"], ["a", "b"])


# --- compare_table ---------------------------------------------------------------

def _report(score: float) -> BleuReport:
    return BleuReport(score, [1.0] * 4, 1.0, 10, 10, signature(BleuConfig()))


def test_compare_table_bolds_best():
    table = compare_table([("SFT", _report(52.88)), ("CoTeX-TA", _report(54.79))])
    assert "| **CoTeX-TA** | **54.79** |" in table
    assert "| SFT | 52.88 |" in table


def test_compare_table_single_row():
    table = compare_table([("only", _report(10.0))])
    assert table.count("\n") == 3


def test_compare_table_orders_rows_by_label():
    table = compare_table([("zeta", _report(1.0)), ("alpha", _report(2.0))])
    assert table.index("alpha") < table.index("zeta")


def test_compare_table_ties_bold_all_maxima():
    table = compare_table([("a", _report(50.0)), ("b", _report(50.0))])
    assert table.count("**") == 8


def test_compare_table_signature_mismatch():
    other = BleuReport(10.0, [1.0] * 4, 1.0, 10, 10, signature(BleuConfig(lowercase=True)))
    with pytest.raises(SignatureMismatch):
        compare_table([("a", _report(1.0)), ("b", other)])


def test_compare_table_csv():
    table = compare_table([("SFT", _report(52.88))], format="csv")
    assert table == "method,bleu\nSFT,52.88\n"


# --- sweep -----------------------------------------------------------------------

def test_sweep_rows_ascend_by_size(tmp_path):
    manifests = []
    for size in (20000, 1000, 5000):
        m = _manifest(tmp_path, f"run{size}", LINES, LINES)
        m.size = size
        manifests.append(m)
    table = build_sweep(manifests)
    assert [r.size for r in table.rows] == [1000, 5000, 20000]
    rendered = render_sweep(table)
    assert rendered.startswith("| Size | Method | BLEU |")


def test_sweep_filters_to_requested_sizes(tmp_path):
    manifests = []
    for size in (1000, 2000, 5000):
        m = _manifest(tmp_path, f"run{size}", LINES, LINES)
        m.size = size
        manifests.append(m)
    table = build_sweep(manifests, sizes=[1000, 5000])
    assert [r.size for r in table.rows] == [1000, 5000]


def test_sweep_rejects_mixed_configs(tmp_path):
    a = _manifest(tmp_path, "a", LINES, LINES)
    b = _manifest(tmp_path, "b", LINES, LINES, config=BleuConfig(lowercase=True))
    a.size, b.size = 1000, 2000
    with pytest.raises(SignatureMismatch):
        build_sweep([a, b])
