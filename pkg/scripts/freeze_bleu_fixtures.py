#!/usr/bin/env python3
"""Regenerate tests/data/bleu_parity.json from the reference scorer.

Requires `pip install sacrebleu` (not a package dependency; the frozen
fixture file is committed so tests never import the tool). Case inputs
are fixed literals plus corpora generated from a pinned RNG seed, so
regeneration is reproducible.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from sacrebleu.metrics import BLEU

OUT = Path(__file__).parent.parent / "tests" / "data" / "bleu_parity.json"

rng = random.Random(20240817)

BANK = (
    "the a an this that these those my your our their "
    "cat dog house river committee proposal meeting doctor teacher student report answer question idea city "
    "quickly slowly carefully finally certainly probably yesterday today tomorrow "
    "is was are were has have had will would could should can may might must "
    "run walk talk write read sing build break fix open close send receive find lose keep make take give "
    "good bad new old large small formal informal polite rude clear vague simple complex modern ancient "
    "and or but so because while although when where after before"
).split()
PUNCT_TAILS = [".", ".", ".", "!", "?", "...", ""]


def sent(n: int) -> str:
    words = [rng.choice(BANK) for _ in range(n)]
    words[0] = words[0].capitalize()
    s = " ".join(words)
    tail = rng.choice(PUNCT_TAILS)
    if rng.random() < 0.3:
        i = rng.randrange(1, len(words))
        words.insert(i, rng.choice([",", ";", "-", '"quoted"', "(aside)"]))
        s = " ".join(words)
    return s + tail


def corrupt(s: str, rate: float) -> str:
    words = s.split()
    out = []
    for w in words:
        r = rng.random()
        if r < rate * 0.4:
            continue
        if r < rate:
            out.append(rng.choice(BANK))
        else:
            out.append(w)
    if not out:
        out = [rng.choice(BANK)]
    if rng.random() < rate * 0.5:
        out.insert(rng.randrange(len(out) + 1), rng.choice(BANK))
    return " ".join(out)


FIXED = [
    ("identity_short", ["The cat is on the mat."], ["The cat is on the mat."], "13a", "exp", False),
    ("hand_counted_ws", ["the cat sat on the mat"], ["the cat is on the mat"], "ws", "exp", False),
    (
        "idiom_pair",
        ["Bembie hit the nail on the head."],
        ["Bembie reached the proper conclusion."],
        "13a",
        "exp",
        False,
    ),
    (
        "formality_small",
        [
            "I just want to know if you have been to the doctor yet.",
            "That is a very good idea, in my opinion.",
            "He did not attend the meeting yesterday.",
        ],
        [
            "I want to know if you have been to the doctor yet.",
            "In my opinion, that is an excellent idea.",
            "He did not attend yesterday's meeting.",
        ],
        "13a",
        "exp",
        False,
    ),
    (
        "numbers_dates",
        ["The committee met on 2023-04-01 and approved 1,250 requests, i.e. 98.4 percent."],
        ["The committee met on 2023-04-01, approving 1,250 requests (98.4 percent)."],
        "13a",
        "exp",
        False,
    ),
    (
        "quotes_entities",
        ['She said &quot;hello&quot; &amp; waved; he replied: "good-bye!"'],
        ['She said "hello" and waved; he replied "goodbye".'],
        "13a",
        "exp",
        False,
    ),
    (
        "empty_hyp_line",
        ["", "The answer is forty-two.", "A small step."],
        ["Nothing here.", "The answer is forty-two.", "One small step."],
        "13a",
        "exp",
        False,
    ),
    ("all_empty_hyp", ["", ""], ["Something was expected.", "More was expected."], "13a", "exp", False),
    ("short_hyp_bp", ["The cat sat."], ["The cat sat on the mat near the door."], "13a", "exp", False),
    (
        "long_hyp_no_bp",
        ["The cat sat on the mat near the door all day long."],
        ["The cat sat on the mat."],
        "13a",
        "exp",
        False,
    ),
    ("lowercase_on", ["THE Cat IS on The MAT.", "HELLO world!"], ["the cat is on the mat.", "hello World!"], "13a", "exp", True),
    ("smoothing_none_zero", ["colorless green ideas sleep furiously"], ["the committee approved the proposal"], "ws", "none", False),
    (
        "smoothing_none_nonzero",
        ["the committee approved the proposal today", "work went well"],
        ["the committee approved the proposal yesterday", "work went very well"],
        "ws",
        "none",
        False,
    ),
    ("trailing_space", ["A tidy sentence.   ", "Another   spaced   one."], ["A tidy sentence.", "Another spaced one."], "13a", "exp", False),
    ("hyphen_rules", ["A well-known 3-step plan from 1985-ish times."], ["A well-known three-step plan from 1985."], "13a", "exp", False),
]


def main() -> None:
    cases = list(FIXED)
    for i, (size, rate) in enumerate(
        [(5, 0.1), (8, 0.25), (12, 0.4), (20, 0.15), (6, 0.6), (10, 0.05), (15, 0.35), (7, 0.5), (25, 0.2)]
    ):
        refs = [sent(rng.randrange(4, 18)) for _ in range(size)]
        hyps = [corrupt(r, rate) for r in refs]
        tok = "13a" if i % 3 else "ws"
        smooth = "none" if i == 4 else "exp"
        lc = i == 6
        cases.append((f"random_{i}", hyps, refs, tok, smooth, lc))

    out = []
    for name, hyps, refs, tok, smooth, lc in cases:
        scorer = BLEU(
            tokenize="none" if tok == "ws" else tok,
            smooth_method=smooth,
            lowercase=lc,
            force=True,
            effective_order=False,
        )
        res = scorer.corpus_score(hyps, [refs])
        out.append(
            {
                "name": name,
                "hyps": hyps,
                "refs": refs,
                "config": {"tokenizer": tok, "smoothing": smooth, "lowercase": lc},
                "expected": {
                    "score": res.score,
                    "precisions": [p / 100.0 for p in res.precisions],
                    "bp": res.bp,
                    "hyp_len": res.sys_len,
                    "ref_len": res.ref_len,
                },
            }
        )

    OUT.write_text(
        json.dumps(
            {
                "note": "Recorded one-time from the reference scorer (sacrebleu, 13a/exp defaults); regenerate with scripts/freeze_bleu_fixtures.py.",
                "cases": out,
            },
            indent=1,
        )
    )
    print(f"froze {len(out)} cases -> {OUT}")


if __name__ == "__main__":
    main()
