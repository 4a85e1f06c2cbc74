"""Reference-compatible BLEU scorer.

Implements 13a-style tokenization, clipped modified n-gram precision,
the brevity penalty, and exponential smoothing on a 0-100 scale.
Parity with the de-facto standard scorer is enforced by frozen fixtures
in the test suite rather than by importing that tool.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import EmptyCorpus, EmptyReference, LengthMismatch

TOKENIZER_13A = "13a"
TOKENIZER_WS = "ws"
SMOOTH_EXP = "exp"
SMOOTH_NONE = "none"

NOTE_EMPTY_HYPOTHESIS = "EmptyHypothesis"


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    tokenizer: str = TOKENIZER_13A
    smoothing: str = SMOOTH_EXP
    lowercase: bool = False

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if self.tokenizer not in (TOKENIZER_13A, TOKENIZER_WS):
            raise ValueError(f"unknown tokenizer {self.tokenizer!r}")
        if self.smoothing not in (SMOOTH_EXP, SMOOTH_NONE):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")


DEFAULT_CONFIG = BleuConfig()


@dataclass
class BleuReport:
    """Corpus score plus the statistics needed to audit it."""

    score: float
    precisions: list[float]
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    signature: str
    correct: list[int] = field(default_factory=list)
    total: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "score": self.score,
            "precisions": self.precisions,
            "bp": self.brevity_penalty,
            "hyp_len": self.hyp_length,
            "ref_len": self.ref_length,
            "signature": self.signature,
        }
        if self.notes:
            out["notes"] = self.notes
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "BleuReport":
        return cls(
            score=obj["score"],
            precisions=list(obj["precisions"]),
            brevity_penalty=obj["bp"],
            hyp_length=obj["hyp_len"],
            ref_length=obj["ref_len"],
            signature=obj["signature"],
            notes=list(obj.get("notes", [])),
        )

    def format(self, width: int = 2) -> str:
        precs = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (
            f"BLEU = {self.score:.{width}f} {precs} "
            f"(BP = {self.brevity_penalty:.3f} hyp_len = {self.hyp_length} "
            f"ref_len = {self.ref_length})"
        )


def signature(config: BleuConfig = DEFAULT_CONFIG) -> str:
    """Canonical string identifying a scoring configuration.

    Reports are comparable iff their signatures are equal.
    """
    case = "lc" if config.lowercase else "mixed"
    return f"bleu|tok:{config.tokenizer}|smooth:{config.smoothing}|order:{config.max_order}|case:{case}"


# --- tokenization -----------------------------------------------------------
#
# The 13a rule table, applied in order:
#   1. drop "<skipped>" markup, join end-of-line hyphenation, fold newlines
#   2. unescape &quot; &amp; &lt; &gt;
#   3. pad the ASCII symbol/punctuation ranges {-~ [-` space-& (-+ :-@ / with spaces
#   4. split "." and "," from any non-digit neighbor (decimal/thousand
#      separators between digits stay attached)
#   5. split "-" after a digit
#   6. collapse whitespace runs, trim, split on spaces

_13A_PUNCT = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_AFTER = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_BEFORE = re.compile(r"([\.,])([^0-9])")
_13A_DIGIT_DASH = re.compile(r"([0-9])(-)")
_WS_RUN = re.compile(r"\s+")


def _tokenize_13a(text: str) -> list[str]:
    norm = text.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")

    norm = f" {norm} "
    norm = _13A_PUNCT.sub(r" \1 ", norm)
    norm = _13A_PERIOD_AFTER.sub(r"\1 \2 ", norm)
    norm = _13A_PERIOD_BEFORE.sub(r" \1 \2", norm)
    norm = _13A_DIGIT_DASH.sub(r"\1 \2 ", norm)
    norm = _WS_RUN.sub(" ", norm).strip()
    return norm.split() if norm else []


def tokenize(text: str, tokenizer: str = TOKENIZER_13A) -> list[str]:
    if tokenizer == TOKENIZER_13A:
        return _tokenize_13a(text)
    if tokenizer == TOKENIZER_WS:
        return text.split()
    raise ValueError(f"unknown tokenizer {tokenizer!r}")


# --- n-gram statistics ------------------------------------------------------

def ngram_counts(tokens: Sequence[str], max_order: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def pair_statistics(
    hyp_tokens: Sequence[str], ref_tokens: Sequence[str], max_order: int
) -> tuple[list[int], list[int]]:
    """Clipped (correct, total) n-gram counts for one sentence pair."""
    correct = [0] * max_order
    total = [0] * max_order
    hyp_grams = ngram_counts(hyp_tokens, max_order)
    ref_grams = ngram_counts(ref_tokens, max_order)
    for gram, count in hyp_grams.items():
        n = len(gram)
        total[n - 1] += count
        correct[n - 1] += min(count, ref_grams.get(gram, 0))
    return correct, total


def _score_from_stats(
    correct: list[int],
    total: list[int],
    hyp_len: int,
    ref_len: int,
    config: BleuConfig,
) -> BleuReport:
    sig = signature(config)
    notes: list[str] = []
    precisions = [0.0] * config.max_order

    if hyp_len == 0:
        # Degenerate: nothing was produced. BP is undefined; report it as 0.
        notes.append(NOTE_EMPTY_HYPOTHESIS)
        return BleuReport(0.0, precisions, 0.0, 0, ref_len, sig, correct, total, notes)

    # Orders beyond the longest hypothesis n-gram carry no evidence and are
    # excluded from the geometric mean (their precisions stay 0.0).
    effective_order = 0
    for n in range(1, config.max_order + 1):
        if total[n - 1] > 0:
            effective_order = n

    smooth_zeros = 0
    for n in range(1, effective_order + 1):
        if correct[n - 1] == 0:
            if config.smoothing == SMOOTH_EXP:
                smooth_zeros += 1
                precisions[n - 1] = 1.0 / (2**smooth_zeros * total[n - 1])
            else:
                precisions[n - 1] = 0.0
        else:
            precisions[n - 1] = correct[n - 1] / total[n - 1]

    brevity_penalty = 1.0
    if hyp_len < ref_len:
        brevity_penalty = math.exp(1.0 - ref_len / hyp_len)

    used = precisions[:effective_order]
    if not used or any(p == 0.0 for p in used):
        score = 0.0
    else:
        score = 100.0 * brevity_penalty * math.exp(sum(math.log(p) for p in used) / effective_order)

    return BleuReport(score, precisions, brevity_penalty, hyp_len, ref_len, sig, correct, total, notes)


# --- public scoring API -----------------------------------------------------

def corpus_bleu(
    hypotheses: Iterable[str],
    references: Iterable[str],
    config: BleuConfig = DEFAULT_CONFIG,
) -> BleuReport:
    """Corpus BLEU over aligned single-reference sentence lists.

    Clipped n-gram counts are summed over the whole corpus before the
    precision ratio is taken. Exponential smoothing replaces the k-th
    zero numerator with 1/(2^k * denominator).
    """
    hyps = list(hypotheses)
    refs = list(references)
    if len(hyps) != len(refs):
        raise LengthMismatch(len(hyps), len(refs))
    if not hyps:
        raise EmptyCorpus("corpus_bleu requires at least one sentence pair")

    correct = [0] * config.max_order
    total = [0] * config.max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        if config.lowercase:
            hyp, ref = hyp.lower(), ref.lower()
        hyp_tokens = tokenize(hyp.rstrip(), config.tokenizer)
        ref_tokens = tokenize(ref.rstrip(), config.tokenizer)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        pair_correct, pair_total = pair_statistics(hyp_tokens, ref_tokens, config.max_order)
        for i in range(config.max_order):
            correct[i] += pair_correct[i]
            total[i] += pair_total[i]

    return _score_from_stats(correct, total, hyp_len, ref_len, config)


def sentence_bleu(
    hypothesis: str,
    reference: str,
    config: BleuConfig = DEFAULT_CONFIG,
) -> BleuReport:
    """Sentence BLEU: the corpus scorer over one pair, smoothing forced on.

    Without smoothing almost every imperfect sentence would zero out on
    the higher orders.
    """
    if not reference.strip():
        raise EmptyReference("sentence_bleu requires a non-empty reference")
    return corpus_bleu([hypothesis], [reference], replace(config, smoothing=SMOOTH_EXP))
