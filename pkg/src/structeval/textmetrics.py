"""Character-level chrF and token-level corpus BLEU.

Both scores live on a 0-100 scale. chrF follows the character n-gram
F-score construction (orders 1..max averaged, recall-weighted by beta);
BLEU is the classic corpus-level clipped-precision geometric mean with a
brevity penalty and NIST-style exponential smoothing.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import ConfigError, EmptyCorpus

__all__ = ["ChrfConfig", "BleuConfig", "chrf", "corpus_bleu", "tokenize"]

_NO_SPACE = str.maketrans("", "", " \t\n\r\f\v")


@dataclass(frozen=True, slots=True)
class ChrfConfig:
    max_ngram_order: int = 6
    beta: float = 2.0

    def __post_init__(self) -> None:
        if self.max_ngram_order < 1:
            raise ConfigError("chrF max_ngram_order must be >= 1")
        if self.beta <= 0:
            raise ConfigError("chrF beta must be > 0")


@dataclass(frozen=True, slots=True)
class BleuConfig:
    max_ngram_order: int = 4
    smoothing: str = "exp"
    tokenizer: str = "whitespace"

    def __post_init__(self) -> None:
        if self.max_ngram_order < 1:
            raise ConfigError("BLEU max_ngram_order must be >= 1")
        if self.smoothing not in ("exp", "none"):
            raise ConfigError(f"unknown BLEU smoothing: {self.smoothing!r}")
        if self.tokenizer not in ("whitespace", "character"):
            raise ConfigError(f"unknown BLEU tokenizer: {self.tokenizer!r}")


def _char_ngrams(s: str, n: int) -> Counter:
    return Counter(s[i : i + n] for i in range(len(s) - n + 1))


def chrf(hypothesis: str, reference: str, config: ChrfConfig = ChrfConfig()) -> float:
    """Character n-gram F-beta score in [0, 100].

    Whitespace is removed from both sides before n-gram extraction. Orders
    at which neither side has any n-gram are excluded from the average, so
    short identical strings still score 100. Two empty strings score 100
    (perfect agreement); exactly one empty string scores 0.
    """
    hyp = hypothesis.translate(_NO_SPACE)
    ref = reference.translate(_NO_SPACE)
    if not hyp and not ref:
        return 100.0
    beta_sq = config.beta * config.beta
    total_f = 0.0
    orders = 0
    for n in range(1, config.max_ngram_order + 1):
        hyp_grams = _char_ngrams(hyp, n)
        ref_grams = _char_ngrams(ref, n)
        hyp_total = len(hyp) - n + 1
        ref_total = len(ref) - n + 1
        if hyp_total <= 0 and ref_total <= 0:
            continue
        matched = sum((hyp_grams & ref_grams).values())
        precision = matched / hyp_total if hyp_total > 0 else 0.0
        recall = matched / ref_total if ref_total > 0 else 0.0
        if precision + recall > 0:
            total_f += (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)
        orders += 1
    if orders == 0:
        return 100.0
    return 100.0 * total_f / orders


def tokenize(text: str, tokenizer: str) -> list[str]:
    """Split text into BLEU tokens: on whitespace, or per non-space character."""
    if tokenizer == "whitespace":
        return text.split()
    if tokenizer == "character":
        return [c for c in text if not c.isspace()]
    raise ConfigError(f"unknown BLEU tokenizer: {tokenizer!r}")


def _token_ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    pairs: list[tuple[str, str]], config: BleuConfig = BleuConfig()
) -> float:
    """Corpus BLEU in [0, 100] over (hypothesis, reference) pairs.

    Clipped n-gram counts are pooled over all pairs before the geometric
    mean, and the brevity penalty uses pooled token lengths. Orders where
    the pooled hypotheses have no n-grams at all are dropped from the mean
    (effective-order behavior); with "exp" smoothing the k-th zero-count
    order gets a match count of 1/2^k instead.
    """
    if not pairs:
        raise EmptyCorpus("corpus BLEU needs at least one segment pair")
    max_n = config.max_ngram_order
    clipped = [0] * max_n
    total = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hypothesis, reference in pairs:
        hyp_tokens = tokenize(hypothesis, config.tokenizer)
        ref_tokens = tokenize(reference, config.tokenizer)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, max_n + 1):
            if len(hyp_tokens) < n:
                break
            hyp_grams = _token_ngrams(hyp_tokens, n)
            ref_grams = _token_ngrams(ref_tokens, n)
            clipped[n - 1] += sum((hyp_grams & ref_grams).values())
            total[n - 1] += sum(hyp_grams.values())
    effective_order = sum(1 for t in total if t > 0)
    if effective_order == 0 or hyp_len == 0:
        return 0.0
    log_sum = 0.0
    smooth_denominator = 1.0
    for n in range(1, effective_order + 1):
        if clipped[n - 1] > 0:
            precision = clipped[n - 1] / total[n - 1]
        elif config.smoothing == "exp":
            smooth_denominator *= 2.0
            precision = 1.0 / (smooth_denominator * total[n - 1])
        else:
            return 0.0
        log_sum += math.log(precision)
    brevity_penalty = 1.0
    if hyp_len < ref_len:
        brevity_penalty = math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity_penalty * math.exp(log_sum / effective_order)
