"""Caption accuracy metrics: ROUGE-N, ROUGE-L, exact-match METEOR and BLEU.

All metrics tokenize both strings the same way as the language encoder and
take (candidate, reference) in that order.
"""
from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache

from ..lang import tokenize

ROUGE_L_BETA2 = 8.0
BLEU_EPS = 1e-9


def _toks(x) -> list[str]:
    return tokenize(x) if isinstance(x, str) else list(x)


def ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate, reference, n: int = 1) -> float:
    """Clipped n-gram recall of the reference; 0 for an empty reference."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ref = ngrams(_toks(reference), n)
    total = sum(ref.values())
    if total == 0:
        return 0.0
    cand = ngrams(_toks(candidate), n)
    return sum(min(c, cand[g]) for g, c in ref.items()) / total


def lcs_length(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, reference, beta2: float = ROUGE_L_BETA2) -> float:
    c, r = _toks(candidate), _toks(reference)
    if not c or not r:
        return 0.0
    lcs = lcs_length(c, r)
    if lcs == 0:
        return 0.0
    p, rec = lcs / len(c), lcs / len(r)
    return (1 + beta2) * p * rec / (rec + beta2 * p)


def meteor_alignment(c: list[str], r: list[str]) -> tuple[int, int]:
    """(matches, chunks) of the exact-match alignment with most matches, then fewest chunks."""
    options = [tuple(j for j, w in enumerate(r) if w == x) for x in c]

    @lru_cache(maxsize=None)
    def best(i: int, used: int, prev: int) -> tuple[int, int]:
        # returns (matches, -chunks) for c[i:]; prev is the ref index matched at i-1, or -1
        if i == len(c):
            return 0, 0
        m, nc = best(i + 1, used, -1)
        for j in options[i]:
            if used >> j & 1:
                continue
            sm, snc = best(i + 1, used | (1 << j), j)
            cand = (sm + 1, snc - (0 if prev >= 0 and j == prev + 1 else 1))
            if cand > (m, nc):
                m, nc = cand
        return m, nc

    m, neg_chunks = best(0, 0, -1)
    return m, -neg_chunks


def meteor_simplified(candidate, reference) -> float:
    c, r = _toks(candidate), _toks(reference)
    if not c or not r:
        return 0.0
    m, chunks = meteor_alignment(c, r)
    if m == 0:
        return 0.0
    p, rec = m / len(c), m / len(r)
    fmean = 10 * p * rec / (rec + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1 - penalty)


def bleu(candidate, reference, max_n: int = 4) -> float:
    """Geometric mean of clipped precisions times the brevity penalty.

    Orders longer than the candidate are left out; an order with no clipped
    matches contributes BLEU_EPS.
    """
    c, r = _toks(candidate), _toks(reference)
    if not c:
        return 0.0
    top = min(max_n, len(c))
    logs = []
    for n in range(1, top + 1):
        cand, ref = ngrams(c, n), ngrams(r, n)
        clipped = sum(min(k, ref[g]) for g, k in cand.items())
        p = clipped / sum(cand.values())
        logs.append(math.log(p if clipped else BLEU_EPS))
    bp = 1.0 if len(c) > len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.exp(sum(logs) / top)


METRICS = {"rouge1": lambda c, r: rouge_n(c, r, 1), "rougeL": rouge_l, "meteor": meteor_simplified, "bleu": bleu}
