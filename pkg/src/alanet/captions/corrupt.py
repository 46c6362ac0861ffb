"""Graded caption corruption: incorrect, confused and incomplete variants."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .lexicon import PosLexicon, split_word

DEGREES = (0.25, 0.5, 0.75, 1.0)
KINDS = ("accurate", "incorrect", "confused", "incomplete")
REPLACEABLE = ("noun", "verb", "adjective", "adverb", "preposition", "numeral")
PREPOSITIONS = ("in", "on", "at", "under", "over", "beside", "near", "behind", "between", "through")
WORD_RULES = {"noun": "error", "verb": "misdo", "adjective": "incorrect", "adverb": "incorrectly"}
WHOLE_INCORRECT = "incorrect sentence"


@dataclass(frozen=True)
class CaptionRecord:
    image_id: str
    layer: str
    text: str
    kind: str = "accurate"
    degree: float | None = None
    warning: str | None = None

    def __post_init__(self):
        if self.layer not in ("T", "R"):
            raise ValueError(f"layer must be 'T' or 'R', got {self.layer!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown caption kind {self.kind!r}")
        if (self.kind == "accurate") != (self.degree is None):
            raise ValueError("accurate captions have no degree; corrupted ones need one")
        if self.degree is not None and self.degree not in DEGREES:
            raise ValueError(f"degree must be one of {DEGREES}")

    def to_json(self) -> str:
        d = asdict(self)
        if d["warning"] is None:
            del d["warning"]
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> CaptionRecord:
        return cls(**d)


def _check_degree(degree: float):
    if degree not in DEGREES:
        raise ValueError(f"degree must be one of {DEGREES}, got {degree}")


def _count(degree: float, n: int) -> int:
    return math.ceil(degree * n)


def corrupt_incorrect(record: CaptionRecord, degree: float, lexicon: PosLexicon | None = None, seed=0,
                      whole_sentence: bool = True) -> CaptionRecord:
    """Replace ceil(degree * k) of the k content words by class-specific fillers.

    At degree 1.0 the whole caption becomes "incorrect sentence" unless
    ``whole_sentence`` is False, in which case the word rule is applied to
    every replaceable word.
    """
    _check_degree(degree)
    if degree == 1.0 and whole_sentence:
        return replace(record, text=WHOLE_INCORRECT, kind="incorrect", degree=degree)
    lexicon = lexicon or default_lexicon()
    rng = np.random.default_rng(seed)
    words = record.text.split()
    classes = [lexicon.word_class(w) for w in words]
    candidates = [i for i, c in enumerate(classes) if c in REPLACEABLE]
    k = _count(degree, len(candidates))
    chosen = sorted(rng.choice(candidates, size=k, replace=False).tolist()) if k else []
    for i in chosen:
        pre, core, post = split_word(words[i])
        cls = classes[i]
        if cls in WORD_RULES:
            new = WORD_RULES[cls]
        elif cls == "preposition":
            pool = [p for p in PREPOSITIONS if p != core.lower()]
            new = pool[int(rng.integers(len(pool)))]
        else:
            choices = [n for n in range(100) if str(n) != core]
            new = str(choices[int(rng.integers(len(choices)))])
        words[i] = pre + new + post
    return replace(record, text=" ".join(words), kind="incorrect", degree=degree)


def corrupt_confused(record_t: CaptionRecord, record_r: CaptionRecord, degree: float, seed=0
                     ) -> tuple[CaptionRecord, CaptionRecord]:
    """Swap words at ceil(degree * min_len) shared positions between the two captions.

    Degree 1.0 exchanges the captions outright. With the same seed the swap is
    its own inverse.
    """
    _check_degree(degree)
    wt, wr = record_t.text.split(), record_r.text.split()
    if not wt or not wr:
        msg = "empty caption; nothing to exchange"
        return (replace(record_t, kind="confused", degree=degree, warning=msg),
                replace(record_r, kind="confused", degree=degree, warning=msg))
    if degree == 1.0:
        return (replace(record_t, text=record_r.text, kind="confused", degree=degree),
                replace(record_r, text=record_t.text, kind="confused", degree=degree))
    m = min(len(wt), len(wr))
    rng = np.random.default_rng(seed)
    for i in rng.choice(m, size=_count(degree, m), replace=False).tolist():
        wt[i], wr[i] = wr[i], wt[i]
    return (replace(record_t, text=" ".join(wt), kind="confused", degree=degree),
            replace(record_r, text=" ".join(wr), kind="confused", degree=degree))


def corrupt_incomplete(record: CaptionRecord, degree: float, seed=0) -> CaptionRecord:
    """Drop ceil(degree * n) words, keeping the survivors in order."""
    _check_degree(degree)
    words = record.text.split()
    rng = np.random.default_rng(seed)
    drop = set(rng.choice(len(words), size=_count(degree, len(words)), replace=False).tolist()) if words else set()
    kept = [w for i, w in enumerate(words) if i not in drop]
    return replace(record, text=" ".join(kept), kind="incomplete", degree=degree)


_LEXICON: PosLexicon | None = None


def default_lexicon() -> PosLexicon:
    global _LEXICON
    if _LEXICON is None:
        _LEXICON = PosLexicon()
    return _LEXICON


def corrupt_records(records: list[CaptionRecord], kind: str, degree: float, seed: int = 0,
                    lexicon: PosLexicon | None = None) -> list[CaptionRecord]:
    """Corrupt a caption list; record i uses seed (seed, i). Confusion pairs T/R by image id."""
    if kind == "incorrect":
        lexicon = lexicon or default_lexicon()
        return [corrupt_incorrect(r, degree, lexicon, [seed, i]) for i, r in enumerate(records)]
    if kind == "incomplete":
        return [corrupt_incomplete(r, degree, [seed, i]) for i, r in enumerate(records)]
    if kind == "confused":
        out = list(records)
        partner: dict[str, int] = {}
        for i, r in enumerate(records):
            other = "R" if r.layer == "T" else "T"
            key = (r.image_id, other)
            if key in partner:
                j = partner.pop(key)
                ti, ri = (j, i) if r.layer == "R" else (i, j)
                out[ti], out[ri] = corrupt_confused(records[ti], records[ri], degree, [seed, min(i, j)])
            else:
                partner[(r.image_id, r.layer)] = i
        for i in partner.values():
            out[i] = replace(records[i], kind="confused", degree=degree, warning="no partner caption to exchange with")
        return out
    raise ValueError(f"unknown corruption kind {kind!r}")


def read_captions(path) -> list[CaptionRecord]:
    with open(path) as fh:
        return [CaptionRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_captions(records, path):
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


_SUBJECTS = ["man", "woman", "boy", "girl", "dog", "cat", "child", "horse", "bird", "person", "couple", "player"]
_VERBS = ["walking", "running", "standing", "sitting", "riding", "playing", "jumping", "looking", "holding", "climbing"]
_ADJS = ["red", "small", "young", "tall", "old", "bright", "wooden", "wet", "black", "white", "large", "blue"]
_PLACES = ["street", "beach", "field", "building", "river", "bridge", "window", "table", "tree", "road", "wall", "park"]
_ADVS = ["slowly", "quickly", "happily", "quietly", "carefully"]
_PREPS = ["on", "near", "beside", "under", "in", "across", "behind", "along"]
_NUMS = ["two", "three", "four", "five"]


def synthetic_corpus(n_images: int = 25, seed: int = 0) -> list[CaptionRecord]:
    """Seeded T/R caption pairs built from simple scene templates (2 per image)."""
    rng = np.random.default_rng(seed)

    def pick(xs):
        return xs[int(rng.integers(len(xs)))]

    def caption():
        form = int(rng.integers(3))
        if form == 0:
            return f"A {pick(_ADJS)} {pick(_SUBJECTS)} {pick(_VERBS)} {pick(_ADVS)} {pick(_PREPS)} the {pick(_PLACES)}"
        if form == 1:
            return f"{pick(_NUMS).capitalize()} {pick(_SUBJECTS)}s {pick(_VERBS)} {pick(_PREPS)} a {pick(_ADJS)} {pick(_PLACES)}"
        return f"The {pick(_SUBJECTS)} is {pick(_VERBS)} {pick(_PREPS)} the {pick(_ADJS)} {pick(_PLACES)} and a {pick(_PLACES)}"

    out = []
    for i in range(n_images):
        out.append(CaptionRecord(f"img{i:03d}", "T", caption()))
        out.append(CaptionRecord(f"img{i:03d}", "R", caption()))
    return out
