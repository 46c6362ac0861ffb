"""Word-class lookup backed by a bundled lexicon and suffix fallbacks."""
from __future__ import annotations

import re
from importlib import resources

CLASSES = ("noun", "verb", "adjective", "adverb", "preposition", "numeral", "other")
_CORE = re.compile(r"^(\W*)(.*?)(\W*)$", re.S)


def split_word(word: str) -> tuple[str, str, str]:
    """Split surrounding punctuation off a whitespace token."""
    m = _CORE.match(word)
    return m.group(1), m.group(2), m.group(3)


def _plurals(noun: str) -> list[str]:
    if noun.endswith(("s", "x", "z", "ch", "sh")):
        return [noun + "es"]
    if noun.endswith("y") and noun[-2:-1] not in "aeiou":
        return [noun[:-1] + "ies"]
    return [noun + "s"]


def _inflections(verb: str) -> list[str]:
    stem = verb[:-1] if verb.endswith("e") and not verb.endswith("ee") else verb
    return _plurals(verb) + [stem + "ing", stem + "ed"]


class PosLexicon:
    def __init__(self, entries: dict[str, str] | None = None):
        if entries is None:
            entries = self._load_bundled()
        self.entries = dict(entries)

    @staticmethod
    def _load_bundled() -> dict[str, str]:
        text = resources.files(__package__).joinpath("lexicon.txt").read_text(encoding="utf-8")
        explicit: dict[str, str] = {}
        cls = None
        for line in text.splitlines():
            if line.startswith("## "):
                cls = line[3:].strip()
                if cls not in CLASSES:
                    raise ValueError(f"unknown word class {cls!r} in lexicon")
                continue
            if line.startswith("#") or cls is None:
                continue
            for w in line.split():
                explicit.setdefault(w.lower(), cls)
        entries = dict(explicit)
        for w, c in explicit.items():
            derived = _plurals(w) if c == "noun" else _inflections(w) if c == "verb" else []
            for d in derived:
                entries.setdefault(d, c)
        return entries

    def __len__(self):
        return len(self.entries)

    def word_class(self, word: str) -> str:
        w = split_word(word)[1].lower()
        if not w:
            return "other"
        if w in self.entries:
            return self.entries[w]
        if w.isdigit():
            return "numeral"
        if w.endswith("ly"):
            return "adverb"
        if w.endswith(("ing", "ed")):
            return "verb"
        return "other"
