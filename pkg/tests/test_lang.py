import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from alanet import tensor as T
from alanet.config import NetworkConfig
from alanet.gradcheck import grad_check
from alanet.lang import LanguageEncoder, Vocabulary, encode_language, tokenize

CFG = NetworkConfig(channels=(4, 4, 6, 6, 8))


def test_tokenize_examples():
    assert tokenize("A road.") == ["a", "road"]
    assert tokenize("") == []
    assert tokenize("Some light spots") == ["some", "light", "spots"]
    assert tokenize("Two dogs, (running) on_the grass!") == ["two", "dogs", "running", "on", "the", "grass"]


def test_none_and_empty_are_no_language(rng):
    enc = LanguageEncoder(CFG, rng)
    assert encode_language(None, enc) is None
    assert encode_language("", enc) is None
    assert encode_language(" ... ", enc) is None


def test_single_token_is_adapter_of_embedding(rng):
    enc = LanguageEncoder(CFG, rng)
    feat = enc("window")
    emb = enc.vocab.table[enc.vocab.ids(["window"])[0]].reshape(1, -1)
    for level, (adapter, f) in enumerate(zip(enc.adapters, feat.per_level)):
        assert f.shape == (1, CFG.channels[level])
        assert np.array_equal(f.data, emb @ adapter.weight.data + adapter.bias.data)
    assert feat.token_count == 1 and feat.source_text == "window"


def test_order_invariance_over_permutations(rng):
    enc = LanguageEncoder(CFG, rng)
    words = ["a", "red", "car", "near", "glass"]
    ref = enc(" ".join(words)).per_level
    for perm in itertools.permutations(words):
        feat = enc(" ".join(perm)).per_level
        assert all(np.array_equal(a.data, b.data) for a, b in zip(ref, feat))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.text("abcdefgh", min_size=1, max_size=5), min_size=1, max_size=8), st.randoms())
def test_mean_embedding_order_invariant(tokens, rnd):
    vocab = Vocabulary(64, 8, seed=1)
    shuffled = list(tokens)
    rnd.shuffle(shuffled)
    assert np.array_equal(vocab.mean_embedding(tokens), vocab.mean_embedding(shuffled))


def test_vocabulary_is_deterministic():
    a, b = Vocabulary(128, 4, seed=3), Vocabulary(128, 4, seed=3)
    assert np.array_equal(a.table, b.table)
    assert a.ids(["glass", "light"]) == b.ids(["glass", "light"])
    assert all(0 <= i < 128 for i in a.ids(["x"] * 3 + ["reflection"]))


def test_adapter_gradients(rng):
    enc = LanguageEncoder(CFG, rng)

    def f(*_):
        feats = enc("some light spots on the glass").per_level
        total = T.sum_(feats[0])
        for t in feats[1:]:
            total = T.add(total, T.sum_(t))
        return total

    r = grad_check(f, enc.parameters(), tol=1e-4)
    assert r.passed, r.line()
