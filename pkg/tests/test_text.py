import math

import pytest

from groupdyn.corpus import Message
from groupdyn.text import (KeywordSet, TextAnalyzer, TfidfKeywords, Vocabulary, convergence_histogram,
                           keyword_similarity, light_stem, tfidf_keywords, tfidf_weights, tokenize)


def test_stop_words_removed():
    assert TextAnalyzer(stop_words=["the"]).tokenize("The THE the") == []


def test_stemming_collapses_forms():
    an = TextAnalyzer(stop_words=[]).fit(["Dogs dog DOG!"])
    assert an.tokenize("Dogs dog DOG!") == ["dog", "dog", "dog"]
    assert len(an.vocabulary_) == 1


def test_hand_tokenized_paragraph():
    text = "Bloggers were discussing the elections, and 3 readers commented: 'Taxes again?!'"
    expected = ["blogger", "discuss", "election", "reader", "comment", "taxe"]  # "again" is a stop word
    assert TextAnalyzer().tokenize(text) == expected


def test_no_stemming_keeps_words():
    assert TextAnalyzer(stop_words=[], stem=False).tokenize("Dogs barked") == ["dogs", "barked"]


def test_light_stem():
    assert [light_stem(w) for w in ["classes", "parties", "talking", "walked", "bus", "is"]] == \
        ["class", "party", "talk", "walk", "bus", "is"]


def test_tokenize_message_and_transform():
    an = TextAnalyzer(stop_words=[]).fit(["red apple", "green apple"])
    m = Message("m1", "u", None, "post", "m1", text="apple pie")
    doc = tokenize(m, an)
    assert doc.message_id == "m1" and an.vocabulary_.decode(doc.tokens) == ["apple"]
    assert an.transform(["red red"]) == [(an.vocabulary_.index["red"],) * 2]


def test_stop_word_change_refreshes_cache():
    an = TextAnalyzer(stop_words=["cat"])
    assert an.tokenize("cat dog") == ["dog"]
    an.set_params(stop_words=["dog"])
    assert an.tokenize("cat dog") == ["cat"]


def test_vocabulary_roundtrip():
    v = Vocabulary.from_documents([["a", "b"], ["b"]])
    assert list(v.df) == [1, 2] and v.n_docs == 2
    assert Vocabulary.from_dict(v.to_dict()).words == v.words


def test_word_in_every_document_has_zero_weight():
    docs = [["common", "rare"], ["common", "other"]]
    v = Vocabulary.from_documents(docs)
    assert tfidf_weights(docs[0], v)["common"] == 0.0
    assert tfidf_keywords(docs[0], v, 10).words == {"rare"}


def test_tfidf_hand_arithmetic():
    docs = [["unique"] * 3 + ["shared"], ["shared"]]
    w = tfidf_weights(docs[0], Vocabulary.from_documents(docs))
    assert w["unique"] == pytest.approx(3 * math.log(2))
    assert w["unique"] == pytest.approx(2.079, abs=1e-3)


def test_empty_document():
    v = Vocabulary.from_documents([["a"]])
    assert tfidf_keywords([], v).words == frozenset()


def test_top_n_ties_lexicographic():
    docs = [["b", "a", "c"], ["z"]]
    ks = TfidfKeywords(top_n=2).fit(docs).transform(docs)
    assert ks[0].words == {"a", "b"}


def test_similarity_cases():
    s = KeywordSet("d", frozenset("abc"), "tags")
    assert keyword_similarity(s, s) == 1.0
    assert keyword_similarity({"a"}, {"b"}) == 0.0
    tags = {"t1", "t2", "t3", "t4", "shared"}
    keywords = {"shared"} | {f"k{i}" for i in range(9)}
    assert keyword_similarity(tags, keywords) == pytest.approx(0.2)
    assert keyword_similarity(set(), {"a"}) is None


def test_histogram_identical_and_disjoint():
    same = convergence_histogram([({"a"}, {"a"})] * 4)
    assert same.rows()[-1] == (1.0, 4) and same.counts.sum() == 4
    apart = convergence_histogram([({"a"}, {"b"})] * 3)
    assert apart.rows()[0] == (0.0, 3) and apart.counts.sum() == 3


def test_histogram_mixed_fixture():
    pairs = [({"a", "b"}, {"a", "c"}),            # 0.5
             ({"a", "b", "c"}, {"a", "x", "y"}),  # 1/3 -> 0.35
             ({"a"}, {"a", "b"}),                 # 1.0
             ({"a", "b", "c", "d", "e"}, {"a"} | {f"k{i}" for i in range(9)}),  # 0.2
             (set(), {"a"})]
    h = convergence_histogram(pairs, 0.05)
    tally = {c: n for c, n in h.rows() if n}
    assert tally == {0.2: 1, 0.35: 1, 0.5: 1, 1.0: 1}
    assert h.missing == 1
