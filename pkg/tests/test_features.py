"""Tests for TF-IDF matrices, party lexicons, and user feature vectors."""

import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polistance.corpus import Tweet, UserProfile
from polistance.features import (
    FEATURE_NAMES,
    FeatureError,
    PartyLexicon,
    PartyTerms,
    TermCounts,
    UserFeatureVector,
    build_hashtag_matrix,
    build_text_matrix,
    default_lexicon,
    idf,
    user_feature_vector,
    write_matrix,
)


def oracle_matrix(term_lists, min_support):
    """From-scratch recomputation: vocabulary and dense cell values."""
    users = [u for u, terms in term_lists.items() if terms]
    total = len(users)
    support = {}
    for u in users:
        for t in set(term_lists[u]):
            support[t] = support.get(t, 0) + 1
    vocab = sorted(t for t, s in support.items() if s >= min_support)
    cells = {}
    for i, u in enumerate(users):
        tokens = list(term_lists[u])
        for j, t in enumerate(vocab):
            n = tokens.count(t)
            if n:
                cells[(i, j)] = (n / len(tokens)) * math.log(total / (1 + support[t]))
    return users, vocab, cells


class TestIdf:
    def test_rare_term(self):
        assert idf(10, 1) == pytest.approx(math.log(5), abs=1e-12)

    def test_universal_term_goes_negative(self):
        assert idf(10, 10) == pytest.approx(math.log(10 / 11), abs=1e-12)
        assert idf(10, 10) < 0

    def test_preconditions(self):
        with pytest.raises(FeatureError):
            idf(0, 0)
        with pytest.raises(FeatureError):
            idf(5, 6)


class TestTermCounts:
    def test_normalized_frequencies(self):
        counts = TermCounts.from_tokens(["modi", "modi", "aap", "rally"])
        assert counts.tf("modi") == 0.5
        assert counts.tf("aap") == 0.25
        assert counts.tf("absent") == 0.0

    def test_empty_rejected(self):
        with pytest.raises(FeatureError):
            TermCounts.from_tokens([]).tf("x")

    @settings(max_examples=100)
    @given(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=50))
    def test_tf_sums_to_one(self, tokens):
        total = math.fsum(TermCounts.from_tokens(tokens).tf_map().values())
        assert abs(total - 1.0) <= 1e-12


class TestTextMatrix:
    def test_matches_oracle(self):
        rng = np.random.default_rng(61)
        words = [f"w{k}" for k in range(30)]
        term_lists = {
            f"user{i}": [words[rng.integers(0, 30)] for _ in range(rng.integers(5, 40))]
            for i in range(20)
        }
        matrix = build_text_matrix(term_lists, min_user_support=5)
        users, vocab, cells = oracle_matrix(term_lists, 5)

        assert list(matrix.user_ids) == users
        assert [v.term for v in matrix.vocabulary] == vocab
        dense = matrix.dense()
        assert dense.shape == (len(users), len(vocab))
        for (i, j), value in cells.items():
            assert abs(dense[i, j] - value) <= 1e-12
        assert np.count_nonzero(dense) == len(cells)

    def test_vocab_size_at_scale(self):
        rng = np.random.default_rng(613)
        words = [f"w{k}" for k in range(400)]
        term_lists = {
            f"user{i}": [words[rng.integers(0, 400)] for _ in range(25)]
            for i in range(613)
        }
        matrix = build_text_matrix(term_lists, min_user_support=5)
        _, vocab, _ = oracle_matrix(term_lists, 5)
        assert matrix.shape == (613, len(vocab))

    def test_support_counted_before_pruning_and_full_denominator(self):
        # "rare" misses the support cut but still dilutes the TF denominator
        term_lists = {
            "u1": ["shared", "rare"],
            "u2": ["shared"],
            "u3": ["shared"],
        }
        matrix = build_text_matrix(term_lists, min_user_support=3)
        assert [v.term for v in matrix.vocabulary] == ["shared"]
        expected = 0.5 * math.log(3 / 4)
        assert matrix.dense()[0, 0] == pytest.approx(expected, abs=1e-15)

    def test_empty_user_error_and_drop(self):
        term_lists = {"u1": ["a"], "u2": []}
        with pytest.raises(FeatureError, match="u2"):
            build_text_matrix(term_lists, min_user_support=1)
        matrix = build_text_matrix(term_lists, min_user_support=1, on_empty="drop")
        assert matrix.user_ids == ("u1",)
        # |U| counts kept users only
        assert matrix.vocabulary[0].idf == pytest.approx(math.log(1 / 2), abs=1e-15)

    def test_all_users_empty_rejected(self):
        with pytest.raises(FeatureError):
            build_text_matrix({"u1": []}, min_user_support=1, on_empty="drop")

    @settings(max_examples=60)
    @given(
        st.dictionaries(
            st.integers(0, 8),
            st.lists(st.sampled_from("abcd"), min_size=1, max_size=12),
            min_size=1,
            max_size=8,
        ),
        st.integers(1, 4),
    )
    def test_support_monotonicity(self, raw, support):
        term_lists = {f"u{k}": v for k, v in raw.items()}
        low = build_text_matrix(term_lists, min_user_support=support)
        high = build_text_matrix(term_lists, min_user_support=support + 1)
        low_terms = {v.term for v in low.vocabulary}
        high_terms = {v.term for v in high.vocabulary}
        assert high_terms <= low_terms

    @settings(max_examples=60)
    @given(
        st.dictionaries(
            st.integers(0, 6),
            st.lists(st.sampled_from("abcd"), min_size=1, max_size=10),
            min_size=1,
            max_size=6,
        )
    )
    def test_doubling_tokens_changes_nothing(self, raw):
        term_lists = {f"u{k}": v for k, v in raw.items()}
        doubled = {u: list(v) + list(v) for u, v in term_lists.items()}
        a = build_text_matrix(term_lists, min_user_support=1)
        b = build_text_matrix(doubled, min_user_support=1)
        assert a.vocabulary == b.vocabulary
        assert np.array_equal(a.dense(), b.dense())


class TestHashtagMatrix:
    def test_no_tag_reaches_support(self):
        matrix = build_hashtag_matrix({"u1": ["namo", "namo"], "u2": ["aap"]})
        assert matrix.vocabulary == ()
        assert matrix.shape == (2, 0)

    def test_shared_tag_kept(self):
        matrix = build_hashtag_matrix({"u1": ["namo"], "u2": ["namo", "aap"]})
        assert [v.term for v in matrix.vocabulary] == ["namo"]

    def test_matches_oracle(self):
        rng = np.random.default_rng(99)
        tags = [f"tag{k}" for k in range(25)]
        term_lists = {
            f"user{i}": [tags[rng.integers(0, 25)] for _ in range(rng.integers(1, 12))]
            for i in range(99)
        }
        matrix = build_hashtag_matrix(term_lists, min_user_support=2)
        users, vocab, cells = oracle_matrix(term_lists, 2)
        assert [v.term for v in matrix.vocabulary] == vocab
        dense = matrix.dense()
        for (i, j), value in cells.items():
            assert abs(dense[i, j] - value) <= 1e-12


def tweet_for(name, text, hashtags=(), when=None, i=[0]):
    i[0] += 1
    return Tweet(
        tweet_id=f"t{i[0]}",
        author_id=f"id-{name}",
        author_screen_name=name,
        created_at=when or datetime(2014, 3, 1, tzinfo=timezone.utc),
        text=text,
        hashtags=tuple(hashtags),
    )


class TestUserFeatureVector:
    def test_following_bits(self):
        lexicon = default_lexicon()
        profile = UserProfile("u1", "fan", 10, 20, 30,
                              following=frozenset({"arvindkejriwal"}))
        vector = user_feature_vector(profile, [], lexicon)
        assert (vector.following_aap, vector.following_bjp, vector.following_cong) == (1, 0, 0)

    def test_word_occurrences_counted(self):
        lexicon = default_lexicon()
        profile = UserProfile("u1", "fan", 0, 0, 0)
        tweets = [tweet_for("fan", "kejriwal kejriwal speaks")]
        assert user_feature_vector(profile, tweets, lexicon).aap_words == 2

    def test_full_vector_matches_hand_count(self):
        lexicon = PartyLexicon(parties={
            "AAP": PartyTerms(frozenset({"jhadu"}), frozenset({"aap"}),
                              frozenset({"aamaadmiparty"})),
            "BJP": PartyTerms(frozenset({"namo", "modi"}), frozenset({"namo"}),
                              frozenset({"bjp4india"})),
            "CONG": PartyTerms(frozenset({"rahul"}), frozenset({"inc"}),
                               frozenset({"incindia"})),
        })
        profile = UserProfile("u1", "voter", followers_count=55, friends_count=44,
                              statuses_count=99,
                              following=frozenset({"bjp4india", "incindia", "other"}))
        tweets = [
            tweet_for("voter", "modi and namo wave", hashtags=("namo", "trend")),
            tweet_for("voter", "jhadu sweeps", hashtags=("aap", "namo")),
            tweet_for("voter", "rahul rahul rahul", hashtags=("inc",)),
        ]
        vector = user_feature_vector(profile, tweets, lexicon)
        assert vector.as_tuple() == (44, 55, 0, 1, 1, 1, 2, 3, 1, 2, 1)
        assert len(FEATURE_NAMES) == 11

    def test_tweet_order_irrelevant(self):
        lexicon = default_lexicon()
        profile = UserProfile("u1", "voter", 1, 2, 3)
        tweets = [
            tweet_for("voter", "modi rally", hashtags=("namo",)),
            tweet_for("voter", "kejriwal speech", hashtags=("aap",)),
            tweet_for("voter", "congress manifesto", hashtags=()),
        ]
        forward = user_feature_vector(profile, tweets, lexicon)
        backward = user_feature_vector(profile, tweets[::-1], lexicon)
        assert forward == backward

    def test_foreign_tweet_rejected(self):
        lexicon = default_lexicon()
        profile = UserProfile("u1", "voter", 1, 2, 3)
        with pytest.raises(FeatureError):
            user_feature_vector(profile, [tweet_for("other", "hello")], lexicon)

    def test_binary_fields_validated(self):
        with pytest.raises(FeatureError):
            UserFeatureVector(1, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0)


class TestLexicon:
    def test_default_is_valid_and_disjoint(self):
        lexicon = default_lexicon()
        seed_map = lexicon.seed_party_map()
        assert seed_map["narendramodi"] == "BJP"
        assert seed_map["aamaadmiparty"] == "AAP"
        assert seed_map["incindia"] == "CONG"

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "lexicon.json"
        lexicon = default_lexicon()
        lexicon.to_file(path)
        assert PartyLexicon.from_file(path) == lexicon

    def test_overlapping_seeds_rejected(self):
        shared = frozenset({"sharedhandle"})
        with pytest.raises(FeatureError, match="sharedhandle"):
            PartyLexicon(parties={
                "AAP": PartyTerms(frozenset(), frozenset(), shared),
                "BJP": PartyTerms(frozenset(), frozenset(), shared),
                "CONG": PartyTerms(frozenset(), frozenset(), frozenset()),
            })

    def test_uppercase_rejected(self):
        with pytest.raises(FeatureError):
            PartyTerms(frozenset({"Modi"}), frozenset(), frozenset())

    def test_hash_marker_rejected(self):
        with pytest.raises(FeatureError):
            PartyTerms(frozenset(), frozenset({"#namo"}), frozenset())

    def test_wrong_party_set_rejected(self):
        with pytest.raises(FeatureError):
            PartyLexicon(parties={
                "AAP": PartyTerms(frozenset(), frozenset(), frozenset()),
            })


class TestExport:
    def test_triplets_round_trip_exactly(self, tmp_path):
        term_lists = {"u1": ["a", "a", "b"], "u2": ["a", "c"], "u3": ["b", "c", "c"]}
        matrix = build_text_matrix(term_lists, min_user_support=2)
        write_matrix(
            matrix,
            tmp_path / "m.triplets",
            tmp_path / "m.vocab.tsv",
            tmp_path / "m.users.txt",
        )
        dense = matrix.dense()
        for line in (tmp_path / "m.triplets").read_text().splitlines():
            i, j, value = line.split()
            assert float(value) == dense[int(i), int(j)]
        vocab_lines = (tmp_path / "m.vocab.tsv").read_text().splitlines()
        assert vocab_lines[0] == "term\tusers\tidf"
        assert len(vocab_lines) - 1 == len(matrix.vocabulary)
        users = (tmp_path / "m.users.txt").read_text().split()
        assert users == list(matrix.user_ids)
