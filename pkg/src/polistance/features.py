"""Feature representations for per-user classification.

Three representations are built here:

* a text TF-IDF matrix over word tokens (terms kept when used by at least
  5 distinct users),
* a hashtag TF-IDF matrix (support threshold 2),
* an 11-dimension per-user feature vector combining profile counts,
  party-account follow bits, and party keyword/hashtag occurrence counts.

TF is the user-normalized frequency n_ij / sum_k n_kj. IDF is
ln(|U| / (1 + |U_i|)) with |U| the number of users in the matrix and |U_i|
the number of distinct users of the term; the +1 pushes terms used by every
user to a small negative weight, which is kept as-is rather than floored.
Support pruning removes columns, never tokens: the TF denominator counts
all of a user's (post-stoplist) tokens.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Stoplist, Tweet, UserProfile, canonical_dumps, tokenize

__all__ = [
    "PARTIES",
    "FeatureError",
    "FeatureMatrix",
    "PartyLexicon",
    "PartyTerms",
    "TermCounts",
    "UserFeatureVector",
    "VocabTerm",
    "build_hashtag_matrix",
    "build_text_matrix",
    "default_lexicon",
    "idf",
    "user_feature_vector",
    "write_matrix",
]

PARTIES = ("AAP", "BJP", "CONG")


class FeatureError(ValueError):
    """Raised for invalid feature-extraction inputs."""


@dataclass(frozen=True)
class TermCounts:
    """Occurrence counts for one user's terms."""

    counts: Mapping[str, int]
    token_total: int

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "TermCounts":
        return cls(counts=dict(Counter(tokens)), token_total=len(tokens))

    def tf(self, term: str) -> float:
        """Normalized term frequency n_ij / token_total."""
        if self.token_total == 0:
            raise FeatureError("term frequency undefined for an empty token list")
        return self.counts.get(term, 0) / self.token_total

    def tf_map(self) -> dict[str, float]:
        return {term: count / self.token_total for term, count in self.counts.items()}


@dataclass(frozen=True)
class VocabTerm:
    term: str
    user_count: int  # |U_i|: distinct users of the term
    idf: float


@dataclass(frozen=True)
class FeatureMatrix:
    """Sparse per-user TF-IDF matrix with its vocabulary."""

    vocabulary: tuple[VocabTerm, ...]
    user_ids: tuple[str, ...]
    rows: tuple[Mapping[int, float], ...]

    @property
    def user_count(self) -> int:
        return len(self.user_ids)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.user_ids), len(self.vocabulary))

    def term_index(self) -> dict[str, int]:
        return {entry.term: i for i, entry in enumerate(self.vocabulary)}

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float64)
        for i, row in enumerate(self.rows):
            for j, value in row.items():
                out[i, j] = value
        return out


def idf(user_count: int, term_user_count: int) -> float:
    """Inverse document frequency ln(|U| / (1 + |U_i|)).

    Negative for terms used by (almost) every user; that is deliberate and
    kept unfloored.
    """
    if user_count < 1:
        raise FeatureError("user_count must be >= 1")
    if not 0 <= term_user_count <= user_count:
        raise FeatureError("term_user_count must lie in [0, user_count]")
    return math.log(user_count / (1 + term_user_count))


def _build_matrix(
    term_lists: Mapping[str, Sequence[str]],
    min_user_support: int,
    on_empty: str,
    what: str,
) -> FeatureMatrix:
    if min_user_support < 1:
        raise FeatureError("min_user_support must be >= 1")
    if on_empty not in ("error", "drop"):
        raise FeatureError(f"on_empty must be 'error' or 'drop', got {on_empty!r}")

    kept: list[tuple[str, TermCounts]] = []
    for user_id, terms in term_lists.items():
        if len(terms) == 0:
            if on_empty == "error":
                raise FeatureError(f"user {user_id!r} has no {what}")
            continue
        kept.append((user_id, TermCounts.from_tokens(terms)))
    if not kept:
        raise FeatureError(f"no users with {what}; matrix would be empty")

    n_users = len(kept)
    support: Counter[str] = Counter()
    for _, counts in kept:
        support.update(counts.counts.keys())

    vocabulary = tuple(
        VocabTerm(term=term, user_count=support[term], idf=idf(n_users, support[term]))
        for term in sorted(support)
        if support[term] >= min_user_support
    )
    column = {entry.term: j for j, entry in enumerate(vocabulary)}

    rows = []
    for _, counts in kept:
        row = {}
        for term, count in counts.counts.items():
            j = column.get(term)
            if j is not None:
                row[j] = (count / counts.token_total) * vocabulary[j].idf
        rows.append(row)

    return FeatureMatrix(
        vocabulary=vocabulary,
        user_ids=tuple(user_id for user_id, _ in kept),
        rows=tuple(rows),
    )


def build_text_matrix(
    tokenized_users: Mapping[str, Sequence[str]],
    min_user_support: int = 5,
    on_empty: str = "error",
) -> FeatureMatrix:
    """TF-IDF matrix over word tokens, one row per user.

    ``on_empty`` controls users with zero tokens: ``error`` raises,
    ``drop`` silently excludes them from the matrix (and from |U|).
    """
    return _build_matrix(tokenized_users, min_user_support, on_empty, "tokens")


def build_hashtag_matrix(
    hashtag_users: Mapping[str, Sequence[str]],
    min_user_support: int = 2,
    on_empty: str = "error",
) -> FeatureMatrix:
    """TF-IDF matrix over hashtag occurrences, one row per user."""
    return _build_matrix(hashtag_users, min_user_support, on_empty, "hashtags")


@dataclass(frozen=True)
class PartyTerms:
    """Lowercase keyword/hashtag/account buckets for one party."""

    keywords: frozenset[str]
    hashtags: frozenset[str]
    seed_accounts: frozenset[str]

    def __post_init__(self) -> None:
        for name in ("keywords", "hashtags", "seed_accounts"):
            values = getattr(self, name)
            object.__setattr__(self, name, frozenset(values))
            for value in values:
                if value != value.lower():
                    raise FeatureError(f"{name} entry {value!r} is not lowercase")
                if name == "hashtags" and value.startswith("#"):
                    raise FeatureError(f"hashtag {value!r} must not carry '#'")


@dataclass(frozen=True)
class PartyLexicon:
    """Keyword, hashtag, and seed-account buckets for the three parties."""

    parties: Mapping[str, PartyTerms]

    def __post_init__(self) -> None:
        if set(self.parties) != set(PARTIES):
            raise FeatureError(f"lexicon must cover exactly {PARTIES}")
        seen: dict[str, str] = {}
        for party in PARTIES:
            for account in self.parties[party].seed_accounts:
                if account in seen:
                    raise FeatureError(
                        f"seed account {account!r} appears under both "
                        f"{seen[account]} and {party}"
                    )
                seen[account] = party

    def terms(self, party: str) -> PartyTerms:
        return self.parties[party]

    def seed_party_map(self) -> dict[str, str]:
        """screen_name -> party, over all seed accounts."""
        return {
            account: party
            for party in PARTIES
            for account in self.parties[party].seed_accounts
        }

    @classmethod
    def from_file(cls, path: str | Path) -> "PartyLexicon":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FeatureError(f"cannot read lexicon {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise FeatureError(f"{path}: lexicon must be an object keyed by party")
        parties = {}
        for party, buckets in raw.items():
            if not isinstance(buckets, dict):
                raise FeatureError(f"{path}: party {party!r} must map to an object")
            unknown = set(buckets) - {"keywords", "hashtags", "seed_accounts"}
            if unknown:
                raise FeatureError(f"{path}: unknown bucket {sorted(unknown)} in {party!r}")
            parties[party] = PartyTerms(
                keywords=frozenset(buckets.get("keywords", [])),
                hashtags=frozenset(buckets.get("hashtags", [])),
                seed_accounts=frozenset(buckets.get("seed_accounts", [])),
            )
        return cls(parties=parties)

    def to_file(self, path: str | Path) -> None:
        payload = {
            party: {
                "keywords": sorted(terms.keywords),
                "hashtags": sorted(terms.hashtags),
                "seed_accounts": sorted(terms.seed_accounts),
            }
            for party, terms in sorted(self.parties.items())
        }
        Path(path).write_text(canonical_dumps(payload) + "\n", encoding="utf-8")


def default_lexicon() -> PartyLexicon:
    """Built-in party buckets: names, leaders, common campaign tags."""
    return PartyLexicon(
        parties={
            "AAP": PartyTerms(
                keywords=frozenset({
                    "aap", "aamaadmiparty", "kejriwal", "arvindkejriwal",
                    "jhadu", "broom", "sisodia", "lokpal", "swaraj",
                }),
                hashtags=frozenset({
                    "aap", "aapsweep", "aamaadmiparty", "kejriwal",
                    "vote4aap", "jhadu", "aapkidilli",
                }),
                seed_accounts=frozenset({
                    "aamaadmiparty", "arvindkejriwal", "msisodia",
                }),
            ),
            "BJP": PartyTerms(
                keywords=frozenset({
                    "bjp", "modi", "namo", "narendramodi", "modiji",
                    "rajnath", "gujarat", "hindutva", "nda",
                }),
                hashtags=frozenset({
                    "bjp", "namo", "modi", "namo4pm", "abkibaarmodisarkar",
                    "modiwave", "nda",
                }),
                seed_accounts=frozenset({
                    "bjp4india", "narendramodi", "arunjaitley", "amitshah",
                }),
            ),
            "CONG": PartyTerms(
                keywords=frozenset({
                    "congress", "rahul", "rahulgandhi", "sonia",
                    "soniagandhi", "gandhi", "upa", "manmohan", "raga",
                }),
                hashtags=frozenset({
                    "congress", "rahulgandhi", "upa", "voteforcongress",
                    "inc", "withrg",
                }),
                seed_accounts=frozenset({
                    "incindia", "rahulgandhi", "priyankagandhi",
                }),
            ),
        }
    )


FEATURE_NAMES = (
    "friends_count",
    "followers_count",
    "following_aap",
    "following_bjp",
    "following_cong",
    "aap_words",
    "bjp_words",
    "cong_words",
    "aap_hashtags",
    "bjp_hashtags",
    "cong_hashtags",
)


@dataclass(frozen=True)
class UserFeatureVector:
    """Eleven per-user numbers, in the fixed FEATURE_NAMES order."""

    friends_count: int
    followers_count: int
    following_aap: int
    following_bjp: int
    following_cong: int
    aap_words: int
    bjp_words: int
    cong_words: int
    aap_hashtags: int
    bjp_hashtags: int
    cong_hashtags: int

    def __post_init__(self) -> None:
        for name in ("following_aap", "following_bjp", "following_cong"):
            if getattr(self, name) not in (0, 1):
                raise FeatureError(f"{name} must be 0 or 1")

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)


def user_feature_vector(
    profile: UserProfile,
    tweets: Sequence[Tweet],
    lexicon: PartyLexicon,
    stoplist: Stoplist | Iterable[str] | None = None,
) -> UserFeatureVector:
    """Build the 11-dimension vector for one user.

    Word and hashtag counts are occurrence totals over all the user's
    tweets, not distinct-term counts.
    """
    for tweet in tweets:
        if tweet.author_screen_name != profile.screen_name:
            raise FeatureError(
                f"tweet {tweet.tweet_id} authored by {tweet.author_screen_name!r}, "
                f"not {profile.screen_name!r}"
            )

    tokens: list[str] = []
    hashtags: list[str] = []
    for tweet in tweets:
        tokens.extend(tokenize(tweet.text, stoplist))
        hashtags.extend(tweet.hashtags)

    def word_count(party: str) -> int:
        keywords = lexicon.terms(party).keywords
        return sum(1 for token in tokens if token in keywords)

    def hashtag_count(party: str) -> int:
        tags = lexicon.terms(party).hashtags
        return sum(1 for tag in hashtags if tag in tags)

    def follows(party: str) -> int:
        return int(bool(profile.following & lexicon.terms(party).seed_accounts))

    return UserFeatureVector(
        friends_count=profile.friends_count,
        followers_count=profile.followers_count,
        following_aap=follows("AAP"),
        following_bjp=follows("BJP"),
        following_cong=follows("CONG"),
        aap_words=word_count("AAP"),
        bjp_words=word_count("BJP"),
        cong_words=word_count("CONG"),
        aap_hashtags=hashtag_count("AAP"),
        bjp_hashtags=hashtag_count("BJP"),
        cong_hashtags=hashtag_count("CONG"),
    )


def write_matrix(
    matrix: FeatureMatrix,
    triplets_path: str | Path,
    vocabulary_path: str | Path,
    users_path: str | Path,
) -> None:
    """Export a matrix as row/col/value triplets plus two sidecars.

    The vocabulary sidecar is a TSV of term, user count, and idf; the users
    sidecar lists user ids in row order. Floats are written with repr so a
    reader recovers them bit-exactly.
    """
    with open(triplets_path, "w", encoding="utf-8", newline="\n") as handle:
        for i, row in enumerate(matrix.rows):
            for j in sorted(row):
                handle.write(f"{i} {j} {row[j]!r}\n")
    with open(vocabulary_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("term\tusers\tidf\n")
        for entry in matrix.vocabulary:
            handle.write(f"{entry.term}\t{entry.user_count}\t{entry.idf!r}\n")
    with open(users_path, "w", encoding="utf-8", newline="\n") as handle:
        for user_id in matrix.user_ids:
            handle.write(user_id + "\n")
