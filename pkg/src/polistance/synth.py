"""Synthetic corpora with planted party structure, for testing and demos.

Users belong to one of three parties and tweet from skewed vocabularies;
interactions (retweets and mentions) stay mostly inside the party, so the
interaction graph carries a recoverable community signal. Annotations come
from simulated annotators who flip labels at a configurable noise rate.
Everything is a pure function of the ``SyntheticSpec``, so equal seeds
give byte-identical output files.

Also hosts ``planted_partition_graph``, a block-model generator used to
exercise community detection at controlled difficulty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .annotation import LABELS, Annotation, write_annotations
from .corpus import Tweet, UserProfile, write_corpus
from .features import PARTIES, PartyLexicon, default_lexicon
from .graph import InteractionGraph

__all__ = [
    "SyntheticCorpus",
    "SyntheticSpec",
    "SynthError",
    "generate_corpus",
    "planted_partition_graph",
    "skewed_preset",
    "write_synthetic",
]

_SEED_MASK = (1 << 64) - 1

# stream ids for the independent rng lanes of one generation run
_CONTENT_STREAM = 7001
_INTERACT_STREAM = 7002
_ANNOTATE_STREAM = 7003
_PROFILE_STREAM = 7004

_EPOCH = datetime(2014, 4, 1, 0, 0, 0, tzinfo=timezone.utc)

# when a token is political, how often it names the author's own party
# rather than an opponent; below 1.0 the text signal gets noisy the way
# real political chatter does (people talk about the other side a lot)
_OWN_PARTY_SHARE = 0.55

_NEUTRAL_WORDS = (
    "morning evening night today tomorrow people crowd rally speech news "
    "media tv debate vote votes voter booth poll campaign leader promise "
    "road water power job jobs farmer student city village market price "
    "rupee bank school college hospital doctor teacher police court law "
    "bill tax budget growth economy youth women safety metro train bus "
    "chai food cricket movie song festival traffic airport rain summer"
).split()

_NEUTRAL_TAGS = ("india", "elections2014", "delhi", "mumbai", "news", "polls")

_LOCATIONS = ("Delhi", "Mumbai", "Bangalore", "Chennai", "Varanasi", None)

# who a party's supporters are annotated as being against
_OPPONENT = {"AAP": "BJP", "BJP": "AAP", "CONG": "BJP"}


class SynthError(ValueError):
    """Raised for invalid generator parameters."""


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise SynthError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic corpus."""

    users_per_party: Mapping[str, int] = field(
        default_factory=lambda: {"AAP": 40, "BJP": 40, "CONG": 40}
    )
    tweets_per_user: int = 30
    p_intra: float = 0.3
    p_cross: float = 0.02
    vocab_skew: Mapping[str, float] = field(
        default_factory=lambda: {"AAP": 0.25, "BJP": 0.25, "CONG": 0.25}
    )
    annotator_noise: float = 0.1
    n_annotators: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if set(self.users_per_party) != set(PARTIES):
            raise SynthError(f"users_per_party must cover exactly {PARTIES}")
        if set(self.vocab_skew) != set(PARTIES):
            raise SynthError(f"vocab_skew must cover exactly {PARTIES}")
        for party, count in self.users_per_party.items():
            if count < 1:
                raise SynthError(f"users_per_party[{party!r}] must be >= 1")
        if self.tweets_per_user < 1:
            raise SynthError("tweets_per_user must be >= 1")
        if self.n_annotators < 1:
            raise SynthError("n_annotators must be >= 1")
        _check_prob("p_intra", self.p_intra)
        _check_prob("p_cross", self.p_cross)
        if self.p_intra + self.p_cross > 1.0:
            raise SynthError("p_intra + p_cross must not exceed 1")
        for party, skew in self.vocab_skew.items():
            _check_prob(f"vocab_skew[{party!r}]", skew)
        _check_prob("annotator_noise", self.annotator_noise)


def skewed_preset(rng_seed: int = 0) -> SyntheticSpec:
    """Heavily imbalanced parameters (AAP 133 / BJP 447 / CONG 33)."""
    return SyntheticSpec(
        users_per_party={"AAP": 133, "BJP": 447, "CONG": 33},
        rng_seed=rng_seed,
    )


@dataclass(frozen=True)
class SyntheticCorpus:
    """A generated corpus plus its planted ground truth."""

    tweets: tuple[Tweet, ...]
    profiles: tuple[UserProfile, ...]
    annotations: tuple[Annotation, ...]
    truth: Mapping[str, str]
    spec: SyntheticSpec

    def seed_party_map(self) -> dict[str, str]:
        return default_lexicon().seed_party_map()


def _party_vocab(lexicon: PartyLexicon) -> dict[str, tuple[str, ...]]:
    return {p: tuple(sorted(lexicon.terms(p).keywords)) for p in PARTIES}


def _party_tags(lexicon: PartyLexicon) -> dict[str, tuple[str, ...]]:
    return {p: tuple(sorted(lexicon.terms(p).hashtags)) for p in PARTIES}


def _pick(rng: np.random.Generator, pool: Sequence[str]) -> str:
    return pool[int(rng.integers(len(pool)))]


def _topic_party(rng: np.random.Generator, own: str) -> str:
    """The party a political token talks about; usually the author's own."""
    if rng.random() < _OWN_PARTY_SHARE:
        return own
    others = [p for p in PARTIES if p != own]
    return others[int(rng.integers(len(others)))]


def generate_corpus(spec: SyntheticSpec) -> SyntheticCorpus:
    """Build tweets, profiles, and annotations for one spec.

    Layout per user: ``tweets_per_user`` tweets of about eight tokens.
    Each tweet is, with probability ``p_intra``, an interaction with a
    same-party member (seed accounts included), with probability
    ``p_cross`` an interaction across parties, otherwise plain text.
    Tokens are political with the party's ``vocab_skew`` probability.
    """
    lexicon = default_lexicon()
    words = _party_vocab(lexicon)
    tags = _party_tags(lexicon)
    seed_map = lexicon.seed_party_map()
    seeds_of = {
        p: tuple(sorted(lexicon.terms(p).seed_accounts)) for p in PARTIES
    }

    users: list[tuple[str, str]] = []  # (screen_name, party)
    for party in PARTIES:
        for i in range(spec.users_per_party[party]):
            users.append((f"{party.lower()}_user{i:03d}", party))
    party_of = dict(users)
    members = {
        p: tuple(n for n, q in users if q == p) + seeds_of[p] for p in PARTIES
    }

    content = np.random.default_rng((spec.rng_seed & _SEED_MASK, _CONTENT_STREAM))
    interact = np.random.default_rng((spec.rng_seed & _SEED_MASK, _INTERACT_STREAM))
    profile_rng = np.random.default_rng((spec.rng_seed & _SEED_MASK, _PROFILE_STREAM))
    annotate = np.random.default_rng((spec.rng_seed & _SEED_MASK, _ANNOTATE_STREAM))

    tweets: list[Tweet] = []
    counter = 0
    for user_index, (name, party) in enumerate(users):
        skew = spec.vocab_skew[party]
        for _ in range(spec.tweets_per_user):
            parts: list[str] = []
            mentions: list[str] = []
            retweet_of = None

            roll = interact.random()
            if roll < spec.p_intra + spec.p_cross:
                if roll < spec.p_intra:
                    pool = [m for m in members[party] if m != name]
                else:
                    pool = [
                        m for p in PARTIES if p != party for m in members[p]
                    ]
                target = _pick(interact, pool)
                if interact.random() < 0.5:
                    retweet_of = target
                    parts.append("rt")
                parts.append(f"@{target}")
                mentions.append(target)

            hashtags: list[str] = []
            for _ in range(8):
                if content.random() < skew:
                    topic = _topic_party(content, party)
                    if content.random() < 0.25:
                        tag = _pick(content, tags[topic])
                        parts.append(f"#{tag}")
                        hashtags.append(tag)
                    else:
                        parts.append(_pick(content, words[topic]))
                else:
                    parts.append(_pick(content, _NEUTRAL_WORDS))
            if content.random() < 0.1:
                tag = _pick(content, _NEUTRAL_TAGS)
                parts.append(f"#{tag}")
                hashtags.append(tag)

            created = _EPOCH + timedelta(minutes=7 * counter)
            tweets.append(
                Tweet(
                    tweet_id=str(500000 + counter),
                    author_id=str(1000 + user_index),
                    author_screen_name=name,
                    created_at=created,
                    text=" ".join(parts),
                    hashtags=tuple(dict.fromkeys(hashtags)),
                    mentions=tuple(dict.fromkeys(mentions)),
                    retweet_of=retweet_of,
                )
            )
            counter += 1

    profiles: list[UserProfile] = []
    for idx, (name, party) in enumerate(users):
        following = {
            s for s in seeds_of[party] if profile_rng.random() < 0.85
        }
        for other in PARTIES:
            if other != party:
                for s in seeds_of[other]:
                    if profile_rng.random() < 0.03:
                        following.add(s)
        profiles.append(
            UserProfile(
                user_id=str(1000 + idx),
                screen_name=name,
                followers_count=int(profile_rng.integers(20, 3000)),
                friends_count=int(profile_rng.integers(20, 1500)),
                statuses_count=spec.tweets_per_user,
                following=frozenset(following),
                location=_LOCATIONS[idx % len(_LOCATIONS)],
            )
        )
    for j, (seed, party) in enumerate(sorted(seed_map.items())):
        profiles.append(
            UserProfile(
                user_id=str(50 + j),
                screen_name=seed,
                followers_count=int(profile_rng.integers(100000, 5000000)),
                friends_count=int(profile_rng.integers(10, 500)),
                statuses_count=int(profile_rng.integers(1000, 20000)),
                following=frozenset(),
                location="India",
            )
        )

    annotations: list[Annotation] = []
    for name, party in users:
        true_pro = party
        true_anti = _OPPONENT[party]
        for a in range(spec.n_annotators):
            pro, anti = true_pro, true_anti
            if annotate.random() < spec.annotator_noise:
                pro = _pick(annotate, [lab for lab in LABELS if lab != true_pro])
            if annotate.random() < spec.annotator_noise:
                anti = _pick(annotate, [lab for lab in LABELS if lab != true_anti])
            annotations.append(
                Annotation(
                    user_id=name,
                    annotator_id=f"annotator{a + 1}",
                    pro=pro,
                    anti=anti,
                )
            )

    return SyntheticCorpus(
        tweets=tuple(tweets),
        profiles=tuple(profiles),
        annotations=tuple(annotations),
        truth=dict(users),
        spec=spec,
    )


def write_synthetic(
    spec: SyntheticSpec,
    corpus_path: str | Path,
    annotations_path: str | Path,
) -> SyntheticCorpus:
    """Generate and write corpus JSONL plus annotations CSV."""
    data = generate_corpus(spec)
    write_corpus(corpus_path, data.tweets, data.profiles)
    write_annotations(annotations_path, data.annotations)
    return data


def planted_partition_graph(
    block_sizes: Sequence[int],
    p_in: float,
    p_out: float,
    rng_seed: int = 0,
) -> tuple[InteractionGraph, dict[str, int]]:
    """Random graph with dense blocks and sparse cross-block edges.

    Returns the graph and the planted block id per node. Cross-block
    edges are drawn by binomial count then uniform placement, so large
    sparse graphs stay cheap to build.
    """
    if not block_sizes:
        raise SynthError("need at least one block")
    if any(size < 1 for size in block_sizes):
        raise SynthError("block sizes must be >= 1")
    _check_prob("p_in", p_in)
    _check_prob("p_out", p_out)

    n = sum(block_sizes)
    width = len(str(n - 1))
    names = [f"n{i:0{width}d}" for i in range(n)]

    starts: list[int] = []
    offset = 0
    membership: dict[str, int] = {}
    for b, size in enumerate(block_sizes):
        starts.append(offset)
        for i in range(offset, offset + size):
            membership[names[i]] = b
        offset += size

    rng = np.random.default_rng((rng_seed & _SEED_MASK, 7100))
    edges: list[tuple[str, str]] = []

    for b, size in enumerate(block_sizes):
        base = starts[b]
        if size < 2:
            continue
        draws = rng.random((size, size))
        upper = np.triu_indices(size, k=1)
        hit = draws[upper] < p_in
        for i, j in zip(upper[0][hit], upper[1][hit]):
            edges.append((names[base + int(i)], names[base + int(j)]))

    if p_out > 0.0:
        for a in range(len(block_sizes)):
            for b in range(a + 1, len(block_sizes)):
                n_pairs = block_sizes[a] * block_sizes[b]
                k = int(rng.binomial(n_pairs, p_out))
                if k == 0:
                    continue
                flat = rng.choice(n_pairs, size=k, replace=False)
                for pair in np.sort(flat):
                    i, j = divmod(int(pair), block_sizes[b])
                    edges.append((names[starts[a] + i], names[starts[b] + j]))

    edges = sorted(set(edges))
    graph = InteractionGraph(
        nodes=tuple(names),
        edges=tuple(edges),
        weights=tuple(1.0 for _ in edges),
    )
    return graph, membership
