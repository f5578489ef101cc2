"""Corpus ingestion and text normalization.

A corpus is a JSON Lines file mixing two record kinds, distinguished by a
``kind`` field:

* ``tweet``: id, author, RFC 3339 ``created_at``, text, optional hashtag and
  mention lists, optional ``retweet_of`` screen name, optional ``geo``.
* ``profile``: user id, screen name, follower/friend/status counts, optional
  ``following`` list of screen names, optional ``location``.

All screen names, hashtags, and mentions are lowercased at ingestion; stored
hashtags carry no leading ``#`` and mentions no ``@``. Timestamps are
normalized to UTC with second precision. ``write_corpus`` emits a canonical
byte form (sorted keys, compact separators, ``Z``-suffixed timestamps) so
that writing a parsed corpus and re-parsing it is lossless.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

__all__ = [
    "CorpusError",
    "DEFAULT_STOPWORDS",
    "Stoplist",
    "Tweet",
    "UserProfile",
    "canonical_dumps",
    "extract_entities",
    "format_timestamp",
    "parse_corpus",
    "parse_rfc3339",
    "tokenize",
    "write_corpus",
]

# Tokens dropped everywhere: the retweet marker, the HTML ampersand residue,
# and the three highest-frequency Hindi particles seen in election tweets.
DEFAULT_STOPWORDS = frozenset({"rt", "amp", "ka", "ke", "ki"})

_HASHTAG_RE = re.compile(r"#(\w+)")
_MENTION_RE = re.compile(r"@(\w+)")
_URL_PREFIXES = ("http", "www.")


class CorpusError(ValueError):
    """Raised for unreadable or inconsistent corpus data."""


class _Malformed(Exception):
    """Internal: one record failed validation (message says why)."""


@dataclass(frozen=True)
class Tweet:
    """One tweet, normalized. ``retweet_of`` is never the author herself."""

    tweet_id: str
    author_id: str
    author_screen_name: str
    created_at: datetime
    text: str
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    retweet_of: str | None = None
    geo: tuple[float, float] | None = None


@dataclass(frozen=True)
class UserProfile:
    """One user profile; ``following`` holds lowercased screen names."""

    user_id: str
    screen_name: str
    followers_count: int
    friends_count: int
    statuses_count: int
    following: frozenset[str] = frozenset()
    location: str | None = None


@dataclass(frozen=True)
class Stoplist:
    """Lowercase words removed during tokenization."""

    words: frozenset[str]

    @classmethod
    def default(cls) -> "Stoplist":
        return cls(DEFAULT_STOPWORDS)

    @classmethod
    def from_file(cls, path: str | Path) -> "Stoplist":
        """Load one word per line; blank lines and ``#`` comments ignored."""
        words = set()
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            words.add(line.lower())
        return cls(frozenset(words))

    def extended(self, extra: Iterable[str]) -> "Stoplist":
        return Stoplist(self.words | {w.lower() for w in extra})


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into UTC at second precision.

    Accepts a trailing ``Z`` or a numeric offset; naive timestamps are
    rejected.
    """
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"unparseable timestamp {value!r}") from None
    if parsed.tzinfo is None:
        raise ValueError(f"timestamp {value!r} has no UTC offset")
    return parsed.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    """Render a UTC timestamp as ``YYYY-MM-DDTHH:MM:SSZ``."""
    if dt.tzinfo is None:
        raise ValueError("naive datetime cannot be formatted as RFC 3339")
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def extract_entities(text: str) -> tuple[list[str], list[str]]:
    """Pull (hashtags, mentions) out of raw tweet text.

    Entities are lowercased, markers stripped, order of first appearance
    kept, duplicates dropped.
    """
    hashtags = list(dict.fromkeys(m.lower() for m in _HASHTAG_RE.findall(text)))
    mentions = list(dict.fromkeys(m.lower() for m in _MENTION_RE.findall(text)))
    return hashtags, mentions


def _is_word_char(ch: str) -> bool:
    """True for alphanumerics and combining marks.

    Combining marks (category M*) count as word characters so that scripts
    like Devanagari, whose vowel signs are combining marks, do not lose
    letters to punctuation trimming.
    """
    return ch.isalnum() or unicodedata.category(ch).startswith("M")


def _trim_affixes(token: str) -> str:
    """Strip non-word characters from both ends of a token."""
    start, end = 0, len(token)
    while start < end and not _is_word_char(token[start]):
        start += 1
    while end > start and not _is_word_char(token[end - 1]):
        end -= 1
    return token[start:end]


def _stop_words(stoplist: Stoplist | Iterable[str] | None) -> frozenset[str]:
    if stoplist is None:
        return DEFAULT_STOPWORDS
    if isinstance(stoplist, Stoplist):
        return stoplist.words
    return frozenset(w.lower() for w in stoplist)


def tokenize(text: str, stoplist: Stoplist | Iterable[str] | None = None) -> list[str]:
    """Split tweet text into lowercase word tokens.

    Tokens are whitespace-separated. Hashtags, mentions, and URL-like tokens
    (prefix ``http`` or ``www.``) are dropped whole; remaining tokens are
    stripped of leading/trailing punctuation, and empty or stoplisted results
    are dropped. Unicode word characters survive, so Devanagari text
    tokenizes like Latin text.
    """
    words = _stop_words(stoplist)
    tokens = []
    for raw in text.split():
        low = raw.lower()
        if low[0] in "#@" or low.startswith(_URL_PREFIXES):
            continue
        word = _trim_affixes(low)
        if not word or word in words or word.startswith(_URL_PREFIXES):
            continue
        tokens.append(word)
    return tokens


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise _Malformed(message)


def _as_id(obj: dict, key: str) -> str:
    value = obj.get(key)
    if isinstance(value, int) and not isinstance(value, bool):
        value = str(value)
    _require(isinstance(value, str) and value != "", f"missing or empty {key!r}")
    return value


def _as_name(obj: dict, key: str) -> str:
    value = obj.get(key)
    _require(isinstance(value, str) and value != "", f"missing or empty {key!r}")
    return value.lower()


def _as_count(obj: dict, key: str) -> int:
    value = obj.get(key)
    _require(
        isinstance(value, int) and not isinstance(value, bool) and value >= 0,
        f"{key!r} must be a non-negative integer",
    )
    return value


def _entity_list(obj: dict, key: str, marker: str) -> tuple[str, ...] | None:
    """Normalize an explicit hashtag/mention list; None when absent."""
    if key not in obj:
        return None
    values = obj[key]
    _require(isinstance(values, list), f"{key!r} must be a list")
    out: list[str] = []
    for item in values:
        _require(isinstance(item, str), f"{key!r} entries must be strings")
        entity = item.lower()
        if entity.startswith(marker):
            entity = entity[len(marker):]
        _require(entity != "", f"empty entry in {key!r}")
        _require("#" not in entity and "@" not in entity, f"bad entry in {key!r}: {item!r}")
        if entity not in out:
            out.append(entity)
    return tuple(out)


def _parse_tweet(obj: dict) -> Tweet:
    tweet_id = _as_id(obj, "tweet_id")
    author_id = _as_id(obj, "author_id")
    author = _as_name(obj, "author_screen_name")
    try:
        created_at = parse_rfc3339(obj.get("created_at"))
    except ValueError as exc:
        raise _Malformed(str(exc)) from None
    text = obj.get("text")
    _require(isinstance(text, str), "missing 'text'")

    hashtags = _entity_list(obj, "hashtags", "#")
    mentions = _entity_list(obj, "mentions", "@")
    if hashtags is None or mentions is None:
        found_tags, found_mentions = extract_entities(text)
        if hashtags is None:
            hashtags = tuple(found_tags)
        if mentions is None:
            mentions = tuple(found_mentions)

    retweet_of = obj.get("retweet_of")
    if retweet_of is not None:
        _require(isinstance(retweet_of, str), "bad 'retweet_of'")
        retweet_of = retweet_of.lower().lstrip("@")
        _require(retweet_of != "", "bad 'retweet_of'")
        if retweet_of == author:
            retweet_of = None  # self-retweets carry no relation

    geo = obj.get("geo")
    if geo is not None:
        _require(isinstance(geo, dict) and set(geo) == {"lat", "lon"}, "bad 'geo'")
        lat, lon = geo["lat"], geo["lon"]
        _require(
            isinstance(lat, (int, float)) and isinstance(lon, (int, float)),
            "geo coordinates must be numbers",
        )
        _require(-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0, "geo out of range")
        geo = (float(lat), float(lon))

    return Tweet(
        tweet_id=tweet_id,
        author_id=author_id,
        author_screen_name=author,
        created_at=created_at,
        text=text,
        hashtags=hashtags,
        mentions=mentions,
        retweet_of=retweet_of,
        geo=geo,
    )


def _parse_profile(obj: dict) -> UserProfile:
    user_id = _as_id(obj, "user_id")
    screen_name = _as_name(obj, "screen_name")
    followers = _as_count(obj, "followers_count")
    friends = _as_count(obj, "friends_count")
    statuses = _as_count(obj, "statuses_count")

    following_raw = obj.get("following", [])
    _require(isinstance(following_raw, list), "'following' must be a list")
    following = set()
    for name in following_raw:
        _require(isinstance(name, str) and name != "", "'following' entries must be names")
        following.add(name.lower().lstrip("@"))

    location = obj.get("location")
    if location is not None:
        _require(isinstance(location, str), "'location' must be a string")

    return UserProfile(
        user_id=user_id,
        screen_name=screen_name,
        followers_count=followers,
        friends_count=friends,
        statuses_count=statuses,
        following=frozenset(following),
        location=location,
    )


def _physical_lines(data: bytes) -> Iterator[bytes]:
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()  # trailing newline does not open a new line
    return iter(lines)


def parse_corpus(
    path: str | Path,
    strictness: str = "skip-malformed",
) -> tuple[list[Tweet], list[UserProfile], int]:
    """Read a JSONL corpus; return (tweets, profiles, skipped_count).

    Every physical line is either parsed into a record or counted as
    skipped, so ``len(tweets) + len(profiles) + skipped == line count``.
    Under ``strict``, any malformed line (bad JSON, bad fields, duplicate
    tweet id or profile screen name) raises :class:`CorpusError`; blank
    lines are never an error, only skipped.
    """
    if strictness not in ("skip-malformed", "strict"):
        raise ValueError(f"unknown strictness {strictness!r}")
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc

    tweets: list[Tweet] = []
    profiles: list[UserProfile] = []
    skipped = 0
    seen_tweet_ids: set[str] = set()
    seen_screen_names: set[str] = set()

    for lineno, raw in enumerate(_physical_lines(data), start=1):
        if not raw.strip():
            skipped += 1
            continue
        try:
            obj = json.loads(raw.decode("utf-8"))
            _require(isinstance(obj, dict), "record is not an object")
            kind = obj.get("kind")
            if kind == "tweet":
                tweet = _parse_tweet(obj)
                _require(tweet.tweet_id not in seen_tweet_ids,
                         f"duplicate tweet_id {tweet.tweet_id!r}")
                seen_tweet_ids.add(tweet.tweet_id)
                tweets.append(tweet)
            elif kind == "profile":
                profile = _parse_profile(obj)
                _require(profile.screen_name not in seen_screen_names,
                         f"duplicate profile {profile.screen_name!r}")
                seen_screen_names.add(profile.screen_name)
                profiles.append(profile)
            else:
                raise _Malformed(f"unknown kind {kind!r}")
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            if strictness == "strict":
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            skipped += 1
        except _Malformed as exc:
            if strictness == "strict":
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            skipped += 1

    return tweets, profiles, skipped


def canonical_dumps(obj: object) -> str:
    """Serialize to the canonical JSON form used for all on-disk artifacts."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def tweet_record(tweet: Tweet) -> dict:
    record = {
        "kind": "tweet",
        "tweet_id": tweet.tweet_id,
        "author_id": tweet.author_id,
        "author_screen_name": tweet.author_screen_name,
        "created_at": format_timestamp(tweet.created_at),
        "text": tweet.text,
        "hashtags": list(tweet.hashtags),
        "mentions": list(tweet.mentions),
    }
    if tweet.retweet_of is not None:
        record["retweet_of"] = tweet.retweet_of
    if tweet.geo is not None:
        record["geo"] = {"lat": tweet.geo[0], "lon": tweet.geo[1]}
    return record


def profile_record(profile: UserProfile) -> dict:
    record = {
        "kind": "profile",
        "user_id": profile.user_id,
        "screen_name": profile.screen_name,
        "followers_count": profile.followers_count,
        "friends_count": profile.friends_count,
        "statuses_count": profile.statuses_count,
        "following": sorted(profile.following),
    }
    if profile.location is not None:
        record["location"] = profile.location
    return record


def write_corpus(
    path: str | Path,
    tweets: Sequence[Tweet],
    profiles: Sequence[UserProfile] = (),
) -> None:
    """Write records in canonical JSONL form (tweets first, then profiles)."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for tweet in tweets:
            handle.write(canonical_dumps(tweet_record(tweet)))
            handle.write("\n")
        for profile in profiles:
            handle.write(canonical_dumps(profile_record(profile)))
            handle.write("\n")
