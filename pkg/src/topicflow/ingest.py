"""Message-stream parsing, hashtag normalization, and period splitting.

Input is newline-delimited JSON, one message per line, with keys
``id``, ``user``, ``ts`` (epoch seconds), ``tags`` and optional ``rt_of``.
Malformed lines are skipped and counted, never fatal; only an unreadable
source raises.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence


@dataclass(frozen=True)
class MessageRecord:
    """One post: author, timestamp, normalized hashtags, optional repost source."""

    message_id: str
    author_id: str
    timestamp: int
    hashtags: tuple[str, ...]
    repost_of: str | None = None


@dataclass(frozen=True)
class PeriodSplit:
    """Observation/test period boundaries plus the emergent-birth cutoff.

    Observation is start-inclusive, end-exclusive; the test period is
    inclusive on both ends (the corpus stops at test_end).
    """

    observation_start: int
    observation_end: int
    test_start: int
    test_end: int
    first_week_end: int

    def __post_init__(self) -> None:
        ok = (self.observation_start < self.observation_end
              <= self.test_start < self.first_week_end <= self.test_end)
        if not ok:
            raise ValueError(
                "invalid period split: need observation_start < observation_end "
                "<= test_start < first_week_end <= test_end")


@dataclass(frozen=True)
class CorpusStats:
    n_messages: int
    n_messages_with_hashtags: int
    n_distinct_hashtags: int
    n_distinct_users: int


class StreamReadError(OSError):
    """Source became unreadable mid-stream; carries the byte offset reached."""

    def __init__(self, byte_offset: int, cause: Exception):
        super().__init__(f"unreadable input at byte offset {byte_offset}: {cause}")
        self.byte_offset = byte_offset


def normalize_hashtag(raw: str) -> str | None:
    """Normalize one hashtag token; return None to reject it.

    Lowercases, applies NFKC compatibility normalization, strips leading
    '#' and trailing punctuation. Empty results are rejected.
    """
    tag = raw.strip().lstrip("#")
    tag = unicodedata.normalize("NFKC", tag).lower()
    while tag and unicodedata.category(tag[-1]).startswith("P"):
        tag = tag[:-1]
    return tag or None


def _record_from_obj(obj: dict) -> MessageRecord | None:
    msg_id = obj.get("id")
    user = obj.get("user")
    ts = obj.get("ts")
    tags = obj.get("tags")
    if not isinstance(msg_id, str) or not msg_id:
        return None
    if not isinstance(user, str) or not user:
        return None
    if not isinstance(ts, int) or isinstance(ts, bool) or ts <= 0:
        return None
    if not isinstance(tags, list):
        return None
    rt_of = obj.get("rt_of")
    if rt_of is not None and not isinstance(rt_of, str):
        return None
    seen: dict[str, None] = {}
    for raw in tags:
        if not isinstance(raw, str):
            return None
        tag = normalize_hashtag(raw)
        if tag is not None:
            seen.setdefault(tag)
    return MessageRecord(msg_id, user, ts, tuple(seen), rt_of)


@dataclass
class ParseResult:
    records: list[MessageRecord]
    n_skipped: int


def parse_stream(source: IO[bytes], ignore_reposts: bool = False) -> ParseResult:
    """Parse an NDJSON byte stream into records, counting skipped lines.

    Hashtags are normalized and deduplicated within each message; records
    come out in input order. With ignore_reposts, repost records are
    dropped (and not counted as skipped -- they are valid, just excluded).
    """
    records: list[MessageRecord] = []
    n_skipped = 0
    offset = 0
    while True:
        try:
            line = source.readline()
        except OSError as exc:
            raise StreamReadError(offset, exc) from exc
        if not line:
            break
        offset += len(line)
        stripped = line.strip()
        if not stripped:
            n_skipped += 1
            continue
        try:
            obj = json.loads(stripped.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            n_skipped += 1
            continue
        if not isinstance(obj, dict):
            n_skipped += 1
            continue
        rec = _record_from_obj(obj)
        if rec is None:
            n_skipped += 1
            continue
        if ignore_reposts and rec.repost_of is not None:
            continue
        records.append(rec)
    return ParseResult(records, n_skipped)


def parse_file(path: str, ignore_reposts: bool = False) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_stream(fh, ignore_reposts=ignore_reposts)


def record_to_json(rec: MessageRecord) -> str:
    obj: dict = {"id": rec.message_id, "user": rec.author_id,
                 "ts": rec.timestamp, "tags": list(rec.hashtags)}
    if rec.repost_of is not None:
        obj["rt_of"] = rec.repost_of
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_stream(records: Iterable[MessageRecord], sink: IO[str]) -> None:
    for rec in records:
        sink.write(record_to_json(rec))
        sink.write("\n")


def split_periods(
    records: Iterable[MessageRecord], split: PeriodSplit
) -> tuple[list[MessageRecord], list[MessageRecord], int]:
    """Route records into (observation, test) by timestamp.

    Records outside both ranges are dropped; the drop count is returned
    as the third element.
    """
    observation: list[MessageRecord] = []
    test: list[MessageRecord] = []
    n_dropped = 0
    for rec in records:
        ts = rec.timestamp
        if split.observation_start <= ts < split.observation_end:
            observation.append(rec)
        elif split.test_start <= ts <= split.test_end:
            test.append(rec)
        else:
            n_dropped += 1
    return observation, test, n_dropped


def corpus_stats(records: Iterable[MessageRecord]) -> CorpusStats:
    """Exact counts over one record sequence (exact sets, no sketching)."""
    n_messages = 0
    n_with_tags = 0
    tags: set[str] = set()
    users: set[str] = set()
    for rec in records:
        n_messages += 1
        if rec.hashtags:
            n_with_tags += 1
            tags.update(rec.hashtags)
        users.add(rec.author_id)
    return CorpusStats(n_messages, n_with_tags, len(tags), len(users))


def iter_user_tag_usages(records: Iterable[MessageRecord]) -> Iterator[tuple[str, str]]:
    """Yield (author_id, hashtag) once per tag occurrence, in stream order."""
    for rec in records:
        for tag in rec.hashtags:
            yield rec.author_id, tag


def write_stats_tsv(rows: Sequence[tuple[str, CorpusStats]], sink: IO[str]) -> None:
    sink.write("period\tn_messages\tn_messages_with_hashtags\t"
               "n_distinct_hashtags\tn_distinct_users\n")
    for name, st in rows:
        sink.write(f"{name}\t{st.n_messages}\t{st.n_messages_with_hashtags}\t"
                   f"{st.n_distinct_hashtags}\t{st.n_distinct_users}\n")
