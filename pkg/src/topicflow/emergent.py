"""Emergent-hashtag detection and adoption timelines.

An emergent hashtag never appears in the observation period, is born
(first containing message) before the first-week cutoff of the test
period, and gathers at least the minimum number of distinct adopters by
the end of the test period. All early windows are half-open
[birth, birth + t).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .ingest import MessageRecord, PeriodSplit


@dataclass(frozen=True)
class AdoptionEvent:
    timestamp: int
    user_id: str
    message_id: str


@dataclass(frozen=True)
class CoMentionEvent:
    timestamp: int
    other_tag: str


@dataclass(frozen=True)
class HashtagTimeline:
    """Adoption and co-mention events of one hashtag, sorted by time."""

    hashtag: str
    birth: int
    adoptions: tuple[AdoptionEvent, ...]
    co_mentions: tuple[CoMentionEvent, ...]


@dataclass(frozen=True)
class EmergentSet:
    """Hashtags passing the emergence rules, with timeline and popularity."""

    timelines: Mapping[str, HashtagTimeline]
    final_popularity: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.timelines)

    def __iter__(self):
        return iter(self.timelines)


def build_timelines(records: Iterable[MessageRecord]) -> dict[str, HashtagTimeline]:
    """Group messages by hashtag into sorted event timelines.

    Events tie-break on message id, so the birth message is the smallest
    id among the earliest; all messages at the birth timestamp are
    adoption events.
    """
    adoptions: dict[str, list[AdoptionEvent]] = {}
    co_mentions: dict[str, list[CoMentionEvent]] = {}
    for rec in records:
        for tag in rec.hashtags:
            adoptions.setdefault(tag, []).append(
                AdoptionEvent(rec.timestamp, rec.author_id, rec.message_id))
            if len(rec.hashtags) > 1:
                events = co_mentions.setdefault(tag, [])
                for other in rec.hashtags:
                    if other != tag:
                        events.append(CoMentionEvent(rec.timestamp, other))
    timelines: dict[str, HashtagTimeline] = {}
    for tag, events in adoptions.items():
        events.sort(key=lambda e: (e.timestamp, e.message_id))
        mentions = sorted(co_mentions.get(tag, ()),
                          key=lambda e: (e.timestamp, e.other_tag))
        timelines[tag] = HashtagTimeline(tag, events[0].timestamp,
                                         tuple(events), tuple(mentions))
    return timelines


def final_popularity(t: HashtagTimeline) -> int:
    """Distinct adopters over the full test period."""
    return len({e.user_id for e in t.adoptions})


def detect_emergent(observation: Iterable[MessageRecord],
                    test: Iterable[MessageRecord],
                    split: PeriodSplit,
                    min_adopters: int = 3) -> EmergentSet:
    """Apply the three emergence rules to the test-period timelines."""
    observed = {tag for rec in observation for tag in rec.hashtags}
    timelines = build_timelines(test)
    kept: dict[str, HashtagTimeline] = {}
    popularity: dict[str, int] = {}
    for tag, timeline in timelines.items():
        if tag in observed:
            continue
        if timeline.birth >= split.first_week_end:
            continue
        pop = final_popularity(timeline)
        if pop < min_adopters:
            continue
        kept[tag] = timeline
        popularity[tag] = pop
    return EmergentSet(kept, popularity)


def early_adopters(t: HashtagTimeline, window_hours: float) -> list[str]:
    """Distinct users adopting in [birth, birth + window), first-adoption order."""
    if window_hours <= 0:
        raise ValueError("window_hours must be > 0")
    end = t.birth + window_hours * 3600.0
    seen: dict[str, None] = {}
    for e in t.adoptions:
        if e.timestamp >= end:
            break
        seen.setdefault(e.user_id)
    return list(seen)


def early_cotags(t: HashtagTimeline, window_hours: float) -> tuple[list[str], int]:
    """Co-tag occurrence sequence in the early window and its distinct count."""
    if window_hours <= 0:
        raise ValueError("window_hours must be > 0")
    end = t.birth + window_hours * 3600.0
    seq = [e.other_tag for e in t.co_mentions if t.birth <= e.timestamp < end]
    return seq, len(set(seq))


def write_emergent_tsv(es: EmergentSet, sink: IO[str]) -> None:
    sink.write("tag\tbirth_ts\tfinal_adopters\n")
    for tag in sorted(es.timelines):
        t = es.timelines[tag]
        sink.write(f"{tag}\t{t.birth}\t{es.final_popularity[tag]}\n")
