"""Topical-diversity entropies over topic clusters.

A user's diversity is the base-2 entropy of their hashtag usages across
topics; a hashtag's co-tag diversity applies the same entropy to the
sequence of other tags that co-occurred with it. Base 2 is what the
worked two-user comparison values imply; natural log does not reproduce
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .ingest import MessageRecord
from .topics import TopicId, TopicModel, assign_topic


@dataclass(frozen=True)
class TopicHistogram:
    """Counts of tag occurrences per topic; total is the sequence length."""

    counts: Mapping[TopicId, int]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.counts.values()):
            raise ValueError("histogram total does not match counts")


def topic_histogram(tag_sequence: Iterable[str], model: TopicModel) -> TopicHistogram:
    """Map each occurrence (with repetition) through the model and count."""
    counts: dict[TopicId, int] = {}
    total = 0
    for tag in tag_sequence:
        topic = assign_topic(model, tag)
        counts[topic] = counts.get(topic, 0) + 1
        total += 1
    return TopicHistogram(counts, total)


def entropy(h: TopicHistogram) -> float:
    """Base-2 entropy of the topic distribution; raises on an empty histogram."""
    if h.total < 1:
        raise ValueError("entropy undefined for an empty histogram")
    n = float(h.total)
    result = 0.0
    for c in h.counts.values():
        p = c / n
        result -= p * math.log2(p)
    return result


def user_diversity(user_id: str, records: Iterable[MessageRecord],
                   model: TopicModel) -> float | None:
    """Entropy over the user's hashtag occurrences; None if they used none."""
    tags = [tag for rec in records if rec.author_id == user_id
            for tag in rec.hashtags]
    if not tags:
        return None
    return entropy(topic_histogram(tags, model))


def all_user_diversities(
    records: Sequence[MessageRecord], model: TopicModel
) -> dict[str, tuple[int, int, float]]:
    """Per-user (n_usages, n_topics, H1) over one pass of the records.

    Users with no hashtag usage do not appear (absent, not zero).
    """
    sequences: dict[str, list[str]] = {}
    for rec in records:
        if rec.hashtags:
            sequences.setdefault(rec.author_id, []).extend(rec.hashtags)
    out: dict[str, tuple[int, int, float]] = {}
    for user, tags in sequences.items():
        hist = topic_histogram(tags, model)
        out[user] = (hist.total, len(hist.counts), entropy(hist))
    return out


def cotag_sequence(hashtag: str, records: Iterable[MessageRecord],
                   window: tuple[float, float] | None = None) -> list[str]:
    """Other-tag occurrences from messages containing the hashtag.

    The optional window is half-open: birth <= ts < end.
    """
    seq: list[str] = []
    for rec in records:
        if window is not None and not (window[0] <= rec.timestamp < window[1]):
            continue
        if hashtag in rec.hashtags:
            seq.extend(t for t in rec.hashtags if t != hashtag)
    return seq


def cotag_diversity(hashtag: str, records: Iterable[MessageRecord],
                    model: TopicModel,
                    window: tuple[float, float] | None = None) -> float | None:
    """Entropy over the hashtag's co-tag sequence; None if no co-tags observed."""
    seq = cotag_sequence(hashtag, records, window)
    if not seq:
        return None
    return entropy(topic_histogram(seq, model))


def write_user_diversity_tsv(
    rows: Mapping[str, tuple[int, int, float]], sink: IO[str]
) -> None:
    sink.write("user_id\tn_usages\tn_topics\tH1\n")
    for user in sorted(rows):
        n_usages, n_topics, h1 = rows[user]
        sink.write(f"{user}\t{n_usages}\t{n_topics}\t{h1:.4f}\n")
