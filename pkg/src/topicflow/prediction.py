"""Early-window virality prediction: features, linear combiners, ROC/AUC.

For each emergent hashtag and early window we compute adopter-side and
co-tag-side features, rank hashtags by a feature (or a least-squares
linear combination), label the top popularity percentile viral, and
score the ranking by tie-corrected AUC over a grid of windows and
thresholds.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Mapping, Sequence

import numpy as np

from .cooccurrence import TagTable
from .diversity import entropy, topic_histogram
from .emergent import EmergentSet, HashtagTimeline, early_adopters, early_cotags
from .influence import UserProfile, zscore
from .topics import TopicModel

ADOPTER_FEATURES = ("n", "fol", "twt", "H1")
COTAG_FEATURES = ("m", "T", "A", "H2")
DEFAULT_FEATURE_SPECS = ("n", "fol", "twt", "H1", "n+fol", "n+twt", "n+H1",
                         "m", "T", "A", "H2", "m+T", "m+A", "m+H2")


@dataclass(frozen=True)
class AdopterFeatures:
    """Early-adopter aggregates; means are over available values only."""

    n: int
    mean_fol: float
    mean_twt: float
    mean_H1: float | None


@dataclass(frozen=True)
class CotagFeatures:
    """Early co-tag aggregates; H2 is absent when no co-tags were seen."""

    m: int
    T: int
    A: int
    H2: float | None


@dataclass(frozen=True)
class LabeledInstance:
    """One emergent hashtag at one window, with per-threshold viral labels."""

    hashtag: str
    window_hours: float
    features: Mapping[str, float | None]
    final_popularity: int
    labels: Mapping[float, int]


@dataclass(frozen=True)
class RocResult:
    points: tuple[tuple[float, float], ...]
    auc: float


@dataclass(frozen=True)
class Combiner:
    """Least-squares weights over z-scored features; score = dot product."""

    feature_names: tuple[str, ...]
    weights: tuple[float, ...]
    intercept: float
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def score(self, features: Mapping[str, float | None]) -> float:
        s = self.intercept
        for name, w, mu, sd in zip(self.feature_names, self.weights,
                                   self.means, self.stds):
            value = features[name]
            if value is None:
                raise ValueError(f"feature {name} absent; cannot score")
            s += w * (value - mu) / sd
        return s


def adopter_features(timeline: HashtagTimeline, window_hours: float,
                     profiles: Mapping[str, UserProfile]) -> AdopterFeatures:
    """Aggregate follower/activity/diversity means over the early adopters.

    Users without a profile contribute zero followers and tweets (they
    produced nothing in the observation period); users with no hashtag
    history are excluded from the diversity mean only.
    """
    adopters = early_adopters(timeline, window_hours)
    if not adopters:
        raise ValueError("timeline has no adoption inside the window")
    fols, twts, h1s = [], [], []
    for user in adopters:
        prof = profiles.get(user)
        fols.append(prof.fol if prof else 0)
        twts.append(prof.twt if prof else 0)
        if prof is not None and prof.h1 is not None:
            h1s.append(prof.h1)
    n = len(adopters)
    mean_h1 = sum(h1s) / len(h1s) if h1s else None
    return AdopterFeatures(n, sum(fols) / n, sum(twts) / n, mean_h1)


def cotag_features(timeline: HashtagTimeline, window_hours: float,
                   table: TagTable, model: TopicModel) -> CotagFeatures:
    """Count and popularity totals of the distinct early co-tags, plus H2."""
    seq, m = early_cotags(timeline, window_hours)
    total_msgs = 0
    total_adopters = 0
    for tag in sorted(set(seq)):
        tag_id = table.id_of(tag)
        if tag_id is not None:
            total_msgs += table.usage_counts[tag_id]
            total_adopters += table.distinct_users[tag_id]
    h2 = entropy(topic_histogram(seq, model)) if seq else None
    return CotagFeatures(m, total_msgs, total_adopters, h2)


def viral_cutoff(popularities: Sequence[int], threshold_pct: float) -> int:
    """Nearest-rank popularity cutoff: the top threshold_pct% are viral."""
    if not 0 < threshold_pct < 100:
        raise ValueError("threshold percentile must be in (0, 100)")
    if not popularities:
        raise ValueError("no popularities to rank")
    ordered = sorted(popularities, reverse=True)
    k = math.ceil(threshold_pct / 100.0 * len(ordered))
    return ordered[k - 1]


def build_instances(es: EmergentSet, window_hours: float,
                    profiles: Mapping[str, UserProfile],
                    table: TagTable, model: TopicModel,
                    thresholds: Sequence[float]) -> list[LabeledInstance]:
    """Feature vectors for every emergent hashtag at one window.

    Viral labels are fixed by the popularity distribution over the whole
    emergent set (ties at the cutoff are all viral), so they do not
    depend on the window or on later splits.
    """
    popularity = es.final_popularity
    cutoffs = {pct: viral_cutoff(list(popularity.values()), pct)
               for pct in thresholds}
    instances = []
    for tag in sorted(es.timelines):
        timeline = es.timelines[tag]
        af = adopter_features(timeline, window_hours, profiles)
        cf = cotag_features(timeline, window_hours, table, model)
        features: dict[str, float | None] = {
            "n": float(af.n), "fol": af.mean_fol, "twt": af.mean_twt,
            "H1": af.mean_H1,
            "m": float(cf.m), "T": float(cf.T), "A": float(cf.A), "H2": cf.H2,
        }
        pop = popularity[tag]
        labels = {pct: int(pop >= cutoffs[pct]) for pct in thresholds}
        instances.append(LabeledInstance(tag, window_hours, features, pop, labels))
    return instances


def fit_combiner(instances: Sequence[LabeledInstance],
                 feature_names: Sequence[str],
                 threshold_pct: float) -> Combiner:
    """OLS of the 0/1 viral label on z-scored features, intercept included."""
    labeled = [inst for inst in instances
               if all(inst.features.get(f) is not None for f in feature_names)]
    if len({inst.labels[threshold_pct] for inst in labeled}) < 2:
        raise ValueError("training set needs both labels present")
    y = np.array([inst.labels[threshold_pct] for inst in labeled], dtype=float)
    cols, means, stds = [], [], []
    for name in feature_names:
        raw = np.array([inst.features[name] for inst in labeled], dtype=float)
        z = zscore(raw, name=name)
        cols.append(z)
        means.append(float(raw.mean()))
        stds.append(float(raw.std(ddof=1)))
    design = np.column_stack([np.ones(len(labeled))] + cols)
    # rank walk names the first feature that adds no new direction
    rank = 1
    for idx in range(1, design.shape[1]):
        new_rank = np.linalg.matrix_rank(design[:, :idx + 1])
        if new_rank == rank:
            raise ValueError(
                f"singular design: feature {feature_names[idx - 1]} is "
                "collinear with the preceding columns")
        rank = new_rank
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return Combiner(tuple(feature_names), tuple(float(c) for c in coef[1:]),
                    float(coef[0]), tuple(means), tuple(stds))


def rank_and_label(instances: Sequence[LabeledInstance],
                   score_fn: Callable[[LabeledInstance], float],
                   threshold_pct: float) -> list[tuple[str, float, int]]:
    """Rank descending by score (ties by hashtag string) and pair with labels."""
    rows = [(inst.hashtag, float(score_fn(inst)), inst.labels[threshold_pct])
            for inst in instances]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def roc_auc(ranked: Sequence[tuple[str, float, int]]) -> RocResult:
    """Tie-corrected AUC and the stepped ROC points of a ranked labeling.

    AUC is the Mann-Whitney statistic (concordant + half the tied pairs
    over positives x negatives); tied scores form single diagonal
    segments so the trapezoid area over the points is the same number.
    """
    n_pos = sum(1 for _, _, label in ranked if label == 1)
    n_neg = len(ranked) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    tp = fp = 0
    concordant = 0.0
    i = 0
    rows = sorted(ranked, key=lambda r: -r[1])
    while i < len(rows):
        j = i
        group_pos = group_neg = 0
        while j < len(rows) and rows[j][1] == rows[i][1]:
            if rows[j][2] == 1:
                group_pos += 1
            else:
                group_neg += 1
            j += 1
        # positives in this group beat all lower-scored negatives and tie
        # with the negatives in the group
        concordant += group_pos * (n_neg - fp - group_neg)
        concordant += 0.5 * group_pos * group_neg
        tp += group_pos
        fp += group_neg
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return RocResult(tuple(points), concordant / (n_pos * n_neg))


def trapezoid_area(points: Sequence[tuple[float, float]]) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def split_by_tag_hash(instances: Sequence[LabeledInstance]
                      ) -> tuple[list[LabeledInstance], list[LabeledInstance]]:
    """Deterministic 50/50 split on a stable hash of the hashtag."""
    train, test = [], []
    for inst in instances:
        digest = hashlib.md5(inst.hashtag.encode("utf-8")).digest()
        (train if digest[0] % 2 == 0 else test).append(inst)
    return train, test


@dataclass(frozen=True)
class GridCell:
    feature_spec: str
    window_hours: float
    threshold_pct: float
    auc: float | None
    n_pos: int
    n_neg: int
    error: str | None = None


def _evaluate_cell(instances: Sequence[LabeledInstance], spec: str,
                   threshold_pct: float, in_sample: bool) -> GridCell:
    window = instances[0].window_hours if instances else 0.0
    names = spec.split("+")
    usable = [inst for inst in instances
              if all(inst.features.get(f) is not None for f in names)]
    try:
        if len(names) == 1:
            scored = usable
            score_fn = lambda inst: inst.features[names[0]]  # noqa: E731
        else:
            if in_sample:
                train = scored = usable
            else:
                train, scored = split_by_tag_hash(usable)
            combiner = fit_combiner(train, names, threshold_pct)
            score_fn = lambda inst: combiner.score(inst.features)  # noqa: E731
        ranked = rank_and_label(scored, score_fn, threshold_pct)
        result = roc_auc(ranked)
    except ValueError as exc:
        return GridCell(spec, window, threshold_pct, None, 0, 0, str(exc))
    n_pos = sum(1 for _, _, label in ranked if label == 1)
    return GridCell(spec, window, threshold_pct, result.auc,
                    n_pos, len(ranked) - n_pos)


def run_grid(es: EmergentSet, profiles: Mapping[str, UserProfile],
             table: TagTable, model: TopicModel,
             windows: Sequence[float] = (1.0, 6.0, 24.0),
             thresholds: Sequence[float] = (50.0, 10.0, 1.0, 0.1),
             feature_specs: Sequence[str] = DEFAULT_FEATURE_SPECS,
             in_sample: bool = False,
             threads: int = 1) -> list[GridCell]:
    """Evaluate every (feature spec, window, threshold) cell.

    Failed cells (one-class labels, singular designs) are emitted with a
    None AUC rather than aborting the grid.
    """
    by_window = {w: build_instances(es, w, profiles, table, model, thresholds)
                 for w in windows}
    tasks = [(by_window[w], spec, pct, in_sample)
             for spec in feature_specs for w in windows for pct in thresholds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda args: _evaluate_cell(*args), tasks))
    return [_evaluate_cell(*args) for args in tasks]


def write_grid_tsv(cells: Iterable[GridCell], sink: IO[str]) -> None:
    sink.write("feature\twindow_h\tthreshold_pct\tauc\tn_pos\tn_neg\n")
    for cell in cells:
        auc = "NA" if cell.auc is None else f"{cell.auc:.4f}"
        sink.write(f"{cell.feature_spec}\t{cell.window_hours:g}\t"
                   f"{cell.threshold_pct:g}\t{auc}\t{cell.n_pos}\t{cell.n_neg}\n")
