"""User-level influence statistics: interestingness, OLS, Spearman, grids.

The retweet count is regressed on z-scored follower count, activity,
content interestingness and topical diversity; Spearman correlations are
computed inside activity or follower bins because diversity is biased by
activity. Interestingness divides retweets by tweets times followers,
treating the per-follower view probability as a global constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .ingest import MessageRecord


@dataclass(frozen=True)
class UserProfile:
    """Observation-period counters for one user; h1 is None when unknown."""

    user_id: str
    rt: int
    fol: int
    twt: int
    h1: float | None


@dataclass(frozen=True)
class RegressionTerm:
    name: str
    coef: float
    se: float
    t: float
    p: float


@dataclass(frozen=True)
class RegressionResult:
    terms: tuple[RegressionTerm, ...]   # intercept first
    n: int
    df_resid: int
    n_excluded: int = 0

    def term(self, name: str) -> RegressionTerm:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)


@dataclass(frozen=True)
class CorrelationSeries:
    """Per-bin Spearman rho over disjoint ordered bins; None marks NA bins."""

    bin_edges: tuple[float, ...]        # len = n_bins + 1
    rho: tuple[float | None, ...]
    n: tuple[int, ...]
    p: tuple[float | None, ...]


def interestingness(profile: UserProfile) -> float | None:
    """Per-view repost propensity proxy: rt / (twt * fol), absent on zeros."""
    if profile.twt <= 0 or profile.fol <= 0:
        return None
    return profile.rt / (profile.twt * profile.fol)


def zscore(values: Sequence[float] | np.ndarray, name: str = "column") -> np.ndarray:
    """Standardize to mean 0, sample (N-1) standard deviation 1."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise ValueError(f"column {name}: need at least 2 values to z-score")
    sd = arr.std(ddof=1)
    if sd == 0:
        raise ValueError(f"column {name}: zero variance, cannot z-score")
    return (arr - arr.mean()) / sd


def ols_fit(design: Mapping[str, np.ndarray],
            response: Sequence[float] | np.ndarray,
            n_excluded: int = 0) -> RegressionResult:
    """Least squares with intercept; SEs from the residual variance.

    Columns are expected pre-standardized (the caller owns scaling);
    the response stays in its raw units. Two-sided p-values come from
    the t distribution with N - k - 1 degrees of freedom.
    """
    names = list(design)
    y = np.asarray(response, dtype=float)
    n = y.size
    k = len(names)
    if n <= k + 1:
        raise ValueError(f"need more than {k + 1} rows to fit {k} features")
    x = np.column_stack([np.ones(n)] + [np.asarray(design[m], float) for m in names])
    rank = 1
    for idx in range(1, x.shape[1]):
        new_rank = np.linalg.matrix_rank(x[:, :idx + 1])
        if new_rank == rank:
            raise ValueError(f"singular design: column {names[idx - 1]} is "
                             "collinear with the preceding columns")
        rank = new_rank
    xtx = x.T @ x
    coef = np.linalg.solve(xtx, x.T @ y)
    resid = y - x @ coef
    df = n - k - 1
    sigma2 = float(resid @ resid) / df
    cov = sigma2 * np.linalg.inv(xtx)
    se = np.sqrt(np.diag(cov))
    tvals = coef / se
    pvals = 2.0 * stats.t.sf(np.abs(tvals), df)
    terms = tuple(
        RegressionTerm(nm, float(c), float(s), float(t), float(p))
        for nm, c, s, t, p in zip(["(Intercept)"] + names, coef, se, tvals, pvals))
    return RegressionResult(terms, n, df, n_excluded)


def _midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing the mean of their run."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman rho as the Pearson correlation of mid-ranks, with t-approx p."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.size != ya.size:
        raise ValueError("paired columns must have equal length")
    n = xa.size
    if n < 3:
        raise ValueError("spearman needs at least 3 pairs")
    rx = _midranks(xa)
    ry = _midranks(ya)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        raise ValueError("zero rank variance in one of the columns")
    rho = float(dx @ dy) / denom
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return rho, p


def log10_bin_edges(values: Sequence[float], n_bins: int) -> tuple[float, ...]:
    """Base-10 logarithmic edges spanning the positive values."""
    positive = [v for v in values if v > 0]
    if not positive:
        raise ValueError("no positive values to bin")
    lo, hi = min(positive), max(positive)
    if lo == hi:
        hi = lo * 10.0
    return tuple(np.logspace(math.log10(lo), math.log10(hi), n_bins + 1))


def _bin_index(value: float, edges: Sequence[float]) -> int | None:
    """Half-open bins [e_i, e_i+1), last bin closed on the right."""
    if value < edges[0] or value > edges[-1]:
        return None
    for i in range(len(edges) - 1):
        if value < edges[i + 1]:
            return i
    return len(edges) - 2


def _field(profile: UserProfile, name: str) -> float | None:
    if name == "beta":
        return interestingness(profile)
    if name == "H1":
        return profile.h1
    value = getattr(profile, name.lower())
    return float(value)


def binned_correlation(profiles: Iterable[UserProfile], bin_by: str,
                       x: str, y: str, n_bins: int = 10,
                       min_count: int = 30) -> CorrelationSeries:
    """Spearman(x, y) inside log-spaced bins of bin_by; small bins are NA.

    Users with a nonpositive bin_by value or an absent x/y value are
    excluded (log bins need positive support; absents carry no rank).
    """
    if bin_by not in ("twt", "fol"):
        raise ValueError("bin_by must be 'twt' or 'fol'")
    rows = []
    for prof in profiles:
        b = _field(prof, bin_by)
        xv = _field(prof, x)
        yv = _field(prof, y)
        if b is None or b <= 0 or xv is None or yv is None:
            continue
        rows.append((b, xv, yv))
    if not rows:
        raise ValueError("no usable rows for binned correlation")
    edges = log10_bin_edges([r[0] for r in rows], n_bins)
    grouped: list[list[tuple[float, float]]] = [[] for _ in range(n_bins)]
    for b, xv, yv in rows:
        idx = _bin_index(b, edges)
        if idx is not None:
            grouped[idx].append((xv, yv))
    rhos: list[float | None] = []
    ns: list[int] = []
    ps: list[float | None] = []
    for pairs in grouped:
        ns.append(len(pairs))
        if len(pairs) < min_count:
            rhos.append(None)
            ps.append(None)
            continue
        try:
            rho, p = spearman([a for a, _ in pairs], [b for _, b in pairs])
        except ValueError:
            rhos.append(None)
            ps.append(None)
            continue
        rhos.append(rho)
        ps.append(p)
    return CorrelationSeries(edges, tuple(rhos), tuple(ns), tuple(ps))


HEATMAP_STATS = ("count", "mean_twt", "mean_rt", "mean_beta")


@dataclass(frozen=True)
class HeatmapGrid:
    stat: str
    h1_edges: tuple[float, ...]
    fol_edges: tuple[float, ...]
    values: tuple[tuple[float | None, ...], ...]   # [h1 bin][fol bin]


def heatmap_grid(profiles: Iterable[UserProfile], stat: str,
                 n_h1_bins: int = 20, n_fol_bins: int = 20) -> HeatmapGrid:
    """2-D binning: linear in diversity, logarithmic in followers.

    Empty cells carry count 0 or a None mean. Users without an H1 or
    with zero followers fall outside the grid.
    """
    if stat not in HEATMAP_STATS:
        raise ValueError(f"unknown heatmap statistic: {stat}")
    rows = [p for p in profiles if p.h1 is not None and p.fol > 0]
    if not rows:
        raise ValueError("no users with both H1 and positive followers")
    h1_max = max(p.h1 for p in rows)
    h1_edges = tuple(np.linspace(0.0, h1_max if h1_max > 0 else 1.0,
                                 n_h1_bins + 1))
    fol_edges = log10_bin_edges([p.fol for p in rows], n_fol_bins)
    cells: list[list[list[UserProfile]]] = [
        [[] for _ in range(n_fol_bins)] for _ in range(n_h1_bins)]
    for prof in rows:
        i = _bin_index(prof.h1, h1_edges)
        j = _bin_index(prof.fol, fol_edges)
        if i is not None and j is not None:
            cells[i][j].append(prof)
    values: list[tuple[float | None, ...]] = []
    for row in cells:
        out_row: list[float | None] = []
        for members in row:
            if stat == "count":
                out_row.append(float(len(members)))
            elif not members:
                out_row.append(None)
            elif stat == "mean_twt":
                out_row.append(sum(p.twt for p in members) / len(members))
            elif stat == "mean_rt":
                out_row.append(sum(p.rt for p in members) / len(members))
            else:
                betas = [b for b in (interestingness(p) for p in members)
                         if b is not None]
                out_row.append(sum(betas) / len(betas) if betas else None)
        values.append(tuple(out_row))
    return HeatmapGrid(stat, h1_edges, fol_edges, tuple(values))


def build_profiles(observation: Iterable[MessageRecord],
                   h1_by_user: Mapping[str, float],
                   followers: Mapping[str, int]) -> dict[str, UserProfile]:
    """Compose profiles from the observation stream plus follower counts.

    twt counts every message the user authored (reposts included); rt
    counts messages whose repost source names the user, which is
    cascade-inclusive when repost records point at the cascade root.
    """
    twt: dict[str, int] = {}
    rt: dict[str, int] = {}
    for rec in observation:
        twt[rec.author_id] = twt.get(rec.author_id, 0) + 1
        if rec.repost_of is not None:
            rt[rec.repost_of] = rt.get(rec.repost_of, 0) + 1
    users = set(twt) | set(rt) | set(followers)
    return {
        user: UserProfile(user, rt.get(user, 0), followers.get(user, 0),
                          twt.get(user, 0), h1_by_user.get(user))
        for user in sorted(users)
    }


def sample_profiles(profiles: Mapping[str, UserProfile], frac: float,
                    seed: int) -> list[UserProfile]:
    """Seeded random user sample (the reported regressions used 10%)."""
    if not 0 < frac <= 1:
        raise ValueError("sample fraction must be in (0, 1]")
    users = sorted(profiles)
    if frac == 1.0:
        return [profiles[u] for u in users]
    rng = np.random.default_rng(seed)
    n = max(1, int(round(frac * len(users))))
    picked = rng.choice(len(users), size=n, replace=False)
    return [profiles[users[i]] for i in sorted(picked)]


def regress_influence(profiles: Iterable[UserProfile]) -> RegressionResult:
    """Table-6-style regression: raw RT on z-scored fol, twt, beta, H1.

    Users with an absent beta or H1 are excluded listwise; the exclusion
    count is carried on the result.
    """
    rows = []
    n_total = 0
    for prof in profiles:
        n_total += 1
        beta = interestingness(prof)
        if beta is None or prof.h1 is None:
            continue
        rows.append((prof.rt, prof.fol, prof.twt, beta, prof.h1))
    if len(rows) < 6:
        raise ValueError("too few complete profiles to regress")
    rt = np.array([r[0] for r in rows], dtype=float)
    design = {
        "fol": zscore(np.array([r[1] for r in rows], float), "fol"),
        "twt": zscore(np.array([r[2] for r in rows], float), "twt"),
        "beta": zscore(np.array([r[3] for r in rows], float), "beta"),
        "H1": zscore(np.array([r[4] for r in rows], float), "H1"),
    }
    return ols_fit(design, rt, n_excluded=n_total - len(rows))


def write_regression_tsv(result: RegressionResult, sink: IO[str]) -> None:
    sink.write("variable\tcoef\tse\tt\tp\n")
    for term in result.terms:
        sink.write(f"{term.name}\t{term.coef:.1f}\t{term.se:.1f}\t"
                   f"{term.t:.2f}\t{term.p:.3g}\n")


def write_correlation_tsv(series: CorrelationSeries, sink: IO[str]) -> None:
    sink.write("bin_lo\tbin_hi\tn\trho\tp\n")
    for i in range(len(series.n)):
        rho = "NA" if series.rho[i] is None else f"{series.rho[i]:.4f}"
        p = "NA" if series.p[i] is None else f"{series.p[i]:.3g}"
        sink.write(f"{series.bin_edges[i]:.6g}\t{series.bin_edges[i + 1]:.6g}\t"
                   f"{series.n[i]}\t{rho}\t{p}\n")


def write_heatmap_tsv(grid: HeatmapGrid, sink: IO[str]) -> None:
    sink.write("h1_lo\th1_hi\tfol_lo\tfol_hi\tvalue\n")
    for i, row in enumerate(grid.values):
        for j, value in enumerate(row):
            rendered = "NA" if value is None else f"{value:.4f}"
            sink.write(f"{grid.h1_edges[i]:.6g}\t{grid.h1_edges[i + 1]:.6g}\t"
                       f"{grid.fol_edges[j]:.6g}\t{grid.fol_edges[j + 1]:.6g}\t"
                       f"{rendered}\n")


def write_profiles_tsv(profiles: Mapping[str, UserProfile], sink: IO[str]) -> None:
    sink.write("user_id\trt\tfol\ttwt\th1\tbeta\n")
    for user in sorted(profiles):
        prof = profiles[user]
        h1 = "NA" if prof.h1 is None else f"{prof.h1:.4f}"
        beta = interestingness(prof)
        beta_s = "NA" if beta is None else f"{beta:.6g}"
        sink.write(f"{user}\t{prof.rt}\t{prof.fol}\t{prof.twt}\t{h1}\t{beta_s}\n")


def read_profiles_tsv(source: IO[str]) -> dict[str, UserProfile]:
    header = source.readline().rstrip("\n").split("\t")
    if header[:5] != ["user_id", "rt", "fol", "twt", "h1"]:
        raise ValueError("not a profiles TSV (unexpected header)")
    profiles: dict[str, UserProfile] = {}
    for line in source:
        parts = line.rstrip("\n").split("\t")
        if len(parts) < 5:
            continue
        user, rt, fol, twt, h1 = parts[:5]
        profiles[user] = UserProfile(
            user, int(rt), int(fol), int(twt),
            None if h1 == "NA" else float(h1))
    return profiles
