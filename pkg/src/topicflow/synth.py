"""Synthetic corpora with planted ground truth, and brute-force oracles.

The generator plants: block-structured tag co-occurrence (topics), agent
interest profiles (focused vs diverse), emergent tags whose early-adopter
diversity is coupled to final popularity through a Gaussian copula, and
user retweet counts drawn from a linear influence model. The ledger it
returns is sufficient to recompute every planted statistic without
re-parsing the corpus.

The oracles at the bottom share no counting code with the main modules;
they exist to verify them and refuse oversized inputs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cooccurrence import CoOccurrenceGraph
from .ingest import MessageRecord, PeriodSplit
from .influence import UserProfile

DAY = 86_400


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 42
    vocab_size: int = 120
    n_topics: int = 4
    p_in: float = 0.3
    p_out: float = 0.02
    n_agents: int = 300
    frac_focused: float = 0.5
    mean_msgs_per_agent: float = 40.0
    n_emergent: int = 300
    rho_plant: float = 0.6
    cotag_prob: float = 0.55
    decoy_frac: float = 0.03
    # influence model on z-scored (fol, twt, beta, H1)
    b_intercept: float = 60.0
    b_fol: float = 45.0
    b_twt: float = 18.0
    b_beta: float = 10.0
    b_h1: float = -14.0
    noise_sigma: float = 0.6
    epoch: int = 1_356_998_400  # fixed corpus origin

    def __post_init__(self) -> None:
        for name in ("p_in", "p_out", "frac_focused", "cotag_prob", "decoy_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if not -1.0 <= self.rho_plant <= 1.0:
            raise ValueError("rho_plant must be in [-1, 1]")


def period_split(config: GeneratorConfig) -> PeriodSplit:
    """Two observation months, one test month, first-week birth cutoff."""
    t0 = config.epoch
    obs_end = t0 + 59 * DAY
    return PeriodSplit(
        observation_start=t0,
        observation_end=obs_end,
        test_start=obs_end,
        first_week_end=obs_end + 7 * DAY,
        test_end=obs_end + 31 * DAY - 1,
    )


def _zcol(values: np.ndarray) -> np.ndarray:
    sd = values.std(ddof=1)
    return (values - values.mean()) / sd if sd > 0 else np.zeros_like(values)


def _interest_entropy(weights: np.ndarray) -> float:
    nz = weights[weights > 0]
    return float(-(nz * np.log2(nz)).sum())


@dataclass
class _Agent:
    interests: np.ndarray
    fol: int
    beta_lat: float
    n_msgs: int
    diversity: float
    focused: bool
    rt: int = 0


def _draw_agents(config: GeneratorConfig, rng: np.random.Generator) -> list[_Agent]:
    agents: list[_Agent] = []
    n_focused = int(round(config.frac_focused * config.n_agents))
    for i in range(config.n_agents):
        focused = i < n_focused
        if focused:
            home = int(rng.integers(config.n_topics))
            concentration = rng.uniform(0.85, 0.98)
            weights = np.full(config.n_topics,
                              (1.0 - concentration) / max(1, config.n_topics - 1))
            weights[home] = concentration
            weights /= weights.sum()
        else:
            weights = rng.dirichlet(np.full(config.n_topics, 8.0))
        fol = max(1, int(round(rng.lognormal(math.log(100.0), 1.2))))
        beta_lat = float(rng.lognormal(math.log(1e-3), 0.7))
        n_msgs = max(2, int(round(rng.lognormal(
            math.log(config.mean_msgs_per_agent), 0.5))))
        agents.append(_Agent(weights, fol, beta_lat, n_msgs,
                             _interest_entropy(weights), focused))
    # retweet counts from the linear model, lognormal noise keeps them >= 0
    fol_col = np.array([a.fol for a in agents], float)
    twt_col = np.array([a.n_msgs for a in agents], float)
    beta_col = np.array([a.beta_lat for a in agents], float)
    div_col = np.array([a.diversity for a in agents], float)
    linear = (config.b_intercept
              + config.b_fol * _zcol(fol_col)
              + config.b_twt * _zcol(twt_col)
              + config.b_beta * _zcol(beta_col)
              + config.b_h1 * _zcol(div_col))
    noise = rng.lognormal(math.log(10.0), config.noise_sigma,
                          size=config.n_agents)
    rt = np.maximum(0.0, linear + noise).round().astype(int)
    for agent, value in zip(agents, rt):
        agent.rt = int(value)
    return agents


@dataclass
class _Draft:
    """Message before ids are assigned (sequence breaks timestamp ties)."""

    ts: int
    author: int
    tags: tuple[str, ...]
    rt_of: int | None = None


def _topic_tag_weights(config: GeneratorConfig,
                       rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-topic tag index arrays with Zipf-ish popularity weights."""
    per_topic: list[tuple[np.ndarray, np.ndarray]] = []
    for topic in range(config.n_topics):
        members = np.array([i for i in range(config.vocab_size)
                            if i * config.n_topics // config.vocab_size == topic])
        ranks = rng.permutation(len(members)) + 1
        weights = 1.0 / ranks ** 1.7
        per_topic.append((members, weights / weights.sum()))
    return per_topic


def gen_corpus(config: GeneratorConfig
               ) -> tuple[list[MessageRecord], dict, PeriodSplit]:
    """Generate the two-period message stream and its ground-truth ledger."""
    rng = np.random.default_rng(config.seed)
    split = period_split(config)
    tag_names = [f"t{i:04d}" for i in range(config.vocab_size)]
    topic_of = {tag_names[i]: i * config.n_topics // config.vocab_size
                for i in range(config.vocab_size)}
    per_topic = _topic_tag_weights(config, rng)
    agents = _draw_agents(config, rng)
    user_names = [f"u{i:05d}" for i in range(config.n_agents)]
    drafts: list[_Draft] = []

    def draw_from_interests(interests: np.ndarray, k: int,
                            cross_topic: bool = True) -> list[str]:
        topic = int(rng.choice(config.n_topics, p=interests))
        members, weights = per_topic[topic]
        picks = rng.choice(members, size=min(k, len(members)),
                           replace=False, p=weights)
        tags = [tag_names[i] for i in picks]
        if cross_topic and rng.random() < 0.1:  # occasional cross-topic mention
            tags.append(tag_names[int(rng.integers(config.vocab_size))])
        return list(dict.fromkeys(tags))

    def draw_tags(agent: _Agent, k: int) -> list[str]:
        return draw_from_interests(agent.interests, k)

    # observation period: authored messages
    obs_span = split.observation_end - split.observation_start
    for idx, agent in enumerate(agents):
        for _ in range(agent.n_msgs):
            ts = split.observation_start + int(rng.integers(obs_span))
            k = 1 + int(rng.binomial(2, 0.35))
            drafts.append(_Draft(ts, idx, tuple(draw_tags(agent, k))))

    # observation period: repost messages realizing each agent's RT count
    for idx, agent in enumerate(agents):
        for _ in range(agent.rt):
            ts = split.observation_start + int(rng.integers(obs_span))
            reposter = int(rng.integers(config.n_agents - 1))
            if reposter >= idx:
                reposter += 1
            tags: tuple[str, ...] = ()
            if rng.random() < 0.5:
                tags = tuple(draw_tags(agent, 1))
            drafts.append(_Draft(ts, reposter, tags, rt_of=idx))

    observed_tags = sorted({t for d in drafts for t in d.tags})

    # test period: background traffic restricted to tags seen in observation
    test_span = split.test_end - split.test_start
    obs_set = set(observed_tags)
    for idx, agent in enumerate(agents):
        for _ in range(max(1, agent.n_msgs // 2)):
            ts = split.test_start + int(rng.integers(test_span + 1))
            tags = tuple(t for t in draw_tags(agent, 1 + int(rng.binomial(2, 0.35)))
                         if t in obs_set)
            if tags:
                drafts.append(_Draft(ts, idx, tags))

    # emergent tags: popularity and adopter diversity tied by a copula
    div_order = np.argsort([a.diversity for a in agents], kind="stable")
    sigma_rank = max(2.0, 0.05 * config.n_agents)
    rank_positions = np.arange(config.n_agents)
    emergent_ledger: dict[str, dict] = {}
    rho = config.rho_plant
    for e in range(config.n_emergent):
        name = f"em{e:04d}"
        z = float(rng.standard_normal())
        w = float(rng.standard_normal())
        v = rho * z + math.sqrt(max(0.0, 1.0 - rho * rho)) * w
        popularity = int(np.clip(round(math.exp(math.log(8.0) + 1.0 * z)),
                                 3, config.n_agents))
        q = 0.5 * (1.0 + math.erf(v / math.sqrt(2.0)))
        center = q * (config.n_agents - 1)
        probs = np.exp(-0.5 * ((rank_positions - center) / sigma_rank) ** 2)
        probs /= probs.sum()
        chosen_ranks = rng.choice(config.n_agents, size=popularity,
                                  replace=False, p=probs)
        adopters = [int(div_order[r]) for r in chosen_ranks]
        # the tag's own co-tag topic profile: concentration follows the
        # same copula, so co-tag diversity tracks popularity at ~rho
        home = int(rng.integers(config.n_topics))
        spread = 0.05 + 0.9 * q
        cotag_interests = np.full(config.n_topics,
                                  spread / config.n_topics)
        cotag_interests[home] += 1.0 - spread
        birth = split.test_start + int(rng.integers(6 * DAY))
        horizon = split.test_end - birth
        times = [birth] + sorted(
            birth + int(u ** 3 * horizon)
            for u in rng.random(popularity - 1))
        for adopter, ts in zip(adopters, times):
            tags = [name]
            if rng.random() < config.cotag_prob:
                tags.extend(draw_from_interests(cotag_interests,
                                                1 + int(rng.integers(2)),
                                                cross_topic=False))
            drafts.append(_Draft(ts, adopter,
                                 tuple(dict.fromkeys(t for t in tags
                                                     if t == name or t in obs_set))))
        emergent_ledger[name] = {
            "popularity": len(set(adopters)),
            "birth": birth,
            "adopters": sorted(user_names[a] for a in set(adopters)),
            "z": z,
        }

    # decoys: born too late, or too few adopters
    n_decoys = int(round(config.decoy_frac * config.n_emergent))
    decoys: dict[str, str] = {}
    for d in range(n_decoys):
        late = f"late{d:04d}"
        ts0 = split.first_week_end + int(rng.integers(10 * DAY))
        for j in range(5):
            drafts.append(_Draft(ts0 + j * 3600,
                                 int(rng.integers(config.n_agents)), (late,)))
        decoys[late] = "born after first week"
        rare = f"rare{d:04d}"
        ts1 = split.test_start + int(rng.integers(3 * DAY))
        drafts.append(_Draft(ts1, int(rng.integers(config.n_agents)), (rare,)))
        decoys[rare] = "fewer than minimum adopters"

    drafts.sort(key=lambda d: d.ts)
    records = [
        MessageRecord(f"m{i:08d}", user_names[d.author], d.ts, d.tags,
                      user_names[d.rt_of] if d.rt_of is not None else None)
        for i, d in enumerate(drafts)
    ]

    def _counts(rows: list[MessageRecord]) -> dict:
        return {
            "n_messages": len(rows),
            "n_messages_with_hashtags": sum(1 for r in rows if r.hashtags),
            "n_distinct_hashtags": len({t for r in rows for t in r.hashtags}),
            "n_distinct_users": len({r.author_id for r in rows}),
        }

    obs_rows = [r for r in records
                if split.observation_start <= r.timestamp < split.observation_end]
    test_rows = [r for r in records
                 if split.test_start <= r.timestamp <= split.test_end]
    ledger = {
        "config": asdict(config),
        "split": asdict(split),
        "tags": topic_of,
        "agents": {
            user_names[i]: {
                "fol": a.fol, "twt_authored": a.n_msgs, "rt": a.rt,
                "beta_latent": a.beta_lat, "diversity": a.diversity,
                "focused": a.focused,
            } for i, a in enumerate(agents)
        },
        "emergent": emergent_ledger,
        "decoys": decoys,
        "counts": {"observation": _counts(obs_rows), "test": _counts(test_rows)},
    }
    return records, ledger, split


def gen_user_profiles(config: GeneratorConfig, n_users: int
                      ) -> tuple[dict[str, UserProfile], dict]:
    """User table straight from the influence model, no corpus emission.

    Measured diversity is the planted interest entropy plus small noise;
    retweet counts follow the same linear model as gen_corpus. Meant for
    large-N regression checks where a full corpus would be wasteful.
    """
    cfg = GeneratorConfig(**{**asdict(config), "n_agents": n_users})
    rng = np.random.default_rng(cfg.seed)
    agents = _draw_agents(cfg, rng)
    h1_noise = rng.normal(0.0, 0.05, size=n_users)
    profiles: dict[str, UserProfile] = {}
    planted: dict[str, dict] = {}
    for i, agent in enumerate(agents):
        user = f"u{i:05d}"
        h1 = max(0.0, agent.diversity + float(h1_noise[i]))
        profiles[user] = UserProfile(user, agent.rt, agent.fol,
                                     agent.n_msgs, h1)
        planted[user] = {"beta_latent": agent.beta_lat,
                         "diversity": agent.diversity}
    ledger = {
        "coefficients": {"fol": cfg.b_fol, "twt": cfg.b_twt,
                         "beta": cfg.b_beta, "H1": cfg.b_h1},
        "agents": planted,
    }
    return profiles, ledger


def gen_planted_graph(config: GeneratorConfig, min_weight: int = 3
                      ) -> tuple[dict[tuple[int, int], float], dict[int, int]]:
    """Planted-partition benchmark graph: blocks of tags, p_in vs p_out edges."""
    if config.p_in <= config.p_out:
        raise ValueError("planted partition needs p_in > p_out")
    rng = np.random.default_rng(config.seed)
    n = config.vocab_size
    block = {i: i * config.n_topics // n for i in range(n)}
    edges: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            p = config.p_in if block[i] == block[j] else config.p_out
            if rng.random() < p:
                edges[(i, j)] = float(min_weight + rng.poisson(2.0))
    return edges, block


def nmi(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    """Normalized mutual information (arithmetic-mean normalization)."""
    if len(labels_a) != len(labels_b) or not labels_a:
        raise ValueError("label sequences must be nonempty and equally long")
    n = len(labels_a)
    joint: dict[tuple[int, int], int] = {}
    count_a: dict[int, int] = {}
    count_b: dict[int, int] = {}
    for a, b in zip(labels_a, labels_b):
        joint[(a, b)] = joint.get((a, b), 0) + 1
        count_a[a] = count_a.get(a, 0) + 1
        count_b[b] = count_b.get(b, 0) + 1
    h_a = -sum(c / n * math.log(c / n) for c in count_a.values())
    h_b = -sum(c / n * math.log(c / n) for c in count_b.values())
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    info = 0.0
    for (a, b), c in joint.items():
        p_ab = c / n
        info += p_ab * math.log(p_ab * n * n / (count_a[a] * count_b[b]))
    return 2.0 * info / (h_a + h_b)


# --------------------------------------------------------------------------
# independent verification oracles (definitionally correct, small inputs only)
# --------------------------------------------------------------------------

ORACLE_MAX_MESSAGES = 10_000
ORACLE_MAX_SCORES = 10_000
ORACLE_MAX_NODES = 8


class OracleSizeError(ValueError):
    """Input exceeds the documented size limit of a brute-force oracle."""


def oracle_pair_counts(records: Sequence[MessageRecord]
                       ) -> dict[tuple[str, str], int]:
    """Quadratic per-message pair scan over tag strings, no thresholds."""
    if len(records) > ORACLE_MAX_MESSAGES:
        raise OracleSizeError(
            f"oracle_pair_counts limited to {ORACLE_MAX_MESSAGES} messages")
    counts: dict[tuple[str, str], int] = {}
    for rec in records:
        tags = rec.hashtags
        for a in tags:
            for b in tags:
                if a < b:
                    counts[(a, b)] = counts.get((a, b), 0) + 1
    return counts


def oracle_thresholded_graph(records: Sequence[MessageRecord],
                             user_threshold: int, edge_threshold: int
                             ) -> tuple[set[str], dict[tuple[str, str], int]]:
    """Full brute-force rebuild of the thresholded network over tag strings."""
    if len(records) > ORACLE_MAX_MESSAGES:
        raise OracleSizeError(
            f"oracle_thresholded_graph limited to {ORACLE_MAX_MESSAGES} messages")
    all_tags = {t for rec in records for t in rec.hashtags}
    surviving = set()
    for tag in all_tags:
        users = {rec.author_id for rec in records if tag in rec.hashtags}
        if len(users) >= user_threshold:
            surviving.add(tag)
    edges: dict[tuple[str, str], int] = {}
    for rec in records:
        kept = [t for t in rec.hashtags if t in surviving]
        for a in kept:
            for b in kept:
                if a < b:
                    edges[(a, b)] = edges.get((a, b), 0) + 1
    edges = {pair: w for pair, w in edges.items() if w >= edge_threshold}
    return surviving, edges


def oracle_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Pairwise concordance over every (positive, negative) pair."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels must pair up")
    if len(scores) > ORACLE_MAX_SCORES:
        raise OracleSizeError(f"oracle_auc limited to {ORACLE_MAX_SCORES} items")
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l != 1]
    if not pos or not neg:
        raise ValueError("oracle_auc needs both classes present")
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def _direct_modularity(g: CoOccurrenceGraph, membership: Mapping[int, int]) -> float:
    """O(n^2) evaluation of the definition, independent of the fast path."""
    nodes = sorted(g.nodes)
    m = 0.0
    for (_, _), w in g.edges.items():
        m += w
    if m == 0:
        return 0.0

    def a(u: int, v: int) -> float:
        if u == v:
            return 2.0 * g.edges.get((u, u), 0.0)
        key = (u, v) if u < v else (v, u)
        return g.edges.get(key, 0.0)

    def k(u: int) -> float:
        return sum(a(u, v) for v in nodes)

    degrees = {u: k(u) for u in nodes}
    q = 0.0
    for u in nodes:
        for v in nodes:
            if membership[u] == membership[v]:
                q += a(u, v) - degrees[u] * degrees[v] / (2.0 * m)
    return q / (2.0 * m)


def _set_partitions(items: Sequence[int]):
    """All set partitions as membership dicts, via restricted growth strings."""
    n = len(items)
    codes = [0] * n

    def rec(i: int, max_used: int):
        if i == n:
            yield {items[j]: codes[j] for j in range(n)}
            return
        for c in range(max_used + 2):
            codes[i] = c
            yield from rec(i + 1, max(max_used, c))

    if n:
        yield from rec(1, 0)


def oracle_best_partition(g: CoOccurrenceGraph) -> tuple[dict[int, int], float]:
    """Exhaustive maximal-modularity partition for graphs of <= 8 nodes."""
    if not g.nodes:
        raise OracleSizeError("oracle_best_partition refuses an empty graph")
    if g.n_nodes > ORACLE_MAX_NODES:
        raise OracleSizeError(
            f"oracle_best_partition limited to {ORACLE_MAX_NODES} nodes")
    nodes = sorted(g.nodes)
    best_q = -math.inf
    best: dict[int, int] = {}
    for membership in _set_partitions(nodes):
        q = _direct_modularity(g, membership)
        if q > best_q:
            best_q = q
            best = dict(membership)
    return best, best_q
