"""Seed-expansion community detection with generalized PageRank scores.

Per trial: draw seeds from the target community, start the walk uniformly on
them, accumulate ``K`` steps with a weight scheme, predict the top-``Q``
vertices and score recall ``|P & C| / |C|``. All schemes, step counts and
budgets in a sweep share the same seed draws, so comparisons are paired.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from .diffusion import gpr, landing_probabilities, seed_distribution
from .graph import CommunitySet, Graph, bfs_subgraph, max_seed_eccentricity
from .parallel import map_trials
from .randgraph import SEED_STREAM, RngConfig, SbmSpec, sample_sbm_nonisolated
from .weights import SchemeSpec

logger = logging.getLogger(__name__)


def sample_seeds(community, count: int, rng: RngConfig, trial: int) -> np.ndarray:
    """Uniform draw of ``count`` members without replacement, sorted."""
    community = np.unique(np.asarray(community, dtype=np.int64))
    if not 1 <= count <= community.size:
        raise ValueError(f"cannot draw {count} seeds from a community of {community.size}")
    gen = rng.stream(trial, SEED_STREAM)
    return np.sort(gen.choice(community, size=count, replace=False))


def rank_vertices(scores, forced=()) -> np.ndarray:
    """All vertices in prediction order: ``forced`` first, then by score.

    Score ties go to the lower index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    forced = np.unique(np.asarray(forced, dtype=np.int64))
    rest = np.ones(n, dtype=bool)
    rest[forced] = False
    idx = np.flatnonzero(rest)
    order = idx[np.lexsort((idx, -scores[idx]))]
    return np.concatenate([forced, order])


def top_q(scores, Q: int, forced=()) -> np.ndarray:
    """Predicted community: ``forced`` plus the best-scoring others, ``Q`` in total."""
    n = np.size(scores)
    forced = np.unique(np.asarray(forced, dtype=np.int64))
    if not 0 <= Q <= n:
        raise ValueError(f"Q={Q} outside [0, {n}]")
    if forced.size > Q:
        raise ValueError(f"{forced.size} forced vertices exceed Q={Q}")
    return np.sort(rank_vertices(scores, forced)[:Q])


def recall(pred, truth) -> float:
    truth = np.unique(np.asarray(truth, dtype=np.int64))
    if truth.size == 0:
        raise ValueError("true community is empty")
    return np.intersect1d(np.asarray(pred, dtype=np.int64), truth).size / truth.size


@dataclass(frozen=True)
class DetectionConfig:
    """One detection setup. ``Q=None`` means the community size.

    ``normalized=None`` uses the scheme's own default (degree-normalized for
    everything except ``ipr-u``). ``hops`` restricts each trial to the BFS
    ball around its seeds.
    """

    scheme: SchemeSpec | None = None
    K: int = 50
    Q: int | None = None
    seed_count: int = 1
    trials: int = 100
    normalized: bool | None = None
    rng: RngConfig = field(default_factory=RngConfig)
    include_seeds: bool = True
    hops: int | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed_count < 1:
            raise ValueError("seed_count must be >= 1")
        if self.Q is not None and self.include_seeds and self.Q < self.seed_count:
            raise ValueError("Q must be at least seed_count when seeds are included")


@dataclass
class DetectionResult:
    scheme: str
    K: int
    Q: int | str
    recalls: np.ndarray

    @property
    def trials(self) -> int:
        return self.recalls.size

    @property
    def mean(self) -> float:
        return float(self.recalls.mean())

    @property
    def std(self) -> float:
        return float(self.recalls.std(ddof=1)) if self.recalls.size > 1 else 0.0


@dataclass
class SweepResult:
    """Recalls indexed ``[trial, scheme, K, Q]``."""

    schemes: list[str]
    K_list: list[int]
    Q_labels: list[int | str]
    recalls: np.ndarray
    resamples: int = 0

    def result(self, s: int, j: int = 0, q: int = 0) -> DetectionResult:
        return DetectionResult(self.schemes[s], self.K_list[j], self.Q_labels[q], self.recalls[:, s, j, q])

    def results(self):
        for s in range(len(self.schemes)):
            for j in range(len(self.K_list)):
                for q in range(len(self.Q_labels)):
                    yield self.result(s, j, q)

    def rows(self) -> list[dict]:
        return [dict(scheme=r.scheme, K=r.K, Q=r.Q, trials=r.trials,
                     mean_recall=r.mean, std_recall=r.std) for r in self.results()]

    def trial_rows(self) -> list[dict]:
        return [dict(scheme=r.scheme, K=r.K, Q=r.Q, trial=t, recall=float(v))
                for r in self.results() for t, v in enumerate(r.recalls)]

    @classmethod
    def concat(cls, parts: Sequence["SweepResult"]) -> "SweepResult":
        """Stack trials of several communities; each gets equal weight when trials match."""
        first = parts[0]
        labels = [q if all(p.Q_labels[i] == q for p in parts) else "auto"
                  for i, q in enumerate(first.Q_labels)]
        return cls(first.schemes, first.K_list, labels,
                   np.concatenate([p.recalls for p in parts]), sum(p.resamples for p in parts))


def _score_trial(g: Graph, seeds, community, truth_size: int,
                 schemes: Sequence[SchemeSpec], K_list, Q_list, normalized, include_seeds) -> np.ndarray:
    """Recalls ``[scheme, K, Q]`` for one seed set on one graph.

    ``community`` holds the members present in ``g``; recall divides by the
    full ``truth_size``.
    """
    lps = landing_probabilities(g, seed_distribution(g.n, seeds), max(K_list))
    member = np.zeros(g.n, dtype=bool)
    member[community] = True
    forced = seeds if include_seeds else ()
    out = np.empty((len(schemes), len(K_list), len(Q_list)))
    for s, scheme in enumerate(schemes):
        norm = scheme.natural_normalization if normalized is None else normalized
        for j, K in enumerate(K_list):
            w = scheme.build(K).rescaled()
            scores = gpr(lps.truncate(K), w, norm, centered=norm)
            hits = np.concatenate([[0], np.cumsum(member[rank_vertices(scores, forced)])])
            for q, Q in enumerate(Q_list):
                Qe = min(truth_size if Q is None else Q, g.n)
                if include_seeds and Qe < len(seeds):
                    raise ValueError(f"Q={Qe} is smaller than the seed set")
                out[s, j, q] = hits[Qe] / truth_size
    return out


def _graph_trial(trial, g, community, schemes, K_list, Q_list, cfg: DetectionConfig):
    seeds = sample_seeds(community, cfg.seed_count, cfg.rng, trial)
    sub, members = g, community
    if cfg.hops is not None:
        sub, vmap = bfs_subgraph(g, seeds, cfg.hops)
        seeds = vmap.to_dense(seeds)
        members = vmap.to_dense(community)
        members = members[members >= 0]
    return _score_trial(sub, seeds, members, community.size, schemes, K_list, Q_list,
                        cfg.normalized, cfg.include_seeds)


def _sbm_trial(trial, spec: SbmSpec, schemes, K_list, Q_list, cfg: DetectionConfig):
    g, resampled = sample_sbm_nonisolated(spec, cfg.rng, trial)
    community = np.arange(spec.n1)
    seeds = sample_seeds(community, cfg.seed_count, cfg.rng, trial)
    rec = _score_trial(g, seeds, community, spec.n1, schemes, K_list, Q_list,
                       cfg.normalized, cfg.include_seeds)
    return rec, resampled


def _q_labels(Q_list, size):
    return [size if Q is None else Q for Q in Q_list]


def detection_sweep(g: Graph, community, schemes: Sequence[SchemeSpec], K_list, Q_list,
                    cfg: DetectionConfig, trial_offset: int = 0) -> SweepResult:
    """Paired sweep over schemes x step counts x budgets on a fixed graph."""
    community = np.unique(np.asarray(community, dtype=np.int64))
    if community.size == 0 or community[-1] >= g.n:
        raise ValueError("community is empty or outside the graph")
    fn = partial(_graph_trial, g=g, community=community, schemes=list(schemes),
                 K_list=list(K_list), Q_list=list(Q_list), cfg=cfg)
    out = map_trials(fn, range(trial_offset, trial_offset + cfg.trials), cfg.threads)
    return SweepResult([s.label for s in schemes], list(K_list),
                       _q_labels(Q_list, community.size), np.stack(out))


def sbm_detection_sweep(spec: SbmSpec, schemes: Sequence[SchemeSpec], K_list, Q_list,
                        cfg: DetectionConfig) -> SweepResult:
    """As :func:`detection_sweep`, but every trial samples a fresh SBM; target is C1."""
    fn = partial(_sbm_trial, spec=spec, schemes=list(schemes), K_list=list(K_list),
                 Q_list=list(Q_list), cfg=cfg)
    out = map_trials(fn, range(cfg.trials), cfg.threads)
    resamples = sum(r for _, r in out)
    if resamples:
        logger.info("resampled %d SBM draws with isolated vertices", resamples)
    return SweepResult([s.label for s in schemes], list(K_list), _q_labels(Q_list, spec.n1),
                       np.stack([rec for rec, _ in out]), resamples)


def multi_community_sweep(g: Graph, communities: CommunitySet, schemes, K_list, Q_list,
                          cfg: DetectionConfig) -> SweepResult:
    """Per-community sweeps stacked, so every community is weighted equally."""
    parts = [detection_sweep(g, c, schemes, K_list, Q_list, cfg, trial_offset=i * cfg.trials)
             for i, c in enumerate(communities)]
    return SweepResult.concat(parts)


def run_detection(g: Graph, community, cfg: DetectionConfig) -> DetectionResult:
    return detection_sweep(g, community, [cfg.scheme], [cfg.K], [cfg.Q], cfg).result(0)


def recall_vs_steps(g: Graph, community, cfg: DetectionConfig, K_list) -> list[DetectionResult]:
    sw = detection_sweep(g, community, [cfg.scheme], K_list, [cfg.Q], cfg)
    return [sw.result(0, j) for j in range(len(K_list))]


def recall_vs_budget(g: Graph, community, cfg: DetectionConfig, Q_list) -> list[DetectionResult]:
    sw = detection_sweep(g, community, [cfg.scheme], [cfg.K], Q_list, cfg)
    return [sw.result(0, 0, q) for q in range(len(Q_list))]


def default_steps(g: Graph, community, cfg: DetectionConfig, factor: float = 4.0,
                  probes: int = 10) -> int:
    """``factor`` times the mean seed eccentricity over the first few seed draws."""
    community = np.asarray(community, dtype=np.int64)
    ecc = []
    for t in range(min(probes, cfg.trials)):
        seeds = sample_seeds(community, cfg.seed_count, cfg.rng, t)
        sub = g
        if cfg.hops is not None:
            sub, vmap = bfs_subgraph(g, seeds, cfg.hops)
            seeds = vmap.to_dense(seeds)
        ecc.append(max_seed_eccentricity(sub, seeds))
    return max(1, math.ceil(factor * float(np.mean(ecc))))


def select_communities_m34(cs: CommunitySet, window: tuple[int, int] | None = None,
                           count: int = 1) -> CommunitySet:
    """Communities sized near ``m**0.75``, ``m`` the largest community size.

    With ``window=(lo, hi)`` every community whose size is in ``[lo, hi]`` is
    kept; otherwise the ``count`` communities closest to ``m**0.75`` (ties to
    the earlier one).
    """
    if len(cs) == 0:
        raise ValueError("no communities to select from")
    sizes = cs.sizes()
    if window is not None:
        lo, hi = window
        keep = np.flatnonzero((sizes >= lo) & (sizes <= hi))
    else:
        target = float(sizes.max()) ** 0.75
        keep = np.sort(np.lexsort((np.arange(sizes.size), np.abs(sizes - target)))[:count])
    if keep.size == 0:
        logger.warning("no community matches the size window %s", window)
    return CommunitySet([cs[i] for i in keep])
