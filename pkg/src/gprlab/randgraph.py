"""Edge-independent random graphs and the two-block SBM mean field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CommunitySet, Graph

_MASK = (1 << 64) - 1

# sub-stream tags, so graph draws and seed draws never share a generator
GRAPH_STREAM = 0
SEED_STREAM = 1
TIEBREAK_STREAM = 2


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (the state is advanced first)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngConfig:
    """Master seed; trial ``i`` draws from PCG64 seeded by ``splitmix64(master + i)``."""

    master_seed: int = 0

    def trial_seed(self, trial: int) -> int:
        return splitmix64((self.master_seed + trial) & _MASK)

    def stream(self, trial: int, purpose: int = GRAPH_STREAM) -> np.random.Generator:
        seq = np.random.SeedSequence([self.trial_seed(trial), purpose])
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class SbmSpec:
    """Two-block SBM ``(n1, p1, n0, p0, q)``; vertices ``0..n1-1`` form C1."""

    n1: int
    p1: float
    n0: int
    p0: float
    q: float

    def __post_init__(self):
        if int(self.n1) < 1 or int(self.n0) < 1:
            raise ValueError("block sizes must be positive")
        for name in ("p1", "p0", "q"):
            p = getattr(self, name)
            if not 0.0 < p < 1.0:
                raise ValueError(f"{name}={p} is not in (0, 1)")

    @property
    def n(self) -> int:
        return self.n1 + self.n0

    def blocks(self) -> np.ndarray:
        """Block label per vertex: 1 for C1, 0 for C0."""
        return np.concatenate([np.ones(self.n1, np.int8), np.zeros(self.n0, np.int8)])

    @classmethod
    def parse(cls, text: str) -> "SbmSpec":
        parts = [s for s in text.replace(",", " ").split() if s]
        if len(parts) != 5:
            raise ValueError(f"expected n1,p1,n0,p0,q, got {text!r}")
        n1, p1, n0, p0, q = parts
        return cls(int(n1), float(p1), int(n0), float(p0), float(q))

    def __str__(self) -> str:
        return f"{self.n1},{self.p1},{self.n0},{self.p0},{self.q}"


@dataclass(frozen=True)
class MeanFieldModel:
    beta1: float
    beta0: float
    lambda2_bar: float
    dbar1: float
    dbar0: float
    total_dbar: float

    @property
    def dbar_min(self) -> float:
        return min(self.dbar1, self.dbar0)

    @property
    def dbar_max(self) -> float:
        return max(self.dbar1, self.dbar0)

    def transition(self) -> np.ndarray:
        """Column-stochastic 2x2 walk matrix on block masses."""
        return np.array([[self.beta1, 1.0 - self.beta0],
                         [1.0 - self.beta1, self.beta0]])


def mean_field(spec: SbmSpec) -> MeanFieldModel:
    n1, p1, n0, p0, q = spec.n1, spec.p1, spec.n0, spec.p0, spec.q
    dbar1 = n1 * p1 + n0 * q
    dbar0 = n0 * p0 + n1 * q
    beta1 = n1 * p1 / dbar1
    beta0 = n0 * p0 / dbar0
    return MeanFieldModel(beta1, beta0, beta1 + beta0 - 1.0, dbar1, dbar0, n1 * dbar1 + n0 * dbar0)


def _sample_pairs(prob_of, n: int, gen: np.random.Generator, chunk: int = 1 << 21):
    """Bernoulli draw for every unordered pair ``u <= v``, rows in order.

    ``prob_of(rows, cols)`` returns the edge probabilities. One uniform is
    consumed per pair in row-major upper-triangle order, so the result does
    not depend on ``chunk``.
    """
    us, vs = [], []
    row = 0
    while row < n:
        # rows [row, stop) hold at most ~chunk pairs
        stop, count = row, 0
        while stop < n and (count == 0 or count + (n - stop) <= chunk):
            count += n - stop
            stop += 1
        lengths = n - np.arange(row, stop)
        rows = np.repeat(np.arange(row, stop), lengths)
        offsets = np.arange(count) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        cols = rows + offsets
        hit = gen.random(count) < prob_of(rows, cols)
        us.append(rows[hit])
        vs.append(cols[hit])
        row = stop
    return np.concatenate(us), np.concatenate(vs)


def _draw_sbm(spec: SbmSpec, gen: np.random.Generator) -> Graph:
    n1 = spec.n1
    table = np.array([[spec.p0, spec.q], [spec.q, spec.p1]])

    def prob_of(rows, cols):
        return table[(rows < n1).astype(np.intp), (cols < n1).astype(np.intp)]

    u, v = _sample_pairs(prob_of, spec.n, gen)
    return Graph.from_edges(spec.n, u, v)


def sbm_communities(spec: SbmSpec) -> CommunitySet:
    return CommunitySet([np.arange(spec.n1), np.arange(spec.n1, spec.n)])


def sample_sbm(spec: SbmSpec, rng: RngConfig, trial: int) -> tuple[Graph, CommunitySet]:
    """One SBM draw for ``trial``. Isolated vertices are possible."""
    return _draw_sbm(spec, rng.stream(trial)), sbm_communities(spec)


def sample_er(n: int, p: float, rng: RngConfig, trial: int) -> Graph:
    """Erdos-Renyi with self-loops: the SBM with ``p1 = p0 = q = p``."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} is not in (0, 1)")
    gen = rng.stream(trial)
    u, v = _sample_pairs(lambda r, c: p, n, gen)
    return Graph.from_edges(n, u, v)


def sample_without_isolated(draw, rng: RngConfig, trial: int, max_attempts: int = 100):
    """Redraw from the trial's stream until no vertex is isolated.

    ``draw(gen)`` returns a Graph. The first attempt equals the plain sampler
    for the same trial. Returns ``(graph, resamples)``.
    """
    gen = rng.stream(trial)
    for attempt in range(max_attempts):
        g = draw(gen)
        if np.all(g.degree > 0):
            return g, attempt
    raise RuntimeError(f"trial {trial}: isolated vertices in {max_attempts} consecutive draws")


def sample_sbm_nonisolated(spec: SbmSpec, rng: RngConfig, trial: int) -> tuple[Graph, int]:
    return sample_without_isolated(lambda gen: _draw_sbm(spec, gen), rng, trial)


def sample_er_nonisolated(n: int, p: float, rng: RngConfig, trial: int) -> tuple[Graph, int]:
    def draw(gen):
        u, v = _sample_pairs(lambda r, c: p, n, gen)
        return Graph.from_edges(n, u, v)

    return sample_without_isolated(draw, rng, trial)
