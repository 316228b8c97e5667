"""Monte Carlo checks of how landing probabilities concentrate on random graphs.

* :func:`variance_experiment` measures ``||x_k - xbar_k||`` and
  ``||z_k - zbar_k||`` on sampled two-block SBMs against the exact mean field.
* :func:`bound_eval` evaluates the non-asymptotic deviation bounds for given
  constants.
* :func:`l1_divergence_demo` shows that one walk step from a single vertex
  stays far from its mean field in l1 on Erdos-Renyi graphs.
* :func:`classification_experiment` scores single-step LP and DNLP features
  as classifiers of the seed's block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .detect import sample_seeds
from .diffusion import deviation_norms, lambda_sub_estimate, landing_probabilities, mean_field_lp, seed_distribution
from .parallel import map_trials
from .randgraph import TIEBREAK_STREAM, RngConfig, SbmSpec, mean_field, sample_er_nonisolated, sample_sbm_nonisolated
from .weights import WeightScheme


@dataclass
class VarianceTable:
    spec: SbmSpec
    master_seed: int
    trials: int
    mean_sq_l2_x: np.ndarray
    mean_sq_l2_z: np.ndarray
    mean_l1_x: np.ndarray
    mean_l1_z: np.ndarray
    mean_l2_x: np.ndarray
    lambda_sub: np.ndarray = field(default_factory=lambda: np.empty(0))
    resamples: int = 0

    @property
    def K(self) -> int:
        return self.mean_sq_l2_x.size - 1

    def rows(self) -> list[dict]:
        return [dict(k=k, trials=self.trials, mean_sq_l2_x=float(self.mean_sq_l2_x[k]),
                     mean_sq_l2_z=float(self.mean_sq_l2_z[k]), mean_l1_x=float(self.mean_l1_x[k]))
                for k in range(self.K + 1)]


def _variance_trial(trial, spec: SbmSpec, K: int, rng: RngConfig, with_lambda: bool):
    g, resampled = sample_sbm_nonisolated(spec, rng, trial)
    lps = landing_probabilities(g, seed_distribution(g.n, [0]), K)
    dev = deviation_norms(lps, mean_field_lp(spec, K), spec.blocks())
    lam = lambda_sub_estimate(g, tol=1e-10).lambda_sub if with_lambda else math.nan
    return np.stack([dev.sq_l2_x, dev.sq_l2_z, dev.l1_x, dev.l1_z, np.sqrt(dev.sq_l2_x)]), lam, resampled


def variance_experiment(spec: SbmSpec, K: int, trials: int, rng: RngConfig,
                        with_lambda: bool = True, threads: int | None = None) -> VarianceTable:
    """Trial-averaged deviations from the mean field, seeding at vertex 0 of C1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fn = partial(_variance_trial, spec=spec, K=K, rng=rng, with_lambda=with_lambda)
    out = map_trials(fn, range(trials), threads)
    # fixed summation order: trial index
    stacked = np.stack([o[0] for o in out])
    means = stacked.mean(axis=0)
    lam = np.array([o[1] for o in out]) if with_lambda else np.empty(0)
    return VarianceTable(spec, rng.master_seed, trials, *means, lambda_sub=lam,
                         resamples=sum(o[2] for o in out))


def log_slope(values, ks) -> float:
    """Least-squares slope of ``log(values)`` against ``ks``."""
    ks = np.asarray(ks, dtype=np.float64)
    y = np.log(np.asarray(values, dtype=np.float64))
    return float(np.polyfit(ks, y, 1)[0])


@dataclass(frozen=True)
class BoundReport:
    n: int
    dbar_min: float
    dbar_max: float
    lambda_bar: float
    x0_norm: float
    constants: tuple[float, float, float]
    k: int | None
    rho: float
    degree_term: float        # C1 sqrt(log n / (n dbar_min)) / ||x0||
    lp_bound: float | None    # deviation bound on ||x_k - xbar_k|| / ||x0||
    dnlp_bound: float | None  # deviation bound on ||z_k - zbar_k|| / ||z0||
    g: float | None
    g_divergent: bool
    gpr_bound: float | None

    def rows(self) -> list[tuple[str, object]]:
        return [(k, getattr(self, k)) for k in self.__dataclass_fields__]


def bound_series(gamma, rho: float, tol: float = 1e-16, max_terms: int = 100_000) -> tuple[float, bool]:
    """``sum_{k>=1} gamma_k k rho^(k-1)``; returns ``(value, divergent)``.

    ``gamma`` is a finite weight sequence (exact finite sum) or a callable
    ``k -> gamma_k`` for an infinite sequence, summed term by term until the
    terms are decreasing and below ``tol``.
    """
    if not callable(gamma):
        g = np.asarray(getattr(gamma, "gamma", gamma), dtype=np.float64)
        k = np.arange(1, g.size)
        with np.errstate(over="ignore"):
            terms = g[1:] * k * rho ** (k - 1.0)
        total = float(terms.sum())
        return total, not math.isfinite(total)
    total, prev = 0.0, math.inf
    for k in range(1, max_terms + 1):
        try:
            term = float(gamma(k)) * k * rho ** (k - 1)
        except OverflowError:
            return math.inf, True
        if not math.isfinite(term):
            return math.inf, True
        total += term
        if term < tol and term <= prev:
            return total, False
        prev = term
    return math.inf, True


def bound_eval(n: int, dbar_min: float, dbar_max: float, lambda_bar: float, x0_norm: float = 1.0,
               k: int | None = None, weights: WeightScheme | Sequence[float] | Callable | None = None,
               constants: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> BoundReport:
    """Evaluate the LP, DNLP and GPR deviation bounds.

    With ``rho = lambda_bar + C3 sqrt(log n / dbar_min)`` and
    ``s = sqrt(dbar_max log n) / dbar_min``:

    * LP:   ``C1 sqrt(log n / (n dbar_min)) / ||x0|| + C2 k rho^(k-1) s``
    * DNLP: ``C2 k rho^(k-1) s``
    * GPR:  the LP bound with ``k rho^(k-1)`` replaced by
      ``g = sum_{k>=1} gamma_k k rho^(k-1)``

    A divergent ``g`` is flagged in the report, not raised.
    """
    if dbar_min <= 1:
        raise ValueError("dbar_min must exceed 1")
    if any(c <= 0 for c in constants):
        raise ValueError("constants must be positive")
    if x0_norm <= 0:
        raise ValueError("||x0|| must be positive")
    C1, C2, C3 = constants
    logn = math.log(n)
    rho = lambda_bar + C3 * math.sqrt(logn / dbar_min)
    degree_term = C1 * math.sqrt(logn / (n * dbar_min)) / x0_norm
    spread = math.sqrt(dbar_max * logn) / dbar_min
    lp = dnlp = g = gpr_b = None
    divergent = False
    if k is not None:
        if k < 0:
            raise ValueError("k must be >= 0")
        walk = k * rho ** (k - 1) if k > 0 else 0.0
        dnlp = C2 * walk * spread
        lp = degree_term + dnlp
    if weights is not None:
        g, divergent = bound_series(weights, rho)
        gpr_b = degree_term + C2 * g * spread if not divergent else math.inf
    return BoundReport(n, dbar_min, dbar_max, lambda_bar, x0_norm, tuple(constants), k, rho,
                       degree_term, lp, dnlp, g, divergent, gpr_b)


@dataclass(frozen=True)
class L1Divergence:
    values: np.ndarray
    lower_floor: float   # 2 (1 - dbar / n)

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def _l1_trial(trial, n: int, p: float, rng: RngConfig) -> float:
    g, _ = sample_er_nonisolated(n, p, rng, trial)
    x1 = g.adjacency[:, [0]].toarray().ravel() / g.degree[0]
    return float(np.abs(x1 - 1.0 / n).sum())


def l1_divergence_demo(n: int, p: float, trials: int, rng: RngConfig,
                       threads: int | None = None) -> L1Divergence:
    """``||x_1 - xbar_1||_1`` from vertex 0 of ER(n, p); ``xbar_1`` is uniform."""
    if n * p < 5:
        raise ValueError("needs n*p >= 5 so that degrees grow")
    vals = map_trials(partial(_l1_trial, n=n, p=p, rng=rng), range(trials), threads)
    return L1Divergence(np.array(vals), 2.0 * (1.0 - p))


@dataclass
class ClassificationTable:
    k_list: list[int]
    dnlp_error: np.ndarray   # (trials, len(k_list))
    lp_error: np.ndarray

    def summary(self) -> list[dict]:
        ddof = 1 if self.dnlp_error.shape[0] > 1 else 0
        return [dict(k=k, dnlp_mean=float(self.dnlp_error[:, j].mean()),
                     dnlp_std=float(self.dnlp_error[:, j].std(ddof=ddof)),
                     lp_mean=float(self.lp_error[:, j].mean()),
                     lp_std=float(self.lp_error[:, j].std(ddof=ddof)))
                for j, k in enumerate(self.k_list)]


def _block_error(feature, n1: int, tiebreak: np.ndarray) -> float:
    # top n1 predicted as C1 (vertices 0..n1-1); ties in random order, since
    # index order would favour C1
    order = np.lexsort((tiebreak, -np.asarray(feature)))
    missed = n1 - int(np.count_nonzero(order[:n1] < n1))
    return 2.0 * missed / feature.size


def _classification_trial(trial, spec: SbmSpec, k_list, rng: RngConfig):
    g, _ = sample_sbm_nonisolated(spec, rng, trial)
    seed = sample_seeds(np.arange(spec.n1), 1, rng, trial)
    lps = landing_probabilities(g, seed_distribution(g.n, seed), max(k_list))
    tiebreak = rng.stream(trial, TIEBREAK_STREAM).permutation(g.n)
    dn = [_block_error(lps.z_dev[k], spec.n1, tiebreak) for k in k_list]
    lp = [_block_error(lps.steps[k], spec.n1, tiebreak) for k in k_list]
    return dn, lp


def classification_experiment(spec: SbmSpec, k_list, trials: int, rng: RngConfig,
                              threads: int | None = None) -> ClassificationTable:
    """Error of ranking by a single step's feature, predicting the top ``n1`` as C1."""
    out = map_trials(partial(_classification_trial, spec=spec, k_list=list(k_list), rng=rng),
                     range(trials), threads)
    return ClassificationTable(list(k_list), np.array([o[0] for o in out]), np.array([o[1] for o in out]))


def sbm_bound_inputs(spec: SbmSpec) -> dict:
    """Mean-field inputs for :func:`bound_eval` on a two-block SBM."""
    m = mean_field(spec)
    # the mean-field walk matrix has rank 2, so its other eigenvalues are 0
    return dict(n=spec.n, dbar_min=m.dbar_min, dbar_max=m.dbar_max, lambda_bar=abs(m.lambda2_bar))
