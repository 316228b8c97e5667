"""Landing probabilities, generalized PageRank scores and their mean field.

Besides the raw landing probabilities ``x_k = W^k x_0`` every
:class:`LpSequence` carries ``z_k - 1``, the degree-normalized features minus
their stationary value, propagated directly by ``u_{k+1} = D^-1 A u_k``.
Late-step ``z_k`` are ``1 + O(lambda^k)``; the centered copy keeps their
vertex-to-vertex differences at full relative precision, which matters for
weight schemes that grow geometrically in ``k``. Vertices the walk has not
reached keep the exact value -1, so ties stay ties.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, ZeroDegreeError, walk_step
from .randgraph import MeanFieldModel, SbmSpec, mean_field


@dataclass(frozen=True)
class LpSequence:
    steps: np.ndarray      # (K+1, n) landing probabilities
    z_dev: np.ndarray      # (K+1, n) normalized steps minus 1
    degree: np.ndarray
    total_degree: float

    @property
    def K(self) -> int:
        return self.steps.shape[0] - 1

    @property
    def n(self) -> int:
        return self.steps.shape[1]

    @property
    def normalized_steps(self) -> np.ndarray:
        """Degree-normalized landing probabilities ``z_k = (sum d) x_k / d``."""
        return self.total_degree * self.steps / self.degree

    def features(self, normalized: bool, centered: bool = False) -> np.ndarray:
        if normalized:
            return self.z_dev if centered else self.normalized_steps
        return self.steps - self.degree / self.total_degree if centered else self.steps

    def truncate(self, K: int) -> "LpSequence":
        if not 0 <= K <= self.K:
            raise ValueError(f"cannot truncate {self.K} steps to {K}")
        return LpSequence(self.steps[:K + 1], self.z_dev[:K + 1], self.degree, self.total_degree)


def landing_probabilities(g: Graph, x0, K: int) -> LpSequence:
    """``x_0 .. x_K`` by repeated walk steps from the distribution ``x0``."""
    if K < 0:
        raise ValueError("K must be >= 0")
    x = np.asarray(x0, dtype=np.float64)
    walk_step(g, x)  # validates x0 and degrees once
    steps = np.empty((K + 1, g.n))
    z_dev = np.empty((K + 1, g.n))
    steps[0] = x
    z_dev[0] = g.total_degree * x / g.degree - 1.0
    adj = g.adjacency
    for k in range(1, K + 1):
        steps[k] = walk_step(g, steps[k - 1], check=False)
        z_dev[k] = (adj @ z_dev[k - 1]) / g.degree
    return LpSequence(steps, z_dev, g.degree, g.total_degree)


def seed_distribution(n: int, seeds) -> np.ndarray:
    """Uniform distribution over ``seeds``."""
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size == 0:
        raise ValueError("seed set is empty")
    x = np.zeros(n)
    x[seeds] = 1.0 / seeds.size
    return x


def gpr(lps: LpSequence, gamma, normalized: bool = False, centered: bool = False) -> np.ndarray:
    """Generalized PageRank ``sum_k gamma_k f_k`` over the stored steps.

    ``centered=True`` subtracts the stationary part from each feature. For
    degree-normalized features that removes the constant ``sum(gamma)``, so
    rankings are unchanged and late steps keep their precision.
    """
    gamma = np.asarray(getattr(gamma, "gamma", gamma), dtype=np.float64)
    if gamma.ndim != 1 or gamma.size != lps.K + 1:
        raise ValueError(f"{gamma.size} weights for {lps.K + 1} steps")
    if np.any(gamma < 0) or not np.all(np.isfinite(gamma)):
        raise ValueError("weights must be finite and nonnegative")
    return gamma @ lps.features(normalized, centered)


@dataclass(frozen=True)
class MeanFieldLp:
    """Block masses of the mean-field walk started inside C1.

    ``deviation`` is the mass minus the stationary mass, propagated by the
    same 2x2 recursion; block gaps are read off it, so they keep full relative
    precision after the masses themselves have converged.
    """

    block_mass: np.ndarray   # (K+1, 2): columns P1, P0
    deviation: np.ndarray    # (K+1, 2)
    spec: SbmSpec
    model: MeanFieldModel

    @property
    def K(self) -> int:
        return self.block_mass.shape[0] - 1

    @property
    def mu1(self) -> np.ndarray:
        m = self.model
        return m.total_dbar * self.block_mass[:, 0] / self.spec.n1 / m.dbar1

    @property
    def mu0(self) -> np.ndarray:
        m = self.model
        return m.total_dbar * self.block_mass[:, 1] / self.spec.n0 / m.dbar0

    @property
    def gap(self) -> np.ndarray:
        """``P1/(n1 dbar1) - P0/(n0 dbar0)`` per step; the stationary part cancels exactly."""
        m = self.model
        return self.deviation[:, 0] / (self.spec.n1 * m.dbar1) - self.deviation[:, 1] / (self.spec.n0 * m.dbar0)

    def x_bar(self, k: int, blocks: np.ndarray) -> np.ndarray:
        P1, P0 = self.block_mass[k]
        return np.where(blocks == 1, P1 / self.spec.n1, P0 / self.spec.n0)

    def z_bar(self, k: int, blocks: np.ndarray) -> np.ndarray:
        m = self.model
        dbar = np.where(blocks == 1, m.dbar1, m.dbar0)
        return m.total_dbar * self.x_bar(k, blocks) / dbar


def mean_field_lp(spec: SbmSpec, K: int) -> MeanFieldLp:
    if K < 0:
        raise ValueError("K must be >= 0")
    model = mean_field(spec)
    Wp = model.transition()
    # stationary block mass is the block's share of the expected total degree
    pi1 = spec.n1 * model.dbar1 / model.total_dbar
    dev = np.empty((K + 1, 2))
    dev[0] = (1.0 - pi1, pi1 - 1.0)
    for k in range(1, K + 1):
        # the deviation carries no total mass; pinning dev[k, 1] = -dev[k, 0]
        # stops rounding from leaking into the non-decaying stationary direction
        d1 = Wp[0] @ dev[k - 1]
        dev[k] = (d1, -d1)
    mass = np.empty((K + 1, 2))
    mass[:, 0] = pi1 + dev[:, 0]
    mass[:, 1] = 1.0 - mass[:, 0]
    return MeanFieldLp(mass, dev, spec, model)


def mean_gap(spec: SbmSpec, k: int, dnlp_scale: bool = False) -> float:
    """``mu1 - mu0`` at step ``k`` from the block recursion.

    By default the block means are ``P_i / (n_i dbar_i)``; ``dnlp_scale``
    multiplies by the total mean degree, the scale of ``z``.
    """
    mf = mean_field_lp(spec, k)
    gap = float(mf.gap[k])
    return gap * mf.model.total_dbar if dnlp_scale else gap


def gap_constant(spec: SbmSpec) -> float:
    """``c`` with ``mean_gap(k) == c * lambda2_bar**k``; equals ``1/(n1 dbar1)``."""
    return 1.0 / (spec.n1 * mean_field(spec).dbar1)


def damped_gap_constant(spec: SbmSpec) -> float:
    """The alternative constant ``(1 - lambda2_bar) / (n1 dbar1)`` for the same decay.

    It differs from :func:`gap_constant` by the factor ``1 - lambda2_bar``;
    kept for side-by-side reporting only.
    """
    return (1.0 - mean_field(spec).lambda2_bar) * gap_constant(spec)


@dataclass(frozen=True)
class SpectralEstimate:
    lambda_sub: float
    iterations: int
    residual: float
    converged: bool

    @property
    def near_bipartite(self) -> bool:
        """Mixing-based step counts are meaningless when this is set."""
        return self.lambda_sub > 1.0 - 1e-6


def lambda_sub_estimate(g: Graph, tol: float = 1e-12, max_iter: int = 10_000,
                        seed: int = 0) -> SpectralEstimate:
    """``max(|lambda_2|, |lambda_n|)`` of ``W`` by deflated power iteration.

    Iterates ``R_N = D^-1/2 A D^-1/2 - s s^T`` with ``s = sqrt(d / sum d)``,
    projecting ``s`` out every step. The estimate ``||R_N v||`` is
    nondecreasing, and it is insensitive to eigenvalues of equal magnitude and
    opposite sign. Stops when successive estimates differ by less than ``tol``.
    """
    if np.any(g.degree == 0):
        raise ZeroDegreeError("lambda_sub needs every degree >= 1")
    inv_sqrt = 1.0 / np.sqrt(g.degree)
    s = np.sqrt(g.degree / g.total_degree)
    adj = g.adjacency

    def apply(v):
        w = inv_sqrt * (adj @ (inv_sqrt * v))
        return w - s * (s @ w)

    v = np.random.default_rng(seed).standard_normal(g.n)
    v -= s * (s @ v)
    norm = np.linalg.norm(v)
    if norm == 0.0:  # n == 1
        return SpectralEstimate(0.0, 0, 0.0, True)
    v /= norm
    est, converged, it = 0.0, False, 0
    for it in range(1, max_iter + 1):
        w = apply(v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return SpectralEstimate(0.0, it, 0.0, True)
        v = w / new
        if abs(new - est) < tol:
            est, converged = new, True
            break
        est = new
    w = apply(apply(v))
    residual = float(np.linalg.norm(w - est * est * v))
    return SpectralEstimate(est, it, residual, converged)


@dataclass(frozen=True)
class DeviationNorms:
    sq_l2_x: np.ndarray
    sq_l2_z: np.ndarray
    l1_x: np.ndarray
    l1_z: np.ndarray


def deviation_norms(lps: LpSequence, mf: MeanFieldLp, blocks) -> DeviationNorms:
    """Per-step distances between sampled and mean-field LPs and DNLPs.

    Step 0 is compared against ``x_0`` itself (the mean-field walk starts
    from the same distribution); later steps use the block expansion.
    """
    blocks = np.asarray(blocks)
    if blocks.shape != (lps.n,):
        raise ValueError("block assignment does not match the graph size")
    if mf.K != lps.K or mf.spec.n != lps.n:
        raise ValueError("LP sequence and mean field differ in K or n")
    m = mf.model
    dbar = np.where(blocks == 1, m.dbar1, m.dbar0)
    K = lps.K
    out = np.zeros((4, K + 1))
    for k in range(K + 1):
        xb = lps.steps[0] if k == 0 else mf.x_bar(k, blocks)
        dx = lps.steps[k] - xb
        dz = lps.z_dev[k] - (m.total_dbar * xb / dbar - 1.0)
        out[:, k] = (dx @ dx, dz @ dz, np.abs(dx).sum(), np.abs(dz).sum())
    return DeviationNorms(*out)
