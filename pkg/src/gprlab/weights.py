"""Weight sequences for generalized PageRank.

Families: ``ppr`` (geometric), ``hpr`` (Poisson / heat kernel), ``ipr-d``
(inverse PageRank on degree-normalized features, ``theta**-k``), ``ipr-u``
(inverse PageRank on raw features, ``theta**k / (phi + theta**k)**2``),
``pseudo-fisher`` and ``custom``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class WeightScheme:
    family: str
    params: tuple = ()
    gamma: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gamma must be a nonempty 1-d sequence")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("weights must be finite and nonnegative")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def K(self) -> int:
        return self.gamma.size - 1

    @property
    def label(self) -> str:
        return ":".join([self.family, *map(_fmt, self.params)])

    def rescaled(self) -> "WeightScheme":
        """Divide by the largest weight. Rankings are unchanged."""
        top = self.gamma.max()
        if top == 0:
            return self
        return WeightScheme(self.family, self.params, self.gamma / top)

    def __mul__(self, c: float) -> "WeightScheme":
        if c <= 0:
            raise ValueError("scale must be positive")
        return WeightScheme(self.family, self.params, self.gamma * c)

    __rmul__ = __mul__


def _fmt(p) -> str:
    return p if isinstance(p, str) else f"{p:g}"


def _check_K(K: int):
    if K < 0:
        raise ValueError("K must be >= 0")


def ppr_weights(alpha: float, K: int) -> WeightScheme:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} is not in (0, 1)")
    _check_K(K)
    k = np.arange(K + 1)
    return WeightScheme("ppr", (alpha,), (1.0 - alpha) * alpha ** k)


def hpr_weights(h: float, K: int) -> WeightScheme:
    if not h > 0:
        raise ValueError(f"h={h} must be positive")
    _check_K(K)
    # log gamma_{k+1} = log gamma_k + log h - log(k+1)
    k = np.arange(K + 1)
    steps = np.concatenate([[-h], math.log(h) - np.log(k[1:])])
    return WeightScheme("hpr", (h,), np.exp(np.cumsum(steps)))


def ipr_normalized_weights(theta: float, K: int) -> WeightScheme:
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta={theta} is not in (0, 1)")
    _check_K(K)
    with np.errstate(over="ignore"):
        gamma = np.exp(-np.arange(K + 1) * math.log(theta))
    if not np.all(np.isfinite(gamma)):
        raise OverflowError(f"theta**-K overflows for theta={theta}, K={K}")
    return WeightScheme("ipr-d", (theta,), gamma)


def ipr_unnormalized_weights(theta: float, K: int, phi: float | None = None) -> WeightScheme:
    """``theta**k / (phi + theta**k)**2``; ``phi`` defaults to ``theta**10``.

    The default puts the peak at ``k = 10``.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta={theta} is not in (0, 1)")
    auto = phi is None
    if auto:
        phi = theta ** 10
    if not phi > 0:
        raise ValueError(f"phi={phi} must be positive")
    _check_K(K)
    t = theta ** np.arange(K + 1)
    return WeightScheme("ipr-u", (theta, "auto" if auto else phi), t / (phi + t) ** 2)


@dataclass(frozen=True)
class FeatureMoments:
    mean_gap: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        if np.shape(self.mean_gap) != np.shape(self.variance):
            raise ValueError("mean gaps and variances differ in length")


def pseudo_fisher_weights(m: FeatureMoments) -> WeightScheme:
    """Per-step mean gap over variance, ignoring cross-step correlations.

    Negative weights are clamped to zero with a warning, since GPR weights
    must be nonnegative.
    """
    gap = np.asarray(m.mean_gap, dtype=np.float64)
    var = np.asarray(m.variance, dtype=np.float64)
    if np.any(var <= 0):
        raise ValueError(f"zero or negative variance at step {int(np.flatnonzero(var <= 0)[0])}")
    gamma = gap / var
    if np.any(gamma < 0):
        warnings.warn(f"pseudo-Fisher: clamped {int((gamma < 0).sum())} negative weights to 0",
                      RuntimeWarning, stacklevel=2)
        gamma = np.maximum(gamma, 0.0)
    return WeightScheme("pseudo-fisher", (), gamma)


def empirical_feature_moments(features: np.ndarray, in_class) -> FeatureMoments:
    """Class-mean gap and pooled within-class variance of each step's feature.

    ``features`` has shape (K+1, n); ``in_class`` is a boolean mask of the
    target community.
    """
    mask = np.asarray(in_class, dtype=bool)
    a, b = features[:, mask], features[:, ~mask]
    gap = a.mean(axis=1) - b.mean(axis=1)
    var = (((a - a.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)
           + ((b - b.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)) / max(features.shape[1] - 2, 1)
    return FeatureMoments(gap, var)


def custom_weights(values, K: int | None = None) -> WeightScheme:
    gamma = np.asarray(values, dtype=np.float64)
    if K is not None:
        if K + 1 > gamma.size:
            raise ValueError(f"custom weights define {gamma.size} steps, {K + 1} requested")
        gamma = gamma[:K + 1]
    return WeightScheme("custom", (), gamma)


def read_custom_weights(path) -> np.ndarray:
    """One weight per line; blank lines and ``#`` comments skipped."""
    vals = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            vals.append(float(s))
    return np.array(vals)


# normalization each family is meant for
_NATURAL_NORMALIZATION = {"ppr": True, "hpr": True, "ipr-d": True, "ipr-u": False,
                          "pseudo-fisher": True, "custom": True}


@dataclass(frozen=True)
class SchemeSpec:
    """A parsed ``--scheme`` value; :meth:`build` fixes the step count.

    Grammar: ``ppr:ALPHA | hpr:H | ipr-d:THETA | ipr-u:THETA[:PHI|:auto] |
    custom:PATH``. ``ppr-d``/``hpr-d`` and ``ppr-u``/``hpr-u`` pin the
    normalization explicitly.
    """

    family: str
    params: tuple = ()
    normalized: bool | None = None
    text: str = ""

    def build(self, K: int) -> WeightScheme:
        f, p = self.family, self.params
        if f == "ppr":
            return ppr_weights(p[0], K)
        if f == "hpr":
            return hpr_weights(p[0], K)
        if f == "ipr-d":
            return ipr_normalized_weights(p[0], K)
        if f == "ipr-u":
            return ipr_unnormalized_weights(p[0], K, None if p[1] == "auto" else p[1])
        if f == "custom":
            return custom_weights(p[1], K)
        raise ValueError(f"unknown family {f!r}")

    @property
    def natural_normalization(self) -> bool:
        if self.normalized is not None:
            return self.normalized
        return _NATURAL_NORMALIZATION[self.family]

    @property
    def label(self) -> str:
        return self.text or ":".join([self.family, *map(_fmt, self.params)])


def parse_scheme(text: str) -> SchemeSpec:
    parts = text.strip().split(":")
    head, args = parts[0].lower(), parts[1:]
    try:
        if head in ("ppr", "ppr-d", "ppr-u", "hpr", "hpr-d", "hpr-u"):
            family, _, suffix = head.partition("-")
            if len(args) != 1:
                raise ValueError
            normalized = {"d": True, "u": False}.get(suffix)
            spec = SchemeSpec(family, (float(args[0]),), normalized, text)
        elif head == "ipr-d":
            if len(args) != 1:
                raise ValueError
            spec = SchemeSpec("ipr-d", (float(args[0]),), None, text)
        elif head == "ipr-u":
            if len(args) not in (1, 2):
                raise ValueError
            phi = "auto" if len(args) == 1 or args[1] == "auto" else float(args[1])
            spec = SchemeSpec("ipr-u", (float(args[0]), phi), None, text)
        elif head == "custom":
            path = ":".join(args)
            if not path:
                raise ValueError
            spec = SchemeSpec("custom", (path, tuple(read_custom_weights(path))), None, text)
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f"bad scheme {text!r}; expected ppr:A | hpr:H | ipr-d:T | "
                         f"ipr-u:T[:PHI|auto] | custom:PATH") from None
    spec.build(0)  # parameter range checks
    return spec
