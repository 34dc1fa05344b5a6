"""Declarative experiment specifications.

Covariance structures, process families, selection (observation) schemes,
lambda laws, perturbation modes and evaluation grids.  All types are frozen
dataclasses: validation happens once, after which instances are immutable and
safe to share across worker processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter

REPLACING = "replacing"
MISSING = "missing"
PERTURBATION_MODES = (REPLACING, MISSING)


# ---------------------------------------------------------------------------
# covariance specifications
# ---------------------------------------------------------------------------

class CovarianceSpec:
    """Stationary unit-variance covariance sequence r_k.

    ``mixing_asserted`` records whether the built-in decay guarantees
    r_k log k -> 0 (true for every built-in family; Explicit sequences are
    accepted as-is and flagged unverified).
    """

    mixing_asserted: bool = True

    def r(self, k: int) -> float:
        raise NotImplementedError

    def r_vector(self, n: int) -> np.ndarray:
        """Covariance at lags 0..n-1."""
        return np.array([self.r(k) for k in range(n)])

    def validate(self) -> "CovarianceSpec":
        return self


@dataclass(frozen=True)
class IID(CovarianceSpec):
    """White sequence, r_k = 0 for k >= 1."""

    def r(self, k):
        return 1.0 if k == 0 else 0.0

    def r_vector(self, n):
        out = np.zeros(n)
        out[0] = 1.0
        return out


@dataclass(frozen=True)
class AR1(CovarianceSpec):
    """Geometric decay r_k = rho^k (exact first-order autoregression)."""

    rho: float

    def validate(self):
        if not (-1.0 < self.rho < 1.0):
            raise InvalidParameter(f"AR1 rho must be in (-1, 1), got {self.rho}")
        return self

    def r(self, k):
        return self.rho ** k

    def r_vector(self, n):
        return self.rho ** np.arange(n)


@dataclass(frozen=True)
class PowerDecay(CovarianceSpec):
    """Polynomial decay r_k = scale * (1+k)^(-gamma) for k >= 1, r_0 = 1."""

    gamma: float
    scale: float = 1.0

    def validate(self):
        if self.gamma <= 0:
            raise InvalidParameter(f"PowerDecay gamma must be > 0, got {self.gamma}")
        if abs(self.scale) * 2.0 ** (-self.gamma) > 1.0:
            raise InvalidParameter(
                f"PowerDecay scale {self.scale} gives |r_1| > 1 at gamma={self.gamma}")
        return self

    def r(self, k):
        return 1.0 if k == 0 else self.scale * (1.0 + k) ** (-self.gamma)

    def r_vector(self, n):
        k = np.arange(n)
        out = self.scale * (1.0 + k) ** (-self.gamma)
        out[0] = 1.0
        return out


@dataclass(frozen=True)
class MDependent(CovarianceSpec):
    """Moving-average kernel over m+1 lags; r_k = 0 for k > m.

    Weights are normalized to unit sum of squares at validation so the
    implied sequence has r_0 = 1.
    """

    m: int
    weights: tuple[float, ...]

    def validate(self):
        if self.m < 1:
            raise InvalidParameter(f"MDependent m must be >= 1, got {self.m}")
        if len(self.weights) != self.m + 1:
            raise InvalidParameter(
                f"MDependent needs m+1 = {self.m + 1} weights, got {len(self.weights)}")
        norm = math.sqrt(sum(w * w for w in self.weights))
        if norm == 0 or not math.isfinite(norm):
            raise InvalidParameter("MDependent weights must have positive finite norm")
        object.__setattr__(self, "weights", tuple(w / norm for w in self.weights))
        return self

    def r(self, k):
        if k > self.m:
            return 0.0
        w = self.weights
        return sum(w[j] * w[j + k] for j in range(len(w) - k))

    def r_vector(self, n):
        return np.array([self.r(k) for k in range(n)])


@dataclass(frozen=True)
class Explicit(CovarianceSpec):
    """Covariance given literally; zero beyond the listed lags.

    Mixing cannot be checked from a finite list, so these are flagged
    ``mixing_asserted = False``; positive semidefiniteness is established
    constructively by the sampler's spectral test at the requested length.
    """

    values: tuple[float, ...]
    mixing_asserted = False

    def validate(self):
        if not self.values or abs(self.values[0] - 1.0) > 1e-12:
            raise InvalidParameter("Explicit covariance must start with r_0 = 1")
        if any(abs(v) > 1.0 or not math.isfinite(v) for v in self.values):
            raise InvalidParameter("Explicit covariance entries must be finite with |r_k| <= 1")
        return self

    def r(self, k):
        return self.values[k] if k < len(self.values) else 0.0

    def r_vector(self, n):
        out = np.zeros(n)
        upto = min(n, len(self.values))
        out[:upto] = self.values[:upto]
        return out


# ---------------------------------------------------------------------------
# marginals for the generic iid family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Marginal:
    """Named iid marginal: exponential, uniform, frechet, pareto or discrete.

    ``discrete`` (finite support with probabilities) exists so the engine can
    be driven against the exact enumeration oracle; the continuous names are
    the simulation catalogue proper.
    """

    name: str
    alpha: float | None = None          # pareto shape
    values: tuple[float, ...] | None = None   # discrete support
    probs: tuple[float, ...] | None = None

    _KNOWN = ("exponential", "uniform", "frechet", "pareto", "discrete")

    def validate(self):
        if self.name not in self._KNOWN:
            from .errors import UnknownMarginal
            raise UnknownMarginal(f"unknown marginal {self.name!r}; expected one of {self._KNOWN}")
        if self.name == "pareto":
            if self.alpha is None or self.alpha <= 0:
                raise InvalidParameter("pareto marginal needs alpha > 0")
        if self.name == "discrete":
            if not self.values or not self.probs or len(self.values) != len(self.probs):
                raise InvalidParameter("discrete marginal needs matching values/probs")
            if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
                raise InvalidParameter("discrete probs must be nonnegative and sum to 1")
        return self


# ---------------------------------------------------------------------------
# process specifications
# ---------------------------------------------------------------------------

class ProcessSpec:
    """Which stationary sequence to simulate."""

    def validate(self) -> "ProcessSpec":
        return self


@dataclass(frozen=True)
class GaussianProcess(ProcessSpec):
    cov: CovarianceSpec = field(default_factory=IID)

    def validate(self):
        self.cov.validate()
        return self


@dataclass(frozen=True)
class ChiProcess(ProcessSpec):
    """chi_t = sqrt(sum of squares of d independent Gaussian coordinates)."""

    d: int
    cov: CovarianceSpec = field(default_factory=IID)

    def validate(self):
        if self.d < 1:
            raise InvalidParameter(f"chi needs d >= 1, got {self.d}")
        self.cov.validate()
        return self


@dataclass(frozen=True)
class OrderStatProcess(ProcessSpec):
    """r-th largest of d independent Gaussian coordinates at each time."""

    d: int
    r: int
    cov: CovarianceSpec = field(default_factory=IID)

    def validate(self):
        if self.d < 1:
            raise InvalidParameter(f"order statistic needs d >= 1, got {self.d}")
        if not (1 <= self.r <= self.d):
            raise InvalidParameter(f"order statistic needs 1 <= r <= d, got r={self.r}, d={self.d}")
        self.cov.validate()
        return self


@dataclass(frozen=True)
class GenericIIDProcess(ProcessSpec):
    marginal: Marginal = field(default_factory=lambda: Marginal("exponential"))

    def validate(self):
        self.marginal.validate()
        return self


# ---------------------------------------------------------------------------
# lambda laws and selection schemes
# ---------------------------------------------------------------------------

class LambdaLaw:
    """Law of the limiting observation rate, supported on [0, 1]."""

    def validate(self) -> "LambdaLaw":
        return self


@dataclass(frozen=True)
class PointMass(LambdaLaw):
    p: float

    def validate(self):
        if not (0.0 <= self.p <= 1.0):
            raise InvalidParameter(f"PointMass needs p in [0,1], got {self.p}")
        return self


@dataclass(frozen=True)
class Uniform01(LambdaLaw):
    pass


@dataclass(frozen=True)
class BetaLaw(LambdaLaw):
    alpha: float
    beta: float

    def validate(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise InvalidParameter(
                f"Beta law needs alpha, beta > 0, got ({self.alpha}, {self.beta})")
        return self


@dataclass(frozen=True)
class DiscreteLaw(LambdaLaw):
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def validate(self):
        if not self.values or len(self.values) != len(self.probs):
            raise InvalidParameter("Discrete law needs matching values/probs")
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise InvalidParameter("Discrete law support must lie in [0,1]")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise InvalidParameter("Discrete law probs must be nonnegative and sum to 1")
        return self


CONDITIONALLY_IID = "conditionally_iid"
PERIODIC_PATTERN = "periodic_pattern"


@dataclass(frozen=True)
class SelectionSpec:
    """Bernoulli observation sequence.

    conditionally_iid: draw Lambda from lambda_law once per replication, then
    eps_i iid Bernoulli(Lambda).  periodic_pattern: repeat a fixed 0/1 word;
    only valid when lambda_law is the point mass at the pattern mean (that is
    the in-probability limit of S_n/n for this scheme).
    """

    lambda_law: LambdaLaw
    scheme: str = CONDITIONALLY_IID
    pattern: tuple[int, ...] | None = None

    def validate(self):
        self.lambda_law.validate()
        if self.scheme == CONDITIONALLY_IID:
            if self.pattern is not None:
                raise InvalidParameter("conditionally_iid selection takes no pattern")
        elif self.scheme == PERIODIC_PATTERN:
            if not self.pattern or any(b not in (0, 1) for b in self.pattern):
                raise InvalidParameter("periodic_pattern needs a nonempty 0/1 pattern")
            mean = sum(self.pattern) / len(self.pattern)
            law = self.lambda_law
            if not isinstance(law, PointMass) or abs(law.p - mean) > 1e-12:
                raise InvalidParameter(
                    f"periodic pattern with mean {mean} requires PointMass({mean}) lambda law")
        else:
            raise InvalidParameter(f"unknown selection scheme {self.scheme!r}")
        return self


# ---------------------------------------------------------------------------
# evaluation grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalGrid:
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def validate(self):
        for name, axis in (("xs", self.xs), ("ys", self.ys)):
            if not axis:
                raise InvalidParameter(f"grid {name} must be nonempty")
            if any(not math.isfinite(v) for v in axis):
                raise InvalidParameter(f"grid {name} must be finite")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise InvalidParameter(f"grid {name} must be strictly increasing")
        return self

    @property
    def shape(self):
        return (len(self.xs), len(self.ys))


def validate_spec(spec):
    """Validate any spec object; returns it unchanged or raises InvalidParameter.

    Pure and deterministic: the same input always yields the same outcome.
    Positive semidefiniteness of covariances is a sample-time (spectral)
    check, not a validation-time one.
    """
    return spec.validate()
