"""Replicated simulation of (perturbed max, original max) pairs.

Each replication is keyed by its id: the base path, the replacing copy, the
selection draws and the observation-rate draw come from disjoint component
streams of one counter-based family, so results are reproducible bit-for-bit
regardless of worker count or scheduling.  Workers return per-replication
outcome rows that are assembled by replication index before any statistic is
computed.

Modes: "replacing" (unobserved points come from an independent copy),
"missing" (unobserved points drop out of the maximum; an all-missing
replication records -inf, which sits below every grid point), and "contrast"
(both maxima from the same base/selection/copy draws, for paired gaps).
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import limits, models, samplers
from .errors import GridMismatch, InvalidParameter, SupportTooLarge
from .norming import Norming
from .streams import BASE, COPY, DIAGNOSTIC, LAMBDA, SELECTION, StreamFactory, make_rng

CONTRAST = "contrast"
ENGINE_MODES = models.PERTURBATION_MODES + (CONTRAST,)

_CHUNK = 4096          # replications per task; fixed, not worker-dependent
_DIAG_BATCH = 1 << 16  # paths per diagnostic batch


@dataclass(frozen=True)
class ExperimentPlan:
    process: models.ProcessSpec
    selection: models.SelectionSpec
    mode: str
    n: int
    replications: int
    grid: models.EvalGrid
    seed: int
    norming: Norming

    def validate(self):
        self.process.validate()
        self.selection.validate()
        self.grid.validate()
        if self.mode not in ENGINE_MODES:
            raise InvalidParameter(f"mode must be one of {ENGINE_MODES}, got {self.mode!r}")
        if self.n < 1:
            raise InvalidParameter(f"n must be >= 1, got {self.n}")
        if self.replications < 1:
            raise InvalidParameter(f"replications must be >= 1, got {self.replications}")
        return self


@dataclass(frozen=True)
class ReplicationOutcome:
    m_perturbed: float
    m_original: float
    realized_lambda: float
    s_n_over_n: float


@dataclass(frozen=True)
class JointEcdf:
    grid: models.EvalGrid
    counts: np.ndarray          # int64, shape (len(xs), len(ys))
    replications: int

    def values(self) -> np.ndarray:
        return self.counts / self.replications


@dataclass(frozen=True)
class ComparisonReport:
    grid: models.EvalGrid
    empirical: np.ndarray
    theoretical: np.ndarray
    deviations: np.ndarray
    sup_distance: float
    mc_standard_errors: np.ndarray
    mc_standard_error: float
    replications: int
    config_echo: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MarginalReport:
    """1-D comparisons of both normalized maxima against their limit laws."""
    grid_x: tuple
    perturbed_empirical: np.ndarray
    perturbed_theory: np.ndarray
    original_empirical: np.ndarray
    original_theory: np.ndarray
    sup_perturbed: float     # exact KS distance over the whole sample
    sup_original: float
    replications: int


# ---------------------------------------------------------------------------
# one replication
# ---------------------------------------------------------------------------

def _draw_lambda(selection: models.SelectionSpec, rng) -> float:
    law = selection.lambda_law
    if selection.scheme == models.PERIODIC_PATTERN:
        return sum(selection.pattern) / len(selection.pattern)
    if isinstance(law, models.PointMass):
        return law.p
    if isinstance(law, models.Uniform01):
        return float(rng.random())
    if isinstance(law, models.BetaLaw):
        return float(rng.beta(law.alpha, law.beta))
    if isinstance(law, models.DiscreteLaw):
        cum = np.cumsum(law.probs)
        idx = int(np.searchsorted(cum, rng.random(), side="right"))
        return law.values[min(idx, len(law.values) - 1)]
    raise InvalidParameter(f"unknown lambda law {law!r}")


def _draw_selection(selection, lam, n, rng) -> np.ndarray:
    if selection.scheme == models.PERIODIC_PATTERN:
        reps = -(-n // len(selection.pattern))
        return np.tile(np.asarray(selection.pattern, dtype=bool), reps)[:n]
    return rng.random(n) < lam


def _replicate(streams: StreamFactory, rep: int, process, selection, mode, n):
    """Raw (un-normalized) maxima for one replication.

    Returns (m_missing, m_replacing, m_original, lambda, s_n/n); the entries
    not requested by ``mode`` are nan.
    """
    lam = _draw_lambda(selection, streams.rng(rep, LAMBDA))
    eps = _draw_selection(selection, lam, n, streams.rng(rep, SELECTION))
    base = samplers.process_path(process, n, streams.rng(rep, BASE))
    m_original = float(base.max())
    s = int(eps.sum())
    m_observed = float(base[eps].max()) if s > 0 else -math.inf

    m_missing = m_replacing = math.nan
    if mode in (models.MISSING, CONTRAST):
        m_missing = m_observed
    if mode in (models.REPLACING, CONTRAST):
        if s == n:
            m_replacing = m_original
        else:
            copy = samplers.process_path(process, n, streams.rng(rep, COPY))
            m_replacing = max(m_observed, float(copy[~eps].max()))
    return m_missing, m_replacing, m_original, lam, s / n


def run_replication(process, selection, mode, n, norming: Norming,
                    stream_key: tuple[int, int]) -> ReplicationOutcome:
    """Single replication addressed by stream_key = (seed, replication_id)."""
    if mode not in models.PERTURBATION_MODES:
        raise InvalidParameter(f"mode must be replacing or missing, got {mode!r}")
    seed, rep = stream_key
    streams = StreamFactory(seed)
    m_miss, m_repl, m_orig, lam, snn = _replicate(streams, rep, process, selection, mode, n)
    m_pert = m_miss if mode == models.MISSING else m_repl
    return ReplicationOutcome(
        m_perturbed=_norm(m_pert, norming),
        m_original=_norm(m_orig, norming),
        realized_lambda=lam,
        s_n_over_n=snn,
    )


def _norm(m, norming):
    if m == -math.inf:
        return -math.inf
    return norming.a * (m - norming.b)


# ---------------------------------------------------------------------------
# replicated runs
# ---------------------------------------------------------------------------

def _simulate_chunk(args):
    plan, start, stop = args
    streams = StreamFactory(plan.seed)
    out = np.empty((stop - start, 5))
    for i, rep in enumerate(range(start, stop)):
        out[i] = _replicate(streams, rep, plan.process, plan.selection,
                            plan.mode, plan.n)
    return start, out


@dataclass(frozen=True)
class ExperimentResult:
    """Assembled per-replication outcomes on the normalized scale."""

    plan: ExperimentPlan
    m_missing: np.ndarray | None
    m_replacing: np.ndarray | None
    m_original: np.ndarray
    realized_lambda: np.ndarray
    s_n_over_n: np.ndarray

    @property
    def m_perturbed(self) -> np.ndarray:
        if self.plan.mode == models.MISSING:
            return self.m_missing
        if self.plan.mode == models.REPLACING:
            return self.m_replacing
        raise InvalidParameter("contrast runs have two perturbed columns; pick one")

    def perturbed(self, which=None) -> np.ndarray:
        if which is None:
            return self.m_perturbed
        return {models.MISSING: self.m_missing, models.REPLACING: self.m_replacing}[which]

    def ecdf(self, which=None) -> JointEcdf:
        counts = _joint_counts(self.perturbed(which), self.m_original, self.plan.grid)
        return JointEcdf(self.plan.grid, counts, self.plan.replications)

    def joint_probability(self, x, y, which=None) -> float:
        mp = self.perturbed(which)
        return float(np.mean((mp <= x) & (self.m_original <= y)))

    def lambda_summary(self) -> dict:
        lam, snn = self.realized_lambda, self.s_n_over_n
        return {
            "lambda_mean": float(lam.mean()), "lambda_std": float(lam.std()),
            "lambda_min": float(lam.min()), "lambda_max": float(lam.max()),
            "s_over_n_mean": float(snn.mean()), "s_over_n_std": float(snn.std()),
        }


def run_experiment(plan: ExperimentPlan, workers: int = 1) -> ExperimentResult:
    plan.validate()
    r_total = plan.replications
    chunks = [(plan, s, min(s + _CHUNK, r_total)) for s in range(0, r_total, _CHUNK)]
    raw = np.empty((r_total, 5))
    for start, block in _map_tasks(_simulate_chunk, chunks, workers):
        raw[start: start + block.shape[0]] = block

    a, b = plan.norming.a, plan.norming.b

    def norm_col(col):
        out = np.where(np.isneginf(col), -np.inf, a * (col - b))
        return out

    m_missing = norm_col(raw[:, 0]) if plan.mode in (models.MISSING, CONTRAST) else None
    m_replacing = norm_col(raw[:, 1]) if plan.mode in (models.REPLACING, CONTRAST) else None
    return ExperimentResult(plan, m_missing, m_replacing, norm_col(raw[:, 2]),
                            raw[:, 3].copy(), raw[:, 4].copy())


def _map_tasks(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _joint_counts(m_pert, m_orig, grid):
    left = (m_pert[:, None] <= np.asarray(grid.xs)[None, :]).astype(np.int64)
    right = (m_orig[:, None] <= np.asarray(grid.ys)[None, :]).astype(np.int64)
    return left.T @ right


def estimate_joint_cdf(plan: ExperimentPlan, workers: int = 1) -> JointEcdf:
    """Empirical joint CDF of the normalized maxima on the plan grid."""
    return run_experiment(plan, workers).ecdf()


# ---------------------------------------------------------------------------
# comparisons
# ---------------------------------------------------------------------------

def compare(ecdf: JointEcdf, surface: limits.LimitSurface,
            config_echo: dict | None = None) -> ComparisonReport:
    if ecdf.grid != surface.grid:
        raise GridMismatch("empirical and theoretical grids differ")
    emp = ecdf.values()
    dev = emp - surface.values
    se = np.sqrt(emp * (1.0 - emp) / ecdf.replications)
    return ComparisonReport(
        grid=ecdf.grid, empirical=emp, theoretical=surface.values,
        deviations=dev, sup_distance=float(np.abs(dev).max()),
        mc_standard_errors=se, mc_standard_error=float(se.max()),
        replications=ecdf.replications, config_echo=dict(config_echo or {}))


def ks_distance(sample: np.ndarray, cdf_values_sorted: np.ndarray) -> float:
    """Exact Kolmogorov distance between a sample ecdf and a continuous CDF.

    ``cdf_values_sorted`` are the CDF values at the sorted sample points.
    """
    r = sample.shape[0]
    hi = np.arange(1, r + 1) / r
    lo = np.arange(0, r) / r
    return float(np.maximum(np.abs(cdf_values_sorted - hi),
                            np.abs(cdf_values_sorted - lo)).max())


def _gumbel_vec(x):
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(-x))


def limits_lambda_moment_vec(law, s):
    """Vectorized E[e^{-lambda s}]; Beta uses the Kummer closed form, which
    the quadrature route is cross-checked against in the tests."""
    s = np.asarray(s, dtype=float)
    if isinstance(law, models.PointMass):
        return np.exp(-law.p * s)
    if isinstance(law, models.Uniform01):
        out = np.ones_like(s)
        nz = s != 0
        out[nz] = -np.expm1(-s[nz]) / s[nz]
        return out
    if isinstance(law, models.DiscreteLaw):
        return sum(p * np.exp(-v * s) for v, p in zip(law.values, law.probs))
    if isinstance(law, models.BetaLaw):
        import scipy.special
        return scipy.special.hyp1f1(law.alpha, law.alpha + law.beta, -s)
    raise InvalidParameter(f"unknown lambda law {law!r}")


def marginal_check(result: ExperimentResult, which=None) -> MarginalReport:
    """Both 1-D marginals against their limit laws (sup = exact KS distance)."""
    plan = result.plan
    xs = np.asarray(plan.grid.xs)
    mp = np.sort(result.perturbed(which))
    mo = np.sort(result.m_original)

    if (which or plan.mode) == models.MISSING:
        law = plan.selection.lambda_law
        with np.errstate(over="ignore"):
            pert_theory_sorted = limits_lambda_moment_vec(law, np.exp(-mp))
            pert_theory_grid = limits_lambda_moment_vec(law, np.exp(-xs))
    else:
        pert_theory_sorted = _gumbel_vec(mp)
        pert_theory_grid = _gumbel_vec(xs)

    r = plan.replications
    return MarginalReport(
        grid_x=plan.grid.xs,
        perturbed_empirical=np.searchsorted(mp, xs, side="right") / r,
        perturbed_theory=pert_theory_grid,
        original_empirical=np.searchsorted(mo, xs, side="right") / r,
        original_theory=_gumbel_vec(xs),
        sup_perturbed=ks_distance(mp, pert_theory_sorted),
        sup_original=ks_distance(mo, _gumbel_vec(mo)),
        replications=r,
    )


# ---------------------------------------------------------------------------
# D'(u_n) anti-clustering diagnostic
# ---------------------------------------------------------------------------

def _dprime_batch(args):
    process, t, u, seed, batch_idx, rows = args
    rng = make_rng(seed, batch_idx, DIAGNOSTIC)
    paths = samplers.process_matrix(process, t, rows, rng)
    exceed = paths > u
    hits = exceed[:, :1] & exceed[:, 1:]
    return batch_idx, hits.sum(axis=0).astype(np.int64)


def dprime_diagnostic(process, n, k, x_level, norming, replications,
                      seed=0, workers: int = 1) -> float:
    """Monte Carlo estimate of n * sum_{j=2..floor(n/k)} P[X_1>u, X_j>u].

    Each pairwise probability is the empirical frequency over ``replications``
    paths of length floor(n/k); u = u_n(x_level).  Batched in fixed-size
    blocks keyed (seed, batch, diagnostic-tag).
    """
    if k < 2 or n // k < 2:
        return 0.0
    t = n // k
    u = float(norming.u(x_level))
    tasks = []
    done = 0
    idx = 0
    while done < replications:
        rows = min(_DIAG_BATCH, replications - done)
        tasks.append((process, t, u, seed, idx, rows))
        done += rows
        idx += 1
    total = np.zeros(t - 1, dtype=np.int64)
    for _, counts in sorted(_map_tasks(_dprime_batch, tasks, workers)):
        total += counts
    return float(n * total.sum() / replications)


# ---------------------------------------------------------------------------
# marginal tail estimates (norming calibration)
# ---------------------------------------------------------------------------

def _tail_batch(args):
    process, u, seed, batch_idx, size = args
    rng = make_rng(seed, batch_idx, DIAGNOSTIC)
    return batch_idx, int((samplers.marginal_draws(process, size, rng) > u).sum())


def estimate_marginal_tail(process, u, draws, seed=0, workers: int = 1,
                           batch=1 << 21) -> float:
    """Empirical P(X_1 > u) from iid marginal draws."""
    tasks = []
    done, idx = 0, 0
    while done < draws:
        size = min(batch, draws - done)
        tasks.append((process, u, seed, idx, size))
        done += size
        idx += 1
    hits = sum(c for _, c in _map_tasks(_tail_batch, tasks, workers))
    return hits / draws


# ---------------------------------------------------------------------------
# exact enumeration oracle
# ---------------------------------------------------------------------------

def brute_force_joint_cdf(values, probs, pattern, mode, x, y,
                          term_budget: int = 10 ** 8) -> float:
    """Exact P[M_n(perturbed) <= x, M_n(X) <= y] for an iid discrete marginal
    and a fixed 0/1 selection pattern, by literal enumeration.

    Replacing mode enumerates the path and the copy restricted to unselected
    indices; missing mode enumerates the path only.
    """
    n = len(pattern)
    if n < 1 or n > 6:
        raise InvalidParameter(f"enumeration oracle supports 1 <= n <= 6, got {n}")
    if mode not in models.PERTURBATION_MODES:
        raise InvalidParameter(f"mode must be replacing or missing, got {mode!r}")
    k = len(values)
    if k != len(probs) or k == 0:
        raise InvalidParameter("values/probs must be nonempty and match")
    unsel = [i for i, b in enumerate(pattern) if not b]
    sel = [i for i, b in enumerate(pattern) if b]
    copy_len = len(unsel) if mode == models.REPLACING else 0
    if k ** (n + copy_len) > term_budget:
        raise SupportTooLarge(
            f"enumeration needs {k}^{n + copy_len} terms, budget is {term_budget}")

    total = 0.0
    for path in itertools.product(range(k), repeat=n):
        p_path = math.prod(probs[i] for i in path)
        if max(values[i] for i in path) > y:
            continue
        if any(values[path[i]] > x for i in sel):
            continue
        if mode == models.MISSING:
            total += p_path
            continue
        for copy in itertools.product(range(k), repeat=copy_len):
            if any(values[c] > x for c in copy):
                continue
            total += p_path * math.prod(probs[c] for c in copy)
    return total
