"""Exact samplers for finite stationary paths.

Gaussian paths use circulant embedding (even extension padded to a power of
two, O(n log n)) when the embedding spectrum is nonnegative, the exact
autoregressive recursion for AR1, direct moving-average convolution for
m-dependent kernels, and a dense symmetric square root of the Toeplitz
covariance as a small-n fallback.  Chi and order-statistic sequences combine
d independent Gaussian paths drawn from one replication stream.

Factorizations depend only on (covariance, n) and are cached per process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.signal

from . import models
from .errors import InvalidParameter, NonPSDCovariance, UnknownMarginal

SPECTRAL_TOL = -1e-9
DENSE_FALLBACK_MAX_N = 2048


@dataclass(frozen=True)
class Path:
    """One simulated trajectory."""

    values: np.ndarray
    process: models.ProcessSpec
    replication_id: int = 0


def spectral_check(cov: models.CovarianceSpec, n: int) -> float:
    """Minimum eigenvalue of the even circulant extension of (r_0..r_{n-1}).

    The extension has length 2n-2; its eigenvalues are the DFT of the
    extended sequence.  Circulant embedding at this length is feasible iff
    the minimum clears SPECTRAL_TOL.
    """
    if n < 2:
        raise InvalidParameter(f"spectral_check needs n >= 2, got {n}")
    r = cov.r_vector(n)
    ring = np.concatenate([r, r[-2:0:-1]])
    return float(np.fft.fft(ring).real.min())


def _embedding_length(n: int) -> int:
    m0 = max(2, 2 * (n - 1))
    return 1 << (m0 - 1).bit_length()


_plan_cache: dict = {}


def _gaussian_plan(cov: models.CovarianceSpec, n: int):
    """Factorization plan for (cov, n): embedding weights or dense root."""
    key = (cov, n)
    plan = _plan_cache.get(key)
    if plan is not None:
        return plan
    m = _embedding_length(n)
    r = cov.r_vector(m // 2 + 1)
    ring = np.empty(m)
    ring[: m // 2 + 1] = r
    ring[m // 2 + 1:] = r[-2:0:-1]
    eig = np.fft.fft(ring).real
    if eig.min() >= SPECTRAL_TOL:
        weights = np.sqrt(np.clip(eig, 0.0, None) / m)
        plan = ("embed", weights)
    elif n <= DENSE_FALLBACK_MAX_N:
        toep = scipy.linalg.toeplitz(cov.r_vector(n))
        vals, vecs = np.linalg.eigh(toep)
        if vals.min() < SPECTRAL_TOL * max(1.0, vals.max()):
            raise NonPSDCovariance(
                f"covariance {cov} is not PSD at n={n} "
                f"(min embedding eigenvalue {eig.min():.3e}, "
                f"min Toeplitz eigenvalue {vals.min():.3e})")
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))
        plan = ("dense", root)
    else:
        raise NonPSDCovariance(
            f"embedding spectrum of {cov} negative at n={n} "
            f"(min {eig.min():.3e}) and n exceeds the dense fallback bound")
    _plan_cache[key] = plan
    return plan


def gaussian_matrix(cov: models.CovarianceSpec, n: int, rows: int,
                    rng: np.random.Generator) -> np.ndarray:
    """rows independent stationary Gaussian paths, shape (rows, n)."""
    if n < 1:
        raise InvalidParameter(f"need n >= 1, got {n}")
    if isinstance(cov, models.IID):
        return rng.standard_normal((rows, n))
    if n == 1:
        return rng.standard_normal((rows, 1))
    if isinstance(cov, models.AR1):
        z = rng.standard_normal((rows, n))
        z[:, 1:] *= math.sqrt(1.0 - cov.rho ** 2)
        return scipy.signal.lfilter([1.0], [1.0, -cov.rho], z, axis=1)
    if isinstance(cov, models.MDependent):
        w = cov.weights
        z = rng.standard_normal((rows, n + cov.m))
        out = w[0] * z[:, : n]
        for j in range(1, len(w)):
            out += w[j] * z[:, j: j + n]
        return out
    kind, payload = _gaussian_plan(cov, n)
    if kind == "embed":
        weights = payload
        m = weights.shape[0]
        z = rng.standard_normal((rows, 2 * m))
        zc = z[:, :m] + 1j * z[:, m:]
        return np.fft.fft(weights * zc, axis=1)[:, :n].real
    root = payload
    return rng.standard_normal((rows, n)) @ root.T


def sample_gaussian_path(cov, n, rng, replication_id=0) -> Path:
    cov = cov.validate()
    values = gaussian_matrix(cov, n, 1, rng)[0]
    return Path(values, models.GaussianProcess(cov), replication_id)


def chi_matrix(d, cov, n, rows, rng):
    g = gaussian_matrix(cov, n, d * rows, rng).reshape(d, rows, n)
    return np.sqrt(np.einsum("drn,drn->rn", g, g))


def sample_chi_path(d, cov, n, rng, replication_id=0) -> Path:
    proc = models.ChiProcess(d, cov).validate()
    return Path(chi_matrix(d, cov, n, 1, rng)[0], proc, replication_id)


def order_stat_matrix(d, r, cov, n, rows, rng):
    g = gaussian_matrix(cov, n, d * rows, rng).reshape(d, rows, n)
    if d == 1:
        return g[0]
    # r-th largest = element at index d-r of the partially sorted axis
    return np.partition(g, d - r, axis=0)[d - r]


def sample_order_stat_path(d, r, cov, n, rng, replication_id=0) -> Path:
    proc = models.OrderStatProcess(d, r, cov).validate()
    return Path(order_stat_matrix(d, r, cov, n, 1, rng)[0], proc, replication_id)


def iid_matrix(marginal: models.Marginal, n: int, rows: int, rng) -> np.ndarray:
    name = marginal.name
    if name == "exponential":
        return rng.standard_exponential((rows, n))
    if name == "uniform":
        return rng.random((rows, n))
    if name == "frechet":
        return 1.0 / rng.standard_exponential((rows, n))
    if name == "pareto":
        return rng.random((rows, n)) ** (-1.0 / marginal.alpha)
    if name == "discrete":
        cum = np.cumsum(marginal.probs)
        idx = np.searchsorted(cum, rng.random((rows, n)), side="right")
        return np.asarray(marginal.values)[np.minimum(idx, len(cum) - 1)]
    raise UnknownMarginal(f"unknown marginal {name!r}")


def sample_generic_iid_path(marginal, n, rng, replication_id=0) -> Path:
    marginal = marginal.validate()
    return Path(iid_matrix(marginal, n, 1, rng)[0],
                models.GenericIIDProcess(marginal), replication_id)


# ---------------------------------------------------------------------------
# process-level dispatch used by the engine and the diagnostics
# ---------------------------------------------------------------------------

def process_path(process: models.ProcessSpec, n: int, rng) -> np.ndarray:
    """One path as a bare array (hot loop; no Path wrapper)."""
    if isinstance(process, models.GaussianProcess):
        return gaussian_matrix(process.cov, n, 1, rng)[0]
    if isinstance(process, models.ChiProcess):
        return chi_matrix(process.d, process.cov, n, 1, rng)[0]
    if isinstance(process, models.OrderStatProcess):
        return order_stat_matrix(process.d, process.r, process.cov, n, 1, rng)[0]
    if isinstance(process, models.GenericIIDProcess):
        return iid_matrix(process.marginal, n, 1, rng)[0]
    raise InvalidParameter(f"unknown process spec {process!r}")


def process_matrix(process: models.ProcessSpec, n: int, rows: int, rng) -> np.ndarray:
    """rows independent paths, shape (rows, n); batched diagnostics."""
    if isinstance(process, models.GaussianProcess):
        return gaussian_matrix(process.cov, n, rows, rng)
    if isinstance(process, models.ChiProcess):
        return chi_matrix(process.d, process.cov, n, rows, rng)
    if isinstance(process, models.OrderStatProcess):
        return order_stat_matrix(process.d, process.r, process.cov, n, rows, rng)
    if isinstance(process, models.GenericIIDProcess):
        return iid_matrix(process.marginal, n, rows, rng)
    raise InvalidParameter(f"unknown process spec {process!r}")


def marginal_draws(process: models.ProcessSpec, size: int, rng) -> np.ndarray:
    """iid draws from the process marginal (tail-calibration diagnostics).

    The marginal of every stationary family here does not depend on the
    covariance, so a single time slice is drawn directly.
    """
    if isinstance(process, models.GaussianProcess):
        return rng.standard_normal(size)
    if isinstance(process, models.ChiProcess):
        g = rng.standard_normal((process.d, size))
        return np.sqrt(np.einsum("ds,ds->s", g, g))
    if isinstance(process, models.OrderStatProcess):
        g = rng.standard_normal((process.d, size))
        if process.d == 1:
            return g[0]
        return np.partition(g, process.d - process.r, axis=0)[process.d - process.r]
    if isinstance(process, models.GenericIIDProcess):
        return iid_matrix(process.marginal, size, 1, rng)[0]
    raise InvalidParameter(f"unknown process spec {process!r}")
