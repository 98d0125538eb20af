"""Exact samplers for fractional Brownian motion on uniform grids.

Two exact-in-distribution methods are provided: a dense Cholesky factor of
the path covariance and FFT circulant embedding of the increment
autocovariance (Davies-Harte). Both draw their Gaussian variates from a
per-replica Philox stream, so replica ``i`` of a run is the same path no
matter how replicas are chunked or threaded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "Method",
    "FbmConfig",
    "SampledPath",
    "SamplerError",
    "fbm_covariance",
    "covariance_matrix",
    "increment_autocovariance",
    "replica_stream",
    "sample_cholesky",
    "sample_circulant",
    "sample_paths",
    "CHOLESKY_CAP",
]

CHOLESKY_CAP = 4096
EIG_TOL = 1e-10


class SamplerError(RuntimeError):
    """Raised when an exact sampler cannot factor its covariance."""


class Method(str, enum.Enum):
    CHOLESKY = "cholesky"
    CIRCULANT = "circulant"


@dataclass(frozen=True)
class FbmConfig:
    """Sampling parameters; the grid is ``t_i = i * horizon / steps``."""

    hurst: float = 0.75
    horizon: float = 1.0
    steps: int = 1024
    seed: int = 42
    method: Method = Method.CIRCULANT

    def __post_init__(self) -> None:
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "method", Method(self.method))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * (self.horizon / self.steps)


@dataclass(frozen=True)
class SampledPath:
    """Values of a function on an increasing grid starting at 0."""

    times: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size == 0 or times[0] != 0.0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.times.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def _check_hurst(hurst: float) -> None:
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")


def fbm_covariance(s, t, hurst: float):
    """``E[B_s B_t] = (t^2H + s^2H - |t - s|^2H) / 2``; broadcasts over arrays."""
    _check_hurst(hurst)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("times must be non-negative")
    two_h = 2.0 * hurst
    out = 0.5 * (t**two_h + s**two_h - np.abs(t - s) ** two_h)
    return float(out) if out.ndim == 0 else out


def covariance_matrix(hurst: float, horizon: float, steps: int) -> np.ndarray:
    """Covariance of ``(B_{t_1}, ..., B_{t_n})`` on the uniform grid."""
    t = np.arange(1, steps + 1) * (horizon / steps)
    return fbm_covariance(t[:, None], t[None, :], hurst)


def increment_autocovariance(hurst: float, lags: np.ndarray) -> np.ndarray:
    """Autocovariance of unit-spaced fractional Gaussian noise at integer lags."""
    k = np.abs(np.asarray(lags, dtype=float))
    two_h = 2.0 * hurst
    return 0.5 * ((k + 1) ** two_h + np.abs(k - 1) ** two_h - 2.0 * k**two_h)


def replica_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for replica ``index`` of a run seeded by ``seed``.

    The 128-bit Philox key is ``seed << 64 | index``; normals come from numpy's
    ziggurat transform of the Philox output.
    """
    if not 0 <= seed < 2**64 or not 0 <= index < 2**64:
        raise ValueError("seed and index must be 64-bit unsigned integers")
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def _normals(seed: int, indices: range, size: int) -> np.ndarray:
    out = np.empty((len(indices), size))
    for row, idx in enumerate(indices):
        out[row] = replica_stream(seed, idx).standard_normal(size)
    return out


@lru_cache(maxsize=16)
def _cholesky_factor(hurst: float, horizon: float, steps: int) -> np.ndarray:
    cov = covariance_matrix(hurst, horizon, steps)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # Recover the failing pivot for the error message.
        pivots = np.diag(np.linalg.qr(cov, mode="r"))
        raise SamplerError(
            "fBm covariance matrix is not numerically positive definite "
            f"(smallest pivot magnitude {np.min(np.abs(pivots)):.3e})"
        ) from None
    factor.flags.writeable = False
    return factor


@lru_cache(maxsize=16)
def _circulant_sqrt_eigs(hurst: float, steps: int, eig_tol: float) -> np.ndarray:
    m = 2 * steps
    lags = np.concatenate([np.arange(steps + 1), np.arange(steps - 1, 0, -1)])
    row = increment_autocovariance(hurst, lags)
    eigs = np.fft.rfft(row).real
    tol = eig_tol * eigs.max()
    if eigs.min() < -tol:
        bad = int(np.argmin(eigs))
        raise SamplerError(
            f"circulant embedding has eigenvalue {eigs[bad]:.3e} at index {bad} "
            f"below -{tol:.3e} (hurst={hurst}, steps={steps})"
        )
    eigs = np.clip(eigs, 0.0, None)
    # Hermitian-symmetric noise: interior modes carry half the variance
    # in each of their real and imaginary parts.
    scale = np.sqrt(eigs / m)
    scale[1:steps] *= math.sqrt(0.5)
    scale.flags.writeable = False
    return scale


def _cholesky_block(config: FbmConfig, indices: range) -> np.ndarray:
    if config.steps > CHOLESKY_CAP:
        raise SamplerError(
            f"cholesky sampler capped at {CHOLESKY_CAP} steps, got {config.steps}"
        )
    factor = _cholesky_factor(config.hurst, config.horizon, config.steps)
    z = _normals(config.seed, indices, config.steps)
    out = np.zeros((len(indices), config.steps + 1))
    # Row by row: a batched product may round differently with block size.
    for row in range(z.shape[0]):
        out[row, 1:] = factor @ z[row]
    return out


def _circulant_block(config: FbmConfig, indices: range, eig_tol: float) -> np.ndarray:
    n = config.steps
    if config.hurst == 0.5:
        # Flat spectrum: the embedding reduces to independent increments.
        noise = _normals(config.seed, indices, n) * math.sqrt(config.horizon / n)
        out = np.zeros((len(indices), n + 1))
        np.cumsum(noise, axis=1, out=out[:, 1:])
        return out
    scale = _circulant_sqrt_eigs(config.hurst, n, eig_tol)
    z = _normals(config.seed, indices, 2 * n)
    # Modes 0 and n are real; modes 1..n-1 take one real and one imaginary normal.
    coef = np.empty((len(indices), n + 1), dtype=complex)
    coef.real[:, 0] = z[:, 0]
    coef.imag[:, 0] = 0.0
    coef.real[:, n] = z[:, 1]
    coef.imag[:, n] = 0.0
    coef.real[:, 1:n] = z[:, 2 : n + 1]
    coef.imag[:, 1:n] = z[:, n + 1 : 2 * n]
    coef *= scale
    noise = np.fft.irfft(coef, n=2 * n, axis=1)[:, :n] * (2 * n)
    noise *= (config.horizon / n) ** config.hurst
    out = np.zeros((len(indices), n + 1))
    np.cumsum(noise, axis=1, out=out[:, 1:])
    return out


def sample_paths(
    config: FbmConfig,
    start: int = 0,
    count: int = 1,
    *,
    eig_tol: float = EIG_TOL,
) -> np.ndarray:
    """Replicas ``start .. start+count-1`` as rows of a ``(count, steps+1)`` array."""
    indices = range(start, start + count)
    if config.method is Method.CHOLESKY:
        return _cholesky_block(config, indices)
    return _circulant_block(config, indices, eig_tol)


def sample_cholesky(config: FbmConfig, replica: int = 0) -> SampledPath:
    """One exact fBm path from the Cholesky factor of the grid covariance.

    Cost is cubic in ``steps`` for the (cached) factorization, so ``steps``
    is capped at ``CHOLESKY_CAP``.
    """
    values = _cholesky_block(config, range(replica, replica + 1))[0]
    return SampledPath(config.times, values)


def sample_circulant(
    config: FbmConfig, replica: int = 0, *, eig_tol: float = EIG_TOL
) -> SampledPath:
    """One exact fBm path by circulant embedding of the increment covariance.

    Eigenvalues in ``[-eig_tol * max, 0)`` are clamped to zero; anything more
    negative raises :class:`SamplerError`.
    """
    values = _circulant_block(config, range(replica, replica + 1), eig_tol)[0]
    return SampledPath(config.times, values)
